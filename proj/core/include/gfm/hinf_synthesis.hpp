#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gfm/controllers.hpp"
#include "gfm/plant.hpp"
#include "gfm/polynomial.hpp"
#include "gfm/state_space.hpp"

namespace gfm {

struct SisoWeight {
    std::string name;
    Rational tf;
    StateSpaceModel ss;
};

// Weighted pairs (z_i, w_j), in this order:
// (1,1) W11, (2,1) W21, (2,2) W22, (3,1) W31, (3,2) W32, (4,1) W41.
struct WeightSet {
    std::array<SisoWeight, 6> w;

    // All six weights equal to 1.
    static WeightSet unity();
};

struct WeightedPair {
    int z; // 0-based evaluation output
    int w; // 0-based disturbance input
};
inline constexpr std::array<WeightedPair, 6> weighted_pairs = {
    WeightedPair{0, 0}, WeightedPair{1, 0}, WeightedPair{1, 1},
    WeightedPair{2, 0}, WeightedPair{2, 1}, WeightedPair{3, 0},
};

// The fixed weighting functions, each as a rational form and an independent
// first-order-section state-space realization.
WeightSet weight_filters();

struct GainBounds {
    double max_abs = 1e4;
    double k22_min = 1e-3;
    double k22_max = 1e3;
};

struct SynthesisProblem {
    PlantParams plant = PlantParams::table1();
    Setpoints setpoints;
    Disturbance disturbance;
    ControllerKind kind = ControllerKind::proposed;
    WeightSet weights = weight_filters();
    GainBounds bounds;
    // Gains held at their K0 values during tuning (by name, e.g. "k12").
    std::vector<std::string> frozen;

    // Plant linearization at the operating point; filled by prepare().
    StateSpaceModel plant_model;

    // Solves the equilibrium and linearizes the plant there.
    void prepare();
    // Convenience: default Table I problem for a kind, already prepared.
    static SynthesisProblem table1(ControllerKind kind);
};

// Closed loop from w = [Pref, omega_g] to z = [Pref - p, p, omega_u, q + V/Dq].
StateSpaceModel generalized_closed_loop(const GainSet& K, const SynthesisProblem& prob);

enum class WeightEvaluation { state_space, rational };

struct ObjectiveValue {
    double value = 0.0;
    double abscissa = 0.0;
    bool stable = false;
};

inline constexpr double kInstabilityPenalty = 1e6;

// Max over the six weighted pairs of ||W_ij T_ij||_inf for a stable loop,
// otherwise kInstabilityPenalty + spectral abscissa. Validates K first (ConfigError).
ObjectiveValue evaluate_objective(const GainSet& K, const SynthesisProblem& prob,
                                  WeightEvaluation mode = WeightEvaluation::state_space);
double weighted_objective(const GainSet& K, const SynthesisProblem& prob,
                          WeightEvaluation mode = WeightEvaluation::state_space);

// Names of the gains the tuner moves for a kind (before freezing).
std::vector<std::string> tunable_gains(ControllerKind kind);
double& gain_ref(GainSet& g, const std::string& name);
double gain_value(const GainSet& g, const std::string& name);

struct TuneOptions {
    std::uint64_t seed = 1;
    int max_evals = 2000;
    int restarts = 4;
};

struct TuneHistoryEntry {
    int evaluations = 0;
    double gamma = 0.0;
    double abscissa = 0.0;
};

struct TuneResult {
    GainSet best;
    double gamma = 0.0;
    double abscissa = 0.0;
    std::vector<TuneHistoryEntry> history;
    std::uint64_t seed = 0;
    int evaluations = 0;
    bool found_stable = false;
};

// Seeded multi-start Nelder-Mead over asinh-scaled gains (log-scaled k22).
// The first start is K0 itself, so gamma(best) <= gamma(K0).
TuneResult tune(const SynthesisProblem& prob, const GainSet& K0, const TuneOptions& options);

} // namespace gfm
