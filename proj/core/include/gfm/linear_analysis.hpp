#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gfm/controllers.hpp"
#include "gfm/plant.hpp"
#include "gfm/state_space.hpp"

namespace gfm {

// Channel names used by the linear models.
namespace channel {
inline const std::vector<std::string> plant_inputs = {"iu", "omega_u", "Eu", "omega_g", "Vg"};
inline const std::vector<std::string> plant_outputs = {"vdc", "p", "omega_u", "q", "V"};
inline const std::vector<std::string> references = {"ref.vdc", "ref.p", "ref.omega", "ref.q", "ref.V"};
inline const std::vector<std::string> injections = {"inj.e1", "inj.e2", "inj.e3", "inj.e4", "inj.e5"};
inline const std::vector<std::string> errors = {"e1", "e2", "e3", "e4", "e5"};
inline const std::vector<std::string> commands = {"u.iu", "u.omega_u", "u.Eu"};
} // namespace channel

// Receives non-fatal diagnostics (default: stderr). Pass an empty function to restore the default.
void set_warning_handler(std::function<void(std::string_view)> handler);
void warn(std::string_view message);

// Central-difference Jacobians of the plant about (x0, u0, d0).
// Inputs [iu, omega_u, Eu, omega_g, Vg], outputs [vdc, p, omega_u, q, V].
// Warns (does not throw) when x0 is not an equilibrium; throws DomainError if vdc0 <= step.
StateSpaceModel linearize(const PlantState& x0, const PlantInputs& u0, const Disturbance& d0,
                          const PlantParams& prm, double step = 1e-6);

// Unity-feedback interconnection e = Yref + inj - y, u = u0 + Phi e.
// Inputs  [ref.vdc ref.p ref.omega ref.q ref.V omega_g Vg inj.e1..inj.e5]
// Outputs [vdc p omega_u q V e1..e5 u.iu u.omega_u u.Eu]
// Throws AlgebraicLoopError if the loop feedthrough has spectral radius >= 1.
StateSpaceModel close_loop(const StateSpaceModel& plant, const GainSet& g, const PlantParams& prm);

struct StabilityReport {
    bool stable = false;
    double abscissa = 0.0; // max Re(eig(A)); -inf for a static model
};

StabilityReport is_stable(const StateSpaceModel& ss);

struct FrequencyPoint {
    double omega = 0.0;
    std::complex<double> value;
    bool near_singular = false;

    [[nodiscard]] double magnitude_db() const;
    [[nodiscard]] double phase_deg() const;
};

struct FrequencyResponseTable {
    std::string input;
    std::string output;
    std::vector<FrequencyPoint> rows;
};

// n log-spaced points on [lo, hi], endpoints included.
std::vector<double> log_grid(double lo, double hi, int n);

// Default Bode export grid: 400 points on [1e-1, 1e6] rad/s.
std::vector<double> bode_grid();

// Throws ConfigError unless grid is positive and strictly increasing.
FrequencyResponseTable frequency_response(const StateSpaceModel& ss, std::string_view input, std::string_view output,
                                          std::span<const double> grid);

// Least-squares slope of 20 log10|H| against log10(omega) over [w1, w2], in dB/decade.
// Throws ConfigError with fewer than 5 grid points in range.
double magnitude_slope(const FrequencyResponseTable& table, double w1, double w2);

// CSV: header comments, then omega_rad_s,mag_dB,phase_deg with unwrapped phase.
void write_bode_csv(std::ostream& os, const FrequencyResponseTable& table);

} // namespace gfm
