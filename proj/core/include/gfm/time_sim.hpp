#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gfm/controllers.hpp"
#include "gfm/plant.hpp"

namespace gfm {

// One classic fourth-order Runge-Kutta step of dy/dt = f(t, y).
template <std::size_t N, typename F>
void rk4_step(F&& f, double t, std::array<double, N>& y, double h)
{
    auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
        std::array<double, N> r;
        for (std::size_t i = 0; i < N; ++i)
            r[i] = a[i] + s * b[i];
        return r;
    };
    const std::array<double, N> k1 = f(t, y);
    const std::array<double, N> k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const std::array<double, N> k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const std::array<double, N> k4 = f(t + h, axpy(y, h, k3));
    for (std::size_t i = 0; i < N; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

enum class Quantity { Pref, Qref, Vref, Vdcref, omega_g, Vg };

std::string_view to_string(Quantity q) noexcept;
Quantity quantity_from_string(std::string_view name); // throws ConfigError

struct ScenarioEvent {
    double time = 0.0;
    Quantity quantity = Quantity::Pref;
    double value = 0.0;
};

struct Scenario {
    Setpoints setpoints;
    Disturbance grid;
    std::vector<ScenarioEvent> events; // ordered by time, within [0, duration)
    double duration = 4.0;             // s
    double step = 2e-5;                // s, in (0, 1e-4]
    double prefilter_tau = 0.0;        // s; first-order filter on errors feeding coupling terms (0 = off, else >= step)
    bool fixed_vdc = false;            // pin vdc at Vdcref and force e1 = 0

    void validate() const; // throws ConfigError
    [[nodiscard]] std::size_t steps() const;
};

enum class Channel { vdc, p, omega_u, q, V, iu, Eu };

std::string_view to_string(Channel c) noexcept;
Channel channel_from_string(std::string_view name); // throws ConfigError

struct Trajectory {
    std::vector<double> time;
    std::vector<PlantState> plant;
    std::vector<ControllerState> controller;
    std::vector<PlantOutputs> outputs;
    std::vector<ControlDeviations> deviations;
    std::vector<PlantInputs> inputs;
    PlantInputs nominal;
    bool diverged = false;

    [[nodiscard]] std::size_t size() const noexcept { return time.size(); }
    [[nodiscard]] std::vector<double> channel(Channel c) const;
};

// Fixed-step RK4 of the plant + controller (+ optional pre-filter) closed
// loop, starting from the equilibrium of the initial setpoints. Events take
// effect at the first grid time >= their time. Divergence (|state| > 1e3 or
// non-finite) truncates the trajectory and sets `diverged`.
Trajectory integrate(const PlantParams& prm, const GainSet& gains, const Scenario& scenario);

struct StepMetrics {
    double settling_time = 0.0;  // s after the step, 2% band
    double overshoot_pct = 0.0;
    double steady_value = 0.0;   // mean of the final 20% of the post-step window
    double hf_residue = 0.0;     // RMS above the cutoff in the final 20% window
    double cutoff_hz = 100.0;
};

// Throws ConfigError if fewer than 4096 samples follow step_time.
StepMetrics run_scenario_metrics(const Trajectory& traj, Channel channel, double step_time, double cutoff_hz = 100.0);

// RMS of x after mean removal and zeroing every DFT bin at or below cutoff_hz.
double high_frequency_residue(const std::vector<double>& x, double sample_step, double cutoff_hz);

inline constexpr double kDefaultStepTime = 0.1;

// Pref 0.5 -> 1.0 p.u. at 0.1 s.
Scenario pref_step_scenario(double from = 0.5, double to = 1.0, double duration = 4.0);
// omega_g 1.0 -> 0.998 p.u. (50 Hz -> 49.9 Hz) at 0.1 s.
Scenario grid_frequency_step_scenario(double to = 0.998, double duration = 4.0);

struct ScenarioRun {
    Trajectory trajectory;
    StepMetrics metrics; // on active power
};

ScenarioRun scenario_grid_freq_step(const PlantParams& prm, const GainSet& gains, double duration = 4.0);

// time_s followed by plant states, controller states, outputs and commanded inputs.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::size_t decimate = 1);

} // namespace gfm
