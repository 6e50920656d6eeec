#include "gfm/time_sim.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>

#include "gfm/error.hpp"

namespace gfm {

std::string_view to_string(Quantity q) noexcept
{
    switch (q) {
    case Quantity::Pref:
        return "Pref";
    case Quantity::Qref:
        return "Qref";
    case Quantity::Vref:
        return "Vref";
    case Quantity::Vdcref:
        return "Vdcref";
    case Quantity::omega_g:
        return "omega_g";
    case Quantity::Vg:
        return "Vg";
    }
    return "unknown";
}

Quantity quantity_from_string(std::string_view name)
{
    for (Quantity q : {Quantity::Pref, Quantity::Qref, Quantity::Vref, Quantity::Vdcref, Quantity::omega_g,
                       Quantity::Vg})
        if (name == to_string(q))
            return q;
    throw ConfigError("unknown scenario quantity '" + std::string(name) + "'");
}

std::string_view to_string(Channel c) noexcept
{
    switch (c) {
    case Channel::vdc:
        return "vdc";
    case Channel::p:
        return "p";
    case Channel::omega_u:
        return "omega_u";
    case Channel::q:
        return "q";
    case Channel::V:
        return "V";
    case Channel::iu:
        return "iu";
    case Channel::Eu:
        return "Eu";
    }
    return "unknown";
}

Channel channel_from_string(std::string_view name)
{
    for (Channel c : {Channel::vdc, Channel::p, Channel::omega_u, Channel::q, Channel::V, Channel::iu, Channel::Eu})
        if (name == to_string(c))
            return c;
    throw ConfigError("unknown trajectory channel '" + std::string(name) + "'");
}

void Scenario::validate() const
{
    if (!(step > 0.0) || step > 1e-4)
        throw ConfigError("integration step must be in (0, 1e-4] s");
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw ConfigError("scenario duration must be positive");
    if (prefilter_tau < 0.0 || (prefilter_tau > 0.0 && prefilter_tau < step))
        throw ConfigError("pre-filter time constant must be 0 (off) or at least the integration step");
    double last = 0.0;
    for (const auto& ev : events) {
        if (ev.time < 0.0 || ev.time >= duration)
            throw ConfigError("scenario event outside [0, duration)");
        if (ev.time < last)
            throw ConfigError("scenario events must be time-ordered");
        last = ev.time;
    }
    if (!(setpoints.Vdcref > 0.0))
        throw ConfigError("Vdcref must be positive");
}

std::size_t Scenario::steps() const { return static_cast<std::size_t>(std::llround(duration / step)); }

std::vector<double> Trajectory::channel(Channel c) const
{
    std::vector<double> v(size());
    for (std::size_t i = 0; i < size(); ++i) {
        switch (c) {
        case Channel::vdc:
            v[i] = outputs[i].vdc;
            break;
        case Channel::p:
            v[i] = outputs[i].p;
            break;
        case Channel::omega_u:
            v[i] = outputs[i].omega_u;
            break;
        case Channel::q:
            v[i] = outputs[i].q;
            break;
        case Channel::V:
            v[i] = outputs[i].V;
            break;
        case Channel::iu:
            v[i] = inputs[i].iu;
            break;
        case Channel::Eu:
            v[i] = inputs[i].Eu;
            break;
        }
    }
    return v;
}

namespace {

// Closed-loop state layout: 8 plant, 3 controller, 5 filtered errors.
constexpr std::size_t kStates = 16;
using State = std::array<double, kStates>;

struct Signals {
    PlantState x;
    ControllerState xc;
    ErrorVector e;
    ErrorVector ef;
    ControlDeviations dev;
    PlantInputs u;
};

class ClosedLoop {
public:
    ClosedLoop(const PlantParams& prm, const GainSet& g, const Scenario& sc, const PlantInputs& nominal)
        : prm_(prm), g_(g), gd_(g.decoupled()), sc_(sc), droop_{prm.Dp, prm.Dq}, nominal_(nominal)
    {
    }

    Setpoints sp;
    Disturbance d;

    [[nodiscard]] bool filtered() const noexcept { return sc_.prefilter_tau > 0.0; }

    [[nodiscard]] ErrorVector errors(const PlantState& x) const
    {
        const PlantOutputs y = outputs(x, PlantInputs{});
        ErrorVector e;
        e[0] = sc_.fixed_vdc ? 0.0 : sp.Vdcref - y.vdc;
        e[1] = sp.Pref - y.p;
        e[2] = 0.0; // omega_ref channel has no gain in any kind
        e[3] = sp.Qref - y.q;
        e[4] = sp.Vref - y.V;
        return e;
    }

    [[nodiscard]] Signals signals(const State& z) const
    {
        Signals s;
        s.x = PlantState{z[0], z[1], z[2], z[3], z[4], z[5], z[6], z[7]};
        if (sc_.fixed_vdc)
            s.x.vdc = sp.Vdcref;
        s.xc = ControllerState{z[8], z[9], z[10]};
        s.e = errors(s.x);
        for (std::size_t i = 0; i < 5; ++i)
            s.ef[i] = filtered() ? z[11 + i] : s.e[i];
        s.dev = output(s.xc, s.e, s.ef);
        s.u = PlantInputs{nominal_.iu + s.dev.iu_dev, nominal_.omega_u + s.dev.omega_dev, nominal_.Eu + s.dev.Eu_dev};
        return s;
    }

    State operator()(double, const State& z) const
    {
        const Signals s = signals(z);
        const PlantState dx = derivatives(s.x, s.u, d, prm_);
        const ControllerState dxc = derivative(s.xc, s.e, s.ef);
        State r{};
        const auto a = dx.to_array();
        std::copy(a.begin(), a.end(), r.begin());
        if (sc_.fixed_vdc)
            r[7] = 0.0;
        r[8] = dxc.x1;
        r[9] = dxc.x2;
        r[10] = dxc.x3;
        if (filtered())
            for (std::size_t i = 0; i < 5; ++i)
                r[11 + i] = (s.e[i] - s.ef[i]) / sc_.prefilter_tau;
        return r;
    }

private:
    // Diagonal terms see the raw errors; coupling terms see the filtered ones.
    [[nodiscard]] ControlDeviations output(const ControllerState& xc, const ErrorVector& e, const ErrorVector& ef) const
    {
        if (!filtered())
            return controller_output(g_, xc, e, droop_);
        const ControlDeviations a = controller_output(gd_, xc, e, droop_);
        const ControlDeviations b = controller_output(g_, xc, ef, droop_);
        const ControlDeviations c = controller_output(gd_, xc, ef, droop_);
        return {a.iu_dev + b.iu_dev - c.iu_dev, a.omega_dev + b.omega_dev - c.omega_dev,
                a.Eu_dev + b.Eu_dev - c.Eu_dev};
    }

    [[nodiscard]] ControllerState derivative(const ControllerState& xc, const ErrorVector& e,
                                             const ErrorVector& ef) const
    {
        if (!filtered())
            return controller_derivative(g_, xc, e, droop_);
        const ControllerState a = controller_derivative(gd_, xc, e, droop_);
        const ControllerState b = controller_derivative(g_, xc, ef, droop_);
        const ControllerState c = controller_derivative(gd_, xc, ef, droop_);
        return {a.x1 + b.x1 - c.x1, a.x2 + b.x2 - c.x2, a.x3 + b.x3 - c.x3};
    }

    PlantParams prm_;
    GainSet g_;
    GainSet gd_;
    Scenario sc_;
    Droop droop_;
    PlantInputs nominal_;
};

void apply(Setpoints& sp, Disturbance& d, const ScenarioEvent& ev)
{
    switch (ev.quantity) {
    case Quantity::Pref:
        sp.Pref = ev.value;
        break;
    case Quantity::Qref:
        sp.Qref = ev.value;
        break;
    case Quantity::Vref:
        sp.Vref = ev.value;
        break;
    case Quantity::Vdcref:
        sp.Vdcref = ev.value;
        break;
    case Quantity::omega_g:
        d.omega_g = ev.value;
        break;
    case Quantity::Vg:
        d.Vg = ev.value;
        break;
    }
}

} // namespace

Trajectory integrate(const PlantParams& prm, const GainSet& gains, const Scenario& scenario)
{
    scenario.validate();
    gains.validate();
    prm.validate();

    const Equilibrium eq = find_equilibrium(prm, scenario.setpoints, scenario.grid);
    Trajectory traj;
    traj.nominal = PlantInputs{eq.u.iu, 1.0, eq.u.Eu};

    ClosedLoop loop(prm, gains, scenario, traj.nominal);
    loop.sp = scenario.setpoints;
    loop.d = scenario.grid;

    // Controller states that reproduce the equilibrium command with the
    // equilibrium errors; the output map is identity in the states for every kind.
    const ErrorVector e0 = loop.errors(eq.x);
    const ControlDeviations dev_target{0.0, eq.u.omega_u - 1.0, 0.0};
    const ControlDeviations fed = controller_output(gains, ControllerState{}, e0, Droop{prm.Dp, prm.Dq});
    State z{};
    const auto xa = eq.x.to_array();
    std::copy(xa.begin(), xa.end(), z.begin());
    z[8] = dev_target.iu_dev - fed.iu_dev;
    z[9] = dev_target.omega_dev - fed.omega_dev;
    z[10] = dev_target.Eu_dev - fed.Eu_dev;
    for (std::size_t i = 0; i < 5; ++i)
        z[11 + i] = e0[i];

    const std::size_t n = scenario.steps();
    const double h = scenario.step;
    traj.time.reserve(n + 1);
    traj.plant.reserve(n + 1);
    traj.controller.reserve(n + 1);
    traj.outputs.reserve(n + 1);
    traj.deviations.reserve(n + 1);
    traj.inputs.reserve(n + 1);

    std::size_t next_event = 0;
    for (std::size_t i = 0;; ++i) {
        const double t = static_cast<double>(i) * h;
        while (next_event < scenario.events.size() && scenario.events[next_event].time <= t + 1e-9 * h) {
            apply(loop.sp, loop.d, scenario.events[next_event]);
            ++next_event;
        }
        const Signals s = loop.signals(z);
        traj.time.push_back(t);
        traj.plant.push_back(s.x);
        traj.controller.push_back(s.xc);
        traj.outputs.push_back(outputs(s.x, s.u));
        traj.deviations.push_back(s.dev);
        traj.inputs.push_back(s.u);
        if (i == n)
            break;

        rk4_step(loop, t, z, h);
        const bool bad = std::any_of(z.begin(), z.end(), [](double v) { return !std::isfinite(v) || std::abs(v) > 1e3; }) ||
                         !(z[7] > 0.0);
        if (bad) {
            traj.diverged = true;
            break;
        }
    }
    return traj;
}

double high_frequency_residue(const std::vector<double>& x, double sample_step, double cutoff_hz)
{
    const std::size_t N = x.size();
    if (N < 2)
        return 0.0;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(N);
    std::vector<double> w(N);
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        w[i] = x[i] - mean;
        total += w[i] * w[i];
    }

    // Energy of the retained-low bins |f_k| <= cutoff; Parseval gives the rest.
    const double df = 1.0 / (static_cast<double>(N) * sample_step);
    const auto kmax = std::min<std::size_t>(static_cast<std::size_t>(std::floor(cutoff_hz / df)), (N - 1) / 2);
    double low = 0.0;
    for (std::size_t k = 0; k <= kmax; ++k) {
        std::complex<double> X{0.0, 0.0};
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t m = (k * i) % N;
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(N);
            X += w[i] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        low += (k == 0 ? 1.0 : 2.0) * std::norm(X);
    }
    const double hf = total / static_cast<double>(N) - low / (static_cast<double>(N) * static_cast<double>(N));
    return std::sqrt(std::max(0.0, hf));
}

StepMetrics run_scenario_metrics(const Trajectory& traj, Channel channel, double step_time, double cutoff_hz)
{
    const std::vector<double> y = traj.channel(channel);
    const auto first = static_cast<std::size_t>(
        std::lower_bound(traj.time.begin(), traj.time.end(), step_time - 1e-12) - traj.time.begin());
    if (first >= traj.size() || traj.size() - first < 4096)
        throw ConfigError(fmt::format("metrics window too short: need >= 4096 samples after t = {} s", step_time));

    const std::size_t npost = traj.size() - first;
    const std::size_t nfinal = std::max<std::size_t>(2, npost / 5);
    const std::size_t fbegin = traj.size() - nfinal;
    const double h = traj.time[1] - traj.time[0];

    StepMetrics m;
    m.cutoff_hz = cutoff_hz;
    m.steady_value = std::accumulate(y.begin() + static_cast<std::ptrdiff_t>(fbegin), y.end(), 0.0) /
                     static_cast<double>(nfinal);
    const double before = y[first == 0 ? 0 : first - 1];
    const double amplitude = m.steady_value - before;
    double excursion = 0.0;
    for (std::size_t i = first; i < traj.size(); ++i)
        excursion = std::max(excursion, std::abs(y[i] - m.steady_value));

    // A channel that returns to its pre-step value has no overshoot; its
    // settling band is then 2% of the largest post-step excursion.
    const bool stepped = std::abs(amplitude) > 1e-3 * excursion && std::abs(amplitude) > 1e-12;
    const double band = 0.02 * (stepped ? std::abs(amplitude) : excursion);
    std::size_t last_out = traj.size();
    for (std::size_t i = first; i < traj.size(); ++i)
        if (std::abs(y[i] - m.steady_value) > band)
            last_out = i;
    if (last_out != traj.size())
        m.settling_time = traj.time[std::min(last_out + 1, traj.size() - 1)] - traj.time[first];
    if (stepped) {
        const double dir = amplitude > 0.0 ? 1.0 : -1.0;
        double peak = 0.0;
        for (std::size_t i = first; i < traj.size(); ++i)
            peak = std::max(peak, (y[i] - m.steady_value) * dir);
        m.overshoot_pct = 100.0 * peak / std::abs(amplitude);
    }
    m.hf_residue = high_frequency_residue(
        std::vector<double>(y.begin() + static_cast<std::ptrdiff_t>(fbegin), y.end()), h, cutoff_hz);
    return m;
}

Scenario pref_step_scenario(double from, double to, double duration)
{
    Scenario sc;
    sc.setpoints.Pref = from;
    sc.duration = duration;
    sc.events.push_back({kDefaultStepTime, Quantity::Pref, to});
    return sc;
}

Scenario grid_frequency_step_scenario(double to, double duration)
{
    Scenario sc;
    sc.duration = duration;
    sc.events.push_back({kDefaultStepTime, Quantity::omega_g, to});
    return sc;
}

ScenarioRun scenario_grid_freq_step(const PlantParams& prm, const GainSet& gains, double duration)
{
    ScenarioRun run;
    run.trajectory = integrate(prm, gains, grid_frequency_step_scenario(0.998, duration));
    if (run.trajectory.diverged)
        throw NumericalError("grid-frequency step scenario diverged");
    run.metrics = run_scenario_metrics(run.trajectory, Channel::p, kDefaultStepTime);
    return run;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::size_t decimate)
{
    if (decimate == 0)
        decimate = 1;
    os << "time_s,id,iq,vd,vq,iod,ioq,delta,vdc,x1,x2,x3,p,q,V,omega_u,iu,Eu\n";
    for (std::size_t i = 0; i < traj.size(); i += decimate) {
        const auto& x = traj.plant[i];
        const auto& c = traj.controller[i];
        const auto& y = traj.outputs[i];
        const auto& u = traj.inputs[i];
        fmt::print(os, "{:.8f},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},"
                       "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                   traj.time[i], x.id, x.iq, x.vd, x.vq, x.iod, x.ioq, x.wrapped_delta(), x.vdc, c.x1, c.x2, c.x3, y.p,
                   y.q, y.V, y.omega_u, u.iu, u.Eu);
    }
}

} // namespace gfm
