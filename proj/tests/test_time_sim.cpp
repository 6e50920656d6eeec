#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "gfm/error.hpp"
#include "gfm/time_sim.hpp"

using namespace gfm;

namespace {

const PlantParams kPrm = PlantParams::table1();

Scenario hold(double duration)
{
    Scenario sc;
    sc.duration = duration;
    return sc;
}

// A trajectory carrying only a synthetic p channel.
Trajectory synthetic(const std::vector<double>& p, double h)
{
    Trajectory t;
    for (std::size_t i = 0; i < p.size(); ++i) {
        t.time.push_back(static_cast<double>(i) * h);
        PlantOutputs y;
        y.p = p[i];
        t.outputs.push_back(y);
        t.plant.emplace_back();
        t.controller.emplace_back();
        t.deviations.emplace_back();
        t.inputs.emplace_back();
    }
    return t;
}

} // namespace

TEST_SUITE("time_sim")
{
    TEST_CASE("rk4 on dx/dt = -x")
    {
        std::array<double, 1> x{1.0};
        const double h = 0.01;
        for (int i = 0; i < 100; ++i)
            rk4_step([](double, const std::array<double, 1>& y) { return std::array<double, 1>{-y[0]}; },
                     i * h, x, h);
        CHECK(std::abs(x[0] - 0.367879441171) < 1e-8);
    }

    TEST_CASE("scenario validation")
    {
        Scenario sc = pref_step_scenario();
        CHECK_NOTHROW(sc.validate());
        sc.step = 2e-4;
        CHECK_THROWS_AS(sc.validate(), ConfigError);
        sc = pref_step_scenario();
        sc.events.push_back({0.05, Quantity::Pref, 0.7});
        CHECK_THROWS_AS(sc.validate(), ConfigError);
        sc = pref_step_scenario();
        sc.events[0].time = sc.duration;
        CHECK_THROWS_AS(sc.validate(), ConfigError);
        CHECK(quantity_from_string("omega_g") == Quantity::omega_g);
        CHECK_THROWS_AS(quantity_from_string("freq"), ConfigError);
    }

    TEST_CASE("grid length and initial steady state")
    {
        for (const GainSet& g : {GainSet::table2_original(), GainSet::table2_proposed()}) {
            const Trajectory t = integrate(kPrm, g, hold(1.0));
            REQUIRE_FALSE(t.diverged);
            CHECK(t.size() == 50001);
            CHECK(t.time.back() == doctest::Approx(1.0));
            const auto x0 = t.plant.front().to_array();
            const PlantState rates = derivatives(t.plant.front(), t.inputs.front(), Disturbance{}, kPrm);
            for (double r : rates.to_array())
                CHECK(std::abs(r) < 1e-6);
            double worst = 0.0;
            for (const auto& x : t.plant) {
                const auto a = x.to_array();
                for (std::size_t i = 0; i < a.size(); ++i)
                    worst = std::max(worst, std::abs(a[i] - x0[i]));
            }
            CHECK(worst < 1e-6);
        }
    }

    TEST_CASE("Pref step settles on the droop steady state")
    {
        const Trajectory t = integrate(kPrm, GainSet::table2_proposed(), pref_step_scenario());
        REQUIRE_FALSE(t.diverged);
        const StepMetrics p = run_scenario_metrics(t, Channel::p, kDefaultStepTime);
        const StepMetrics w = run_scenario_metrics(t, Channel::omega_u, kDefaultStepTime);
        CHECK(p.steady_value == doctest::Approx(1.0).epsilon(5e-3));
        CHECK(std::abs(w.steady_value - 1.0) < 1e-4);
        CHECK(p.overshoot_pct >= 0.0);
        CHECK(p.settling_time > 0.0);
        CHECK(p.settling_time < 3.9);
        // q + V/Dq tracks Qref + Vref/Dq.
        const PlantOutputs& y = t.outputs.back();
        CHECK(y.q + y.V / kPrm.Dq == doctest::Approx(0.0 + 1.0 / kPrm.Dq).epsilon(1e-4));
    }

    TEST_CASE("grid frequency step raises power by the droop amount")
    {
        for (const GainSet& g : {GainSet::table2_original(), GainSet::table2_proposed()}) {
            const ScenarioRun run = scenario_grid_freq_step(kPrm, g);
            CHECK(run.metrics.steady_value == doctest::Approx(0.5 + 0.002 / 0.01).epsilon(0.01 / 0.7));
            const StepMetrics w = run_scenario_metrics(run.trajectory, Channel::omega_u, kDefaultStepTime);
            CHECK(w.steady_value == doctest::Approx(0.998).epsilon(1e-6));
        }
    }

    TEST_CASE("zero grid frequency change leaves power unchanged")
    {
        Scenario sc = grid_frequency_step_scenario(1.0, 1.0);
        const Trajectory t = integrate(kPrm, GainSet::table2_proposed(), sc);
        CHECK(std::abs(t.outputs.back().p - 0.5) < 1e-6);
    }

    TEST_CASE("non-unity initial grid frequency starts in steady state")
    {
        Scenario sc = hold(0.5);
        sc.grid.omega_g = 0.999;
        const Trajectory t = integrate(kPrm, GainSet::table2_original(), sc);
        CHECK(t.outputs.front().p == doctest::Approx(0.5 + 0.1).epsilon(1e-9));
        CHECK(std::abs(t.outputs.back().p - t.outputs.front().p) < 1e-6);
        CHECK(std::abs(t.outputs.back().omega_u - 0.999) < 1e-9);
    }

    TEST_CASE("step halving changes final values by less than 1e-7")
    {
        Scenario a = pref_step_scenario(0.5, 1.0, 1.0);
        Scenario b = a;
        b.step = a.step / 2.0;
        const Trajectory ta = integrate(kPrm, GainSet::table2_proposed(), a);
        const Trajectory tb = integrate(kPrm, GainSet::table2_proposed(), b);
        CHECK(tb.size() == 2 * ta.size() - 1);
        const auto ya = ta.outputs.back().to_array();
        const auto yb = tb.outputs.back().to_array();
        for (std::size_t i = 0; i < ya.size(); ++i)
            CHECK(std::abs(ya[i] - yb[i]) < 1e-7);
    }

    TEST_CASE("fixed-vdc mode pins the DC link")
    {
        Scenario sc = pref_step_scenario(0.5, 1.0, 0.5);
        sc.fixed_vdc = true;
        const Trajectory t = integrate(kPrm, GainSet::table2_proposed(), sc);
        REQUIRE_FALSE(t.diverged);
        for (const auto& x : t.plant)
            REQUIRE(x.vdc == 1.0);
    }

    TEST_CASE("pre-filter with a short time constant stays close to the unfiltered run")
    {
        Scenario a = pref_step_scenario(0.5, 1.0, 0.5);
        Scenario b = a;
        b.prefilter_tau = 1e-4;
        const Trajectory ta = integrate(kPrm, GainSet::table2_original(), a);
        const Trajectory tb = integrate(kPrm, GainSet::table2_original(), b);
        REQUIRE_FALSE(tb.diverged);
        CHECK(std::abs(ta.outputs.back().p - tb.outputs.back().p) < 1e-3);
        CHECK(std::abs(ta.outputs.back().omega_u - tb.outputs.back().omega_u) < 1e-5);

        // Shorter than the step the explicit integrator cannot follow the filter.
        b.prefilter_tau = 1e-7;
        CHECK_THROWS_AS(b.validate(), ConfigError);
    }

    TEST_CASE("divergence truncates and flags")
    {
        GainSet g = GainSet::table2_proposed();
        g.k_idc = -2811.2;
        g.k_pdc = -18.8801;
        Scenario sc = pref_step_scenario(0.5, 1.0, 2.0);
        const Trajectory t = integrate(kPrm, g, sc);
        CHECK(t.diverged);
        CHECK(t.size() < sc.steps() + 1);
        for (const auto& x : t.plant)
            for (double v : x.to_array())
                REQUIRE(std::isfinite(v));
    }

    TEST_CASE("metrics on synthetic signals")
    {
        const double h = 2e-5;
        const std::size_t n = 20001;
        std::vector<double> constant(n, 0.7);
        const StepMetrics c = run_scenario_metrics(synthetic(constant, h), Channel::p, 0.0);
        CHECK(c.overshoot_pct == 0.0);
        CHECK(c.hf_residue == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(c.steady_value == doctest::Approx(0.7));

        const double a = 0.013;
        std::vector<double> sine(n);
        for (std::size_t i = 0; i < n; ++i)
            sine[i] = 0.7 + a * std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(i) * h);
        const StepMetrics s = run_scenario_metrics(synthetic(sine, h), Channel::p, 0.0);
        CHECK(s.hf_residue == doctest::Approx(a / std::sqrt(2.0)).epsilon(0.01));

        // A 50 Hz tone (exactly on a bin of the 0.08 s window) sits below the cutoff.
        std::vector<double> slow(n);
        for (std::size_t i = 0; i < n; ++i)
            slow[i] = 0.7 + a * std::sin(2.0 * std::numbers::pi * 50.0 * static_cast<double>(i) * h);
        CHECK(run_scenario_metrics(synthetic(slow, h), Channel::p, 0.0).hf_residue < 1e-6 * a);
    }

    TEST_CASE("overshoot and settling of a second-order step")
    {
        const double h = 1e-3, zeta = 0.3, wn = 10.0;
        std::vector<double> y(6001);
        const double wd = wn * std::sqrt(1.0 - zeta * zeta);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double t = static_cast<double>(i) * h;
            y[i] = 1.0 - std::exp(-zeta * wn * t) * (std::cos(wd * t) + zeta / std::sqrt(1.0 - zeta * zeta) * std::sin(wd * t));
        }
        const StepMetrics m = run_scenario_metrics(synthetic(y, h), Channel::p, 0.0);
        const double expected = 100.0 * std::exp(-zeta * std::numbers::pi / std::sqrt(1.0 - zeta * zeta));
        CHECK(m.overshoot_pct == doctest::Approx(expected).epsilon(1e-3));
        CHECK(m.settling_time > 1.0);
        CHECK(m.settling_time < 1.6);
    }

    TEST_CASE("short post-step window is rejected")
    {
        const Trajectory t = synthetic(std::vector<double>(5000, 1.0), 2e-5);
        CHECK_THROWS_AS(run_scenario_metrics(t, Channel::p, 0.03), ConfigError);
    }

    TEST_CASE("trajectory CSV header and decimation")
    {
        const Trajectory t = integrate(kPrm, GainSet::table2_proposed(), hold(0.01));
        std::ostringstream os;
        write_trajectory_csv(os, t, 10);
        std::istringstream is(os.str());
        std::string line;
        std::getline(is, line);
        CHECK(line == "time_s,id,iq,vd,vq,iod,ioq,delta,vdc,x1,x2,x3,p,q,V,omega_u,iu,Eu");
        int rows = 0;
        while (std::getline(is, line))
            ++rows;
        CHECK(rows == 51);
    }
}
