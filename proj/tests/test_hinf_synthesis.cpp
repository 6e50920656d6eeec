#include <doctest.h>

#include <cmath>
#include <complex>

#include "gfm/error.hpp"
#include "gfm/hinf_norm.hpp"
#include "gfm/hinf_synthesis.hpp"
#include "gfm/linear_analysis.hpp"

using namespace gfm;
using cplx = std::complex<double>;

namespace {

// The six weights written out directly.
cplx published_weight(int k, cplx s)
{
    const cplx lead = (1.447e-3 * s + 1.0) / (1.447e-5 * s + 1.0);
    switch (k) {
    case 0:
        return (s + 4.0) / (s + 0.0004);
    case 1:
        return lead * lead;
    case 2:
        return lead / 100.0;
    case 3:
        return (1.0 / 0.015) * s / (1.447e-5 * s + 1.0);
    case 4:
        return lead;
    default:
        return (s + 60.0) / (s + 0.006);
    }
}

const SynthesisProblem& proposed_problem()
{
    static const SynthesisProblem prob = SynthesisProblem::table1(ControllerKind::proposed);
    return prob;
}

} // namespace

TEST_SUITE("hinf_synthesis")
{
    TEST_CASE("weight magnitudes at the band edges")
    {
        const WeightSet ws = weight_filters();
        CHECK(std::abs(ws.w[2].tf(0.0)) == doctest::Approx(0.01));
        CHECK(std::abs(ws.w[5].tf(0.0)) == doctest::Approx(1e4));
        CHECK(std::abs(ws.w[0].tf(0.0)) == doctest::Approx(1e4));
        CHECK(std::abs(ws.w[1].ss.D(0, 0)) == doctest::Approx(1e4));
        CHECK(std::abs(ws.w[1].tf(cplx{0.0, 1e12})) == doctest::Approx(1e4).epsilon(1e-6));
    }

    TEST_CASE("weight realizations match the published forms")
    {
        const WeightSet ws = weight_filters();
        const std::vector<double> grid = log_grid(1e-4, 1e7, 120);
        for (int k = 0; k < 6; ++k) {
            CAPTURE(ws.w[k].name);
            for (double w : grid) {
                const cplx s{0.0, w};
                const cplx ref = published_weight(k, s);
                CHECK(std::abs(ws.w[k].tf(s) - ref) <= 1e-9 * std::abs(ref));
                // W31 has a large feedthrough, so its low-frequency values are a cancellation.
                CHECK(std::abs(ws.w[k].ss.response(s)(0, 0) - ref) <= 1e-9 * std::max(1.0, std::abs(ref)));
            }
        }
    }

    TEST_CASE("generalized closed loop obeys the droop identities at DC")
    {
        const StateSpaceModel T = generalized_closed_loop(GainSet::table2_proposed(), proposed_problem());
        CHECK(T.inputs() == 2);
        CHECK(T.outputs() == 4);
        CHECK(is_stable(T).stable);
        const Eigen::MatrixXcd G = T.response(0.0);
        // rows: Pref - p, p, omega_u, q + V/Dq; columns: Pref, omega_g
        CHECK(std::abs(G(0, 0)) < 1e-8);
        CHECK(G(1, 0).real() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(G(1, 1).real() == doctest::Approx(-1.0 / 0.01).epsilon(1e-8));
        CHECK(std::abs(G(2, 0)) < 1e-8);
        CHECK(G(2, 1).real() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::abs(G(3, 0)) < 1e-8);
        CHECK(std::abs(G(3, 1)) < 1e-6);
    }

    TEST_CASE("objective: state-space and rational weights agree")
    {
        for (const GainSet& g : {GainSet::table2_proposed(), GainSet::table2_original()}) {
            const SynthesisProblem prob = SynthesisProblem::table1(g.kind);
            const ObjectiveValue a = evaluate_objective(g, prob, WeightEvaluation::state_space);
            const ObjectiveValue b = evaluate_objective(g, prob, WeightEvaluation::rational);
            CHECK(a.stable);
            CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
            CHECK(a.value > 0.0);
        }
    }

    TEST_CASE("objective with unity weights equals the worst pairwise norm")
    {
        SynthesisProblem prob = proposed_problem();
        prob.weights = WeightSet::unity();
        const GainSet g = GainSet::table2_proposed();
        const StateSpaceModel T = generalized_closed_loop(g, prob);
        double worst = 0.0;
        for (const auto& pr : weighted_pairs)
            worst = std::max(worst, hinf_norm(T.select({T.input_names[pr.w]}, {T.output_names[pr.z]}),
                                              HinfMethod::bisection));
        CHECK(evaluate_objective(g, prob).value == doctest::Approx(worst).epsilon(1e-3));
    }

    TEST_CASE("unstable gains are penalised")
    {
        const SynthesisProblem prob = SynthesisProblem::table1(ControllerKind::vsg);
        const ObjectiveValue v = evaluate_objective(GainSet::vsg_from_original(), prob);
        CHECK_FALSE(v.stable);
        CHECK(v.value >= kInstabilityPenalty);
        CHECK(v.value == doctest::Approx(kInstabilityPenalty + v.abscissa));
    }

    TEST_CASE("invalid gain sets are config errors")
    {
        GainSet g = GainSet::table2_proposed();
        g.k22 = -1.0;
        CHECK_THROWS_AS(evaluate_objective(g, proposed_problem()), ConfigError);
    }

    TEST_CASE("tunable gains per kind")
    {
        CHECK(tunable_gains(ControllerKind::vsg).size() == 4);
        CHECK(tunable_gains(ControllerKind::mimo_gfm).size() == 11);
        CHECK(tunable_gains(ControllerKind::proposed).size() == 10);
        GainSet g = GainSet::table2_proposed();
        gain_ref(g, "k24") = 0.5;
        CHECK(gain_value(g, "k24") == 0.5);
        CHECK_THROWS_AS(gain_ref(g, "k99"), ConfigError);
    }

    TEST_CASE("tuner is deterministic and never worse than its start")
    {
        const SynthesisProblem& prob = proposed_problem();
        const GainSet K0 = GainSet::table2_proposed();
        TuneOptions opt;
        opt.seed = 5;
        opt.max_evals = 150;
        opt.restarts = 2;
        const TuneResult a = tune(prob, K0, opt);
        const TuneResult b = tune(prob, K0, opt);
        CHECK(a.best == b.best);
        CHECK(a.gamma == b.gamma);
        CHECK(a.history.size() == b.history.size());
        CHECK(a.evaluations <= 150);
        CHECK(a.seed == 5);
        CHECK(a.found_stable);
        CHECK(a.gamma <= weighted_objective(K0, prob));
        CHECK(a.gamma == doctest::Approx(weighted_objective(a.best, prob)));
        CHECK_NOTHROW(a.best.validate());
    }

    TEST_CASE("frozen gains keep their starting values")
    {
        SynthesisProblem prob = proposed_problem();
        prob.frozen = {"k21", "k_pdc"};
        const GainSet K0 = GainSet::table2_proposed();
        TuneOptions opt;
        opt.max_evals = 60;
        opt.restarts = 1;
        const TuneResult r = tune(prob, K0, opt);
        CHECK(r.best.k21 == K0.k21);
        CHECK(r.best.k_pdc == K0.k_pdc);
        CHECK(r.best.k15 == 0.0);
    }

    TEST_CASE("kind mismatch between problem and start is rejected")
    {
        TuneOptions opt;
        opt.max_evals = 10;
        CHECK_THROWS_AS(tune(proposed_problem(), GainSet::table2_original(), opt), ConfigError);
    }
}
