#include "gfm/hinf_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gfm/error.hpp"
#include "gfm/hinf_norm.hpp"
#include "gfm/linear_analysis.hpp"
#include "gfm/nelder_mead.hpp"

namespace gfm {

namespace {

StateSpaceModel first_order(double a, double b, double c, double d)
{
    StateSpaceModel ss;
    ss.A = Eigen::MatrixXd::Constant(1, 1, a);
    ss.B = Eigen::MatrixXd::Constant(1, 1, b);
    ss.C = Eigen::MatrixXd::Constant(1, 1, c);
    ss.D = Eigen::MatrixXd::Constant(1, 1, d);
    ss.input_names = {"in"};
    ss.output_names = {"out"};
    return ss;
}

// (lead*s + 1)/(lag*s + 1) = lead/lag + (1 - lead/lag)/(lag*s + 1)
StateSpaceModel lead_lag(double lead, double lag, double gain = 1.0)
{
    return first_order(-1.0 / lag, 1.0, gain * (1.0 - lead / lag) / lag, gain * lead / lag);
}

// (s + zero)/(s + pole)
StateSpaceModel zero_pole(double zero, double pole) { return first_order(-pole, 1.0, zero - pole, 1.0); }

Rational lead_lag_tf(double lead, double lag, double gain = 1.0)
{
    return {Polynomial{gain, gain * lead}, Polynomial{1.0, lag}};
}

constexpr double kLead = 1.447e-3;
constexpr double kLag = 1.447e-5;

StateSpaceModel static_one()
{
    StateSpaceModel ss = StateSpaceModel::gain(Eigen::MatrixXd::Ones(1, 1));
    ss.input_names = {"in"};
    ss.output_names = {"out"};
    return ss;
}

Eigen::MatrixXd block_diag(const std::vector<const Eigen::MatrixXd*>& blocks)
{
    Eigen::Index n = 0;
    for (const auto* b : blocks)
        n += b->rows();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index k = 0;
    for (const auto* b : blocks) {
        M.block(k, k, b->rows(), b->cols()) = *b;
        k += b->rows();
    }
    return M;
}

const std::vector<std::string> kAllGains = {"k_pdc", "k_idc", "k12", "k14", "k15", "k21",
                                            "k22",   "k24",   "k31", "k32", "k34"};

} // namespace

WeightSet WeightSet::unity()
{
    WeightSet ws;
    const char* names[] = {"W11", "W21", "W22", "W31", "W32", "W41"};
    for (std::size_t i = 0; i < 6; ++i)
        ws.w[i] = {names[i], Rational::constant(1.0), static_one()};
    return ws;
}

WeightSet weight_filters()
{
    WeightSet ws;
    ws.w[0] = {"W11", {Polynomial{4.0, 1.0}, Polynomial{0.0004, 1.0}}, zero_pole(4.0, 0.0004)};
    {
        const Rational one = lead_lag_tf(kLead, kLag);
        StateSpaceModel sq = series(lead_lag(kLead, kLag), lead_lag(kLead, kLag));
        ws.w[1] = {"W21", one * one, std::move(sq)};
    }
    ws.w[2] = {"W22", lead_lag_tf(kLead, kLag, 1.0 / 100.0), lead_lag(kLead, kLag, 1.0 / 100.0)};
    {
        const double k = 1.0 / 0.015;
        ws.w[3] = {"W31", {Polynomial{0.0, k}, Polynomial{1.0, kLag}},
                   first_order(-1.0 / kLag, 1.0, -k / (kLag * kLag), k / kLag)};
    }
    ws.w[4] = {"W32", lead_lag_tf(kLead, kLag), lead_lag(kLead, kLag)};
    ws.w[5] = {"W41", {Polynomial{60.0, 1.0}, Polynomial{0.006, 1.0}}, zero_pole(60.0, 0.006)};
    return ws;
}

void SynthesisProblem::prepare()
{
    const Equilibrium eq = find_equilibrium(plant, setpoints, disturbance);
    plant_model = linearize(eq.x, eq.u, disturbance, plant);
}

SynthesisProblem SynthesisProblem::table1(ControllerKind kind)
{
    SynthesisProblem prob;
    prob.kind = kind;
    prob.prepare();
    return prob;
}

StateSpaceModel generalized_closed_loop(const GainSet& K, const SynthesisProblem& prob)
{
    if (prob.plant_model.states() == 0)
        throw ConfigError("synthesis problem is not prepared (no plant linearization)");
    const StateSpaceModel cl = close_loop(prob.plant_model, K, prob.plant);
    const StateSpaceModel sel = cl.select({"ref.p", "omega_g"}, {"e2", "p", "omega_u", "q", "V"});

    StateSpaceModel T;
    T.A = sel.A;
    T.B = sel.B;
    T.C.resize(4, sel.states());
    T.D.resize(4, 2);
    T.C.topRows(3) = sel.C.topRows(3);
    T.D.topRows(3) = sel.D.topRows(3);
    T.C.row(3) = sel.C.row(3) + sel.C.row(4) / prob.plant.Dq;
    T.D.row(3) = sel.D.row(3) + sel.D.row(4) / prob.plant.Dq;
    T.input_names = {"Pref", "omega_g"};
    T.output_names = {"Pref-p", "p", "omega_u", "q+V/Dq"};
    return T;
}

ObjectiveValue evaluate_objective(const GainSet& K, const SynthesisProblem& prob, WeightEvaluation mode)
{
    K.validate();
    const StateSpaceModel T = generalized_closed_loop(K, prob);
    const StabilityReport st = is_stable(T);
    if (!st.stable)
        return {kInstabilityPenalty + st.abscissa, st.abscissa, false};

    const FrequencyEvaluator eT(T);
    std::vector<FrequencyEvaluator> eW;
    eW.reserve(6);
    for (const auto& w : prob.weights.w)
        eW.emplace_back(w.ss);

    auto weight_at = [&](std::size_t k, double omega) -> std::complex<double> {
        if (mode == WeightEvaluation::rational)
            return prob.weights.w[k].tf(std::complex<double>(0.0, omega));
        return eW[k].at(omega)(0, 0);
    };
    auto gain = [&](double omega) {
        const Eigen::MatrixXcd G = eT.at(omega);
        double g = 0.0;
        for (std::size_t k = 0; k < weighted_pairs.size(); ++k)
            g = std::max(g, std::abs(weight_at(k, omega) * G(weighted_pairs[k].z, weighted_pairs[k].w)));
        return g;
    };

    double value = gain(0.0);
    // omega -> infinity: product of feedthroughs
    for (std::size_t k = 0; k < weighted_pairs.size(); ++k) {
        const auto& w = prob.weights.w[k];
        const double wd = mode == WeightEvaluation::rational
                              ? (w.tf.is_strictly_proper() ? 0.0
                                                           : w.tf.num.coeff(w.tf.den.degree()) /
                                                                 w.tf.den.coeff(w.tf.den.degree()))
                              : w.ss.D(0, 0);
        value = std::max(value, std::abs(wd * T.D(weighted_pairs[k].z, weighted_pairs[k].w)));
    }

    std::vector<const Eigen::MatrixXd*> blocks{&T.A};
    for (const auto& w : prob.weights.w)
        blocks.push_back(&w.ss.A);
    const SearchBand band = search_band(block_diag(blocks));
    value = std::max(value, peak_search(gain, band.lo, band.hi, band.probes).norm);
    return {value, st.abscissa, true};
}

double weighted_objective(const GainSet& K, const SynthesisProblem& prob, WeightEvaluation mode)
{
    return evaluate_objective(K, prob, mode).value;
}

std::vector<std::string> tunable_gains(ControllerKind kind)
{
    switch (kind) {
    case ControllerKind::vsg:
        return {"k_pdc", "k_idc", "k22", "k34"};
    case ControllerKind::mimo_gfm:
        return kAllGains;
    case ControllerKind::proposed: {
        std::vector<std::string> v = kAllGains;
        v.erase(std::find(v.begin(), v.end(), "k15"));
        return v;
    }
    }
    return {};
}

double& gain_ref(GainSet& g, const std::string& name)
{
    if (name == "k_pdc")
        return g.k_pdc;
    if (name == "k_idc")
        return g.k_idc;
    if (name == "k12")
        return g.k12;
    if (name == "k14")
        return g.k14;
    if (name == "k15")
        return g.k15;
    if (name == "k21")
        return g.k21;
    if (name == "k22")
        return g.k22;
    if (name == "k24")
        return g.k24;
    if (name == "k31")
        return g.k31;
    if (name == "k32")
        return g.k32;
    if (name == "k34")
        return g.k34;
    throw ConfigError("unknown gain '" + name + "'");
}

double gain_value(const GainSet& g, const std::string& name)
{
    GainSet copy = g;
    return gain_ref(copy, name);
}

namespace {

// Gains move in asinh(k / kScale) so large magnitudes are searched on a log
// scale while signs can still flip; k22 is searched in log(k22).
constexpr double kScale = 1e-3;

struct Codec {
    std::vector<std::string> names;
    GainBounds bounds;
    GainSet base;

    [[nodiscard]] std::vector<double> encode(const GainSet& g) const
    {
        std::vector<double> th;
        for (const auto& n : names) {
            const double v = gain_value(g, n);
            th.push_back(n == "k22" ? std::log(v) : std::asinh(v / kScale));
        }
        return th;
    }

    [[nodiscard]] GainSet decode(std::span<const double> th) const
    {
        GainSet g = base;
        for (std::size_t i = 0; i < names.size(); ++i) {
            double& ref = gain_ref(g, names[i]);
            if (names[i] == "k22")
                ref = std::exp(std::clamp(th[i], std::log(bounds.k22_min), std::log(bounds.k22_max)));
            else
                ref = std::clamp(kScale * std::sinh(std::clamp(th[i], -50.0, 50.0)), -bounds.max_abs,
                                 bounds.max_abs);
        }
        return g;
    }
};

struct Candidate {
    GainSet gains;
    ObjectiveValue value;
    bool valid = false;
};

// Any stable candidate beats any unstable one; then lower value wins.
bool better(const Candidate& a, const Candidate& b)
{
    if (!b.valid)
        return a.valid;
    if (!a.valid)
        return false;
    if (a.value.stable != b.value.stable)
        return a.value.stable;
    return a.value.value < b.value.value;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace

TuneResult tune(const SynthesisProblem& prob, const GainSet& K0, const TuneOptions& options)
{
    if (K0.kind != prob.kind)
        throw ConfigError("initial gains are for a different controller kind than the problem");
    K0.validate();
    if (options.max_evals < 1 || options.restarts < 1)
        throw ConfigError("tune needs max_evals >= 1 and restarts >= 1");

    Codec codec;
    codec.bounds = prob.bounds;
    codec.base = K0;
    for (const auto& n : tunable_gains(prob.kind))
        if (std::find(prob.frozen.begin(), prob.frozen.end(), n) == prob.frozen.end())
            codec.names.push_back(n);
    for (const auto& n : prob.frozen)
        gain_value(K0, n); // rejects unknown names

    TuneResult result;
    result.seed = options.seed;

    Candidate best{K0, evaluate_objective(K0, prob), true};
    int evals = 1;
    auto record = [&]() {
        result.history.push_back({evals, best.value.value, best.value.abscissa});
    };
    record();

    auto objective = [&](std::span<const double> th) {
        Candidate c;
        c.gains = codec.decode(th);
        try {
            c.value = evaluate_objective(c.gains, prob);
            c.valid = true;
        } catch (const Error&) {
            c.valid = false;
        }
        ++evals;
        if (better(c, best))
            best = c;
        return c.valid ? c.value.value : 1e12;
    };

    std::mt19937_64 rng(options.seed);
    const std::vector<double> theta0 = codec.encode(K0);
    for (int r = 0; r < options.restarts && !codec.names.empty(); ++r) {
        const int remaining = options.max_evals - evals;
        if (remaining <= 0)
            break;
        const int budget = remaining / (options.restarts - r);
        if (budget <= static_cast<int>(codec.names.size()))
            continue;

        std::vector<double> start = r == 0 ? theta0 : codec.encode(best.gains);
        if (r > 0)
            for (double& t : start)
                t += (2.0 * uniform01(rng) - 1.0) * 0.5;

        NelderMeadOptions nm;
        nm.max_evals = budget;
        nm.initial_step = r == 0 ? 0.1 : 0.25;
        nelder_mead(objective, start, nm, [&](int, double, std::span<const double>) { record(); });
    }

    result.best = best.gains;
    result.gamma = best.value.value;
    result.abscissa = best.value.abscissa;
    result.evaluations = evals;
    result.found_stable = best.value.stable;
    if (!result.found_stable)
        warn("tune: evaluation budget exhausted without finding a stabilizing gain set");
    return result;
}

} // namespace gfm
