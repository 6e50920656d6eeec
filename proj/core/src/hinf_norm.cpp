#include "gfm/hinf_norm.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gfm/error.hpp"
#include "gfm/linear_analysis.hpp"

namespace gfm {

namespace {

double max_singular_value(const Eigen::MatrixXcd& G)
{
    if (G.size() == 0)
        return 0.0;
    if (G.size() == 1)
        return std::abs(G(0, 0));
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(G).singularValues()(0);
}

double max_singular_value(const Eigen::MatrixXd& G)
{
    if (G.size() == 0)
        return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXd>(G).singularValues()(0);
}

void require_stable(const StateSpaceModel& ss)
{
    const StabilityReport st = is_stable(ss);
    if (!st.stable)
        throw InstabilityError(fmt::format("H-infinity norm undefined: spectral abscissa {:.6g} >= 0", st.abscissa),
                               st.abscissa);
}

// True when the Hamiltonian for level gamma has an eigenvalue on the
// imaginary axis, i.e. some singular value of G(j omega) reaches gamma.
bool reaches_level(const StateSpaceModel& ss, double gamma, double sigma_d, double* omega_hit)
{
    if (gamma <= sigma_d * (1.0 + 1e-12))
        return true;
    const auto n = ss.states();
    const auto m = ss.inputs();
    const auto p = ss.outputs();
    const Eigen::MatrixXd R = gamma * gamma * Eigen::MatrixXd::Identity(m, m) - ss.D.transpose() * ss.D;
    const Eigen::LLT<Eigen::MatrixXd> llt(R);
    const Eigen::MatrixXd Rinv_Dt = llt.solve(ss.D.transpose());
    const Eigen::MatrixXd Rinv_Bt = llt.solve(ss.B.transpose());
    const Eigen::MatrixXd Ar = ss.A + ss.B * Rinv_Dt * ss.C;

    Eigen::MatrixXd H(2 * n, 2 * n);
    H.topLeftCorner(n, n) = Ar;
    H.topRightCorner(n, n) = ss.B * Rinv_Bt;
    H.bottomLeftCorner(n, n) = -ss.C.transpose() * (Eigen::MatrixXd::Identity(p, p) + ss.D * Rinv_Dt) * ss.C;
    H.bottomRightCorner(n, n) = -Ar.transpose();

    const Eigen::VectorXcd ev = H.eigenvalues();
    const double hscale = H.cwiseAbs().maxCoeff();
    bool hit = false;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : ev) {
        const double tol = 1e-8 * std::max(1.0, std::abs(l)) + 1e-12 * hscale;
        if (std::abs(l.real()) < tol) {
            hit = true;
            // Report the crossing closest to the real axis direction that is on the axis.
            if (std::abs(l.real()) < best) {
                best = std::abs(l.real());
                if (omega_hit)
                    *omega_hit = std::abs(l.imag());
            }
        }
    }
    return hit;
}

HinfResult bisection_norm(const StateSpaceModel& ss)
{
    const double sigma_d = max_singular_value(ss.D);
    if (ss.states() == 0)
        return {sigma_d, std::numeric_limits<double>::infinity()};

    // Lower bound from a handful of direct evaluations: feedthrough, DC, pole frequencies.
    const FrequencyEvaluator eval(ss);
    HinfResult lo{sigma_d, std::numeric_limits<double>::infinity()};
    std::vector<double> probes = search_band(ss.A).probes;
    probes.push_back(0.0);
    for (double w : probes) {
        const double s = max_singular_value(eval.at(w));
        if (s > lo.norm)
            lo = {s, w};
    }
    if (lo.norm == 0.0)
        return lo;

    double hi = 2.0 * lo.norm;
    int guard = 0;
    while (reaches_level(ss, hi, sigma_d, nullptr)) {
        hi *= 2.0;
        if (++guard > 200)
            throw NumericalError("Hamiltonian bisection failed to bracket the norm");
    }
    double lo_level = lo.norm;
    double omega = lo.peak_omega;
    for (int it = 0; it < 200 && (hi - lo_level) > 1e-10 * lo_level; ++it) {
        const double mid = std::sqrt(lo_level * hi);
        double w = omega;
        if (reaches_level(ss, mid, sigma_d, &w)) {
            lo_level = mid;
            omega = w;
        } else {
            hi = mid;
        }
    }
    return {0.5 * (lo_level + hi), omega};
}

HinfResult grid_norm(const StateSpaceModel& ss)
{
    const double sigma_d = max_singular_value(ss.D);
    HinfResult best{sigma_d, std::numeric_limits<double>::infinity()};
    if (ss.states() == 0)
        return best;

    const FrequencyEvaluator eval(ss);
    auto gain = [&eval](double w) { return max_singular_value(eval.at(w)); };
    const double g0 = gain(0.0);
    if (g0 > best.norm)
        best = {g0, 0.0};
    const SearchBand band = search_band(ss.A);
    const HinfResult peak = peak_search(gain, band.lo, band.hi, band.probes);
    if (peak.norm > best.norm)
        best = peak;
    return best;
}

} // namespace

SearchBand search_band(const Eigen::MatrixXd& A)
{
    SearchBand band;
    if (A.rows() == 0)
        return band;
    const Eigen::VectorXcd ev = A.eigenvalues();
    double mn = std::numeric_limits<double>::infinity();
    double mx = 0.0;
    for (const auto& l : ev) {
        const double mag = std::abs(l);
        if (mag > 0.0) {
            mn = std::min(mn, mag);
            mx = std::max(mx, mag);
            band.probes.push_back(mag);
        }
        if (l.imag() > 0.0)
            band.probes.push_back(l.imag());
    }
    if (mx == 0.0)
        return band;
    band.lo = std::max(mn / 100.0, 1e-12);
    band.hi = mx * 100.0;
    std::sort(band.probes.begin(), band.probes.end());
    band.probes.erase(std::unique(band.probes.begin(), band.probes.end()), band.probes.end());
    return band;
}

HinfResult peak_search(const std::function<double(double)>& gain, double lo, double hi, std::span<const double> extra,
                       const PeakSearchOptions& opt)
{
    std::vector<double> grid = log_grid(lo, hi, opt.grid_points);
    for (double w : extra)
        if (w > lo && w < hi)
            grid.push_back(w);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> val(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        val[i] = gain(grid[i]);

    // Local maxima, best first.
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool left = i == 0 || val[i] >= val[i - 1];
        const bool right = i + 1 == grid.size() || val[i] >= val[i + 1];
        if (left && right)
            peaks.push_back(i);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [&val](std::size_t a, std::size_t b) { return val[a] > val[b]; });
    if (peaks.size() > static_cast<std::size_t>(opt.candidates))
        peaks.resize(static_cast<std::size_t>(opt.candidates));

    HinfResult best{0.0, grid.front()};
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (val[i] > best.norm)
            best = {val[i], grid[i]};

    for (std::size_t idx : peaks) {
        double a = grid[idx == 0 ? 0 : idx - 1];
        double b = grid[idx + 1 == grid.size() ? idx : idx + 1];
        for (int pass = 0; pass < opt.refinement_passes && b > a; ++pass) {
            const std::vector<double> sub = log_grid(a, b, opt.refine_points);
            std::size_t jbest = 0;
            double vbest = -1.0;
            for (std::size_t j = 0; j < sub.size(); ++j) {
                const double v = gain(sub[j]);
                if (v > vbest) {
                    vbest = v;
                    jbest = j;
                }
            }
            if (vbest > best.norm)
                best = {vbest, sub[jbest]};
            a = sub[jbest == 0 ? 0 : jbest - 1];
            b = sub[jbest + 1 == sub.size() ? jbest : jbest + 1];
        }
    }
    return best;
}

HinfResult hinf_norm_detail(const StateSpaceModel& ss, HinfMethod method)
{
    ss.validate();
    require_stable(ss);
    return method == HinfMethod::grid ? grid_norm(ss) : bisection_norm(ss);
}

double hinf_norm(const StateSpaceModel& ss, HinfMethod method) { return hinf_norm_detail(ss, method).norm; }

} // namespace gfm
