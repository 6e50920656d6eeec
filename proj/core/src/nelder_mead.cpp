#include "gfm/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gfm {

namespace {

class BudgetExhausted {};

} // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt,
                             const IterationHook& on_iteration)
{
    const std::size_t n = x0.size();
    NelderMeadResult best{x0, std::numeric_limits<double>::infinity(), 0, 0};
    if (opt.max_evals <= 0)
        return best;

    auto eval = [&](const std::vector<double>& x) {
        if (best.evals >= opt.max_evals)
            throw BudgetExhausted{};
        ++best.evals;
        double v = f(x);
        if (std::isnan(v))
            v = std::numeric_limits<double>::infinity();
        if (v < best.f) {
            best.f = v;
            best.x = x;
        }
        return v;
    };

    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> fv(n + 1);
    try {
        fv[0] = eval(simplex[0]);
        for (std::size_t i = 0; i < n; ++i) {
            simplex[i + 1][i] += opt.initial_step;
            fv[i + 1] = eval(simplex[i + 1]);
        }

        std::vector<std::size_t> order(n + 1);
        std::vector<double> centroid(n);
        auto along = [&](double t, const std::vector<double>& worst) {
            std::vector<double> x(n);
            for (std::size_t k = 0; k < n; ++k)
                x[k] = centroid[k] + t * (worst[k] - centroid[k]);
            return x;
        };

        for (;;) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&fv](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            {
                std::vector<std::vector<double>> s2(n + 1);
                std::vector<double> f2(n + 1);
                for (std::size_t i = 0; i <= n; ++i) {
                    s2[i] = simplex[order[i]];
                    f2[i] = fv[order[i]];
                }
                simplex.swap(s2);
                fv.swap(f2);
            }
            ++best.iterations;
            if (on_iteration)
                on_iteration(best.iterations, best.f, best.x);

            double diam = 0.0;
            for (std::size_t i = 1; i <= n; ++i)
                for (std::size_t k = 0; k < n; ++k)
                    diam = std::max(diam, std::abs(simplex[i][k] - simplex[0][k]));
            const double spread = std::abs(fv[n] - fv[0]);
            if (diam <= opt.xtol || (std::isfinite(fv[n]) && spread <= opt.ftol * (std::abs(fv[0]) + 1e-300)))
                break;

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < n; ++k)
                    centroid[k] += simplex[i][k] / static_cast<double>(n);

            const auto& worst = simplex[n];
            const std::vector<double> xr = along(-1.0, worst);
            const double fr = eval(xr);
            if (fr < fv[0]) {
                const std::vector<double> xe = along(-2.0, worst);
                const double fe = eval(xe);
                if (fe < fr) {
                    simplex[n] = xe;
                    fv[n] = fe;
                } else {
                    simplex[n] = xr;
                    fv[n] = fr;
                }
                continue;
            }
            if (fr < fv[n - 1]) {
                simplex[n] = xr;
                fv[n] = fr;
                continue;
            }
            const bool outside = fr < fv[n];
            const std::vector<double> xc = along(outside ? -0.5 : 0.5, worst);
            const double fc = eval(xc);
            if (fc < (outside ? fr : fv[n])) {
                simplex[n] = xc;
                fv[n] = fc;
                continue;
            }
            for (std::size_t i = 1; i <= n; ++i) {
                for (std::size_t k = 0; k < n; ++k)
                    simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                fv[i] = eval(simplex[i]);
            }
        }
    } catch (const BudgetExhausted&) {
    }
    return best;
}

} // namespace gfm
