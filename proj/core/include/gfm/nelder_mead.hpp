#pragma once

#include <functional>
#include <span>
#include <vector>

namespace gfm {

struct NelderMeadOptions {
    int max_evals = 1000;
    double initial_step = 0.25; // simplex edge along each coordinate
    double ftol = 1e-12;        // relative spread of simplex values
    double xtol = 1e-10;        // simplex diameter
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
    int iterations = 0;
};

using Objective = std::function<double(std::span<const double>)>;
using IterationHook = std::function<void(int iteration, double best, std::span<const double> x)>;

// Unconstrained Nelder-Mead minimisation (reflection 1, expansion 2,
// contraction 1/2, shrink 1/2). Never evaluates f more than max_evals times;
// the returned point is the best one seen. Deterministic.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt,
                             const IterationHook& on_iteration = {});

} // namespace gfm
