#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gfm/state_space.hpp"

namespace gfm {

enum class HinfMethod {
    grid,      // adaptive log grid with local refinement around the peaks
    bisection, // bisection on gamma with the Hamiltonian imaginary-eigenvalue test
};

struct HinfResult {
    double norm = 0.0;
    double peak_omega = 0.0; // rad/s; +inf when the peak is the feedthrough
};

// Peak singular value of G(j omega) over omega in [0, inf).
// Throws InstabilityError if A is not Hurwitz.
HinfResult hinf_norm_detail(const StateSpaceModel& ss, HinfMethod method = HinfMethod::grid);
double hinf_norm(const StateSpaceModel& ss, HinfMethod method = HinfMethod::grid);

struct PeakSearchOptions {
    int grid_points = 1000;
    int refinement_passes = 3;
    int refine_points = 41; // per pass, across the two neighbouring grid cells
    int candidates = 3;     // local maxima refined
};

// Maximise gain(omega) over a log grid on [lo, hi] plus extra probe points,
// then refine around the best local maxima. omega = 0 is not probed here.
HinfResult peak_search(const std::function<double(double)>& gain, double lo, double hi,
                       std::span<const double> extra = {}, const PeakSearchOptions& opt = {});

// Frequency band [lo, hi] and probe points (pole magnitudes and damped
// frequencies) for a grid search over a model with the given A.
struct SearchBand {
    double lo = 1e-3;
    double hi = 1e3;
    std::vector<double> probes;
};
SearchBand search_band(const Eigen::MatrixXd& A);

} // namespace gfm
