#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace gfm {

// Continuous-time LTI model dx = A x + B u, y = C x + D u with labelled channels.
struct StateSpaceModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;
    std::vector<std::string> input_names;
    std::vector<std::string> output_names;

    [[nodiscard]] Eigen::Index states() const noexcept { return A.rows(); }
    [[nodiscard]] Eigen::Index inputs() const noexcept { return B.cols(); }
    [[nodiscard]] Eigen::Index outputs() const noexcept { return C.rows(); }

    // Throws ConfigError on inconsistent dimensions or duplicate names.
    void validate() const;

    // Throws ConfigError for unknown channels.
    [[nodiscard]] Eigen::Index input_index(std::string_view name) const;
    [[nodiscard]] Eigen::Index output_index(std::string_view name) const;

    // C (sI - A)^-1 B + D by dense LU.
    [[nodiscard]] Eigen::MatrixXcd response(std::complex<double> s) const;

    // Keep only the listed channels (by name).
    [[nodiscard]] StateSpaceModel select(const std::vector<std::string>& in, const std::vector<std::string>& out) const;

    // Static gain with no states.
    static StateSpaceModel gain(const Eigen::MatrixXd& D);
};

// Cascade: input -> first -> second -> output. first.outputs() must equal second.inputs().
StateSpaceModel series(const StateSpaceModel& first, const StateSpaceModel& second);

// Frequency response evaluator that reduces A to upper Hessenberg form once,
// so each frequency costs O(n^2) instead of a dense factorization.
class FrequencyEvaluator {
public:
    explicit FrequencyEvaluator(const StateSpaceModel& ss);

    // G(j omega) for all channels. Sets near_singular when (j omega I - A)
    // has a pivot below rounding level relative to its scale.
    [[nodiscard]] Eigen::MatrixXcd at(double omega, bool* near_singular = nullptr) const;

    // G(j omega) restricted to one input column.
    [[nodiscard]] Eigen::VectorXcd column(double omega, Eigen::Index input, bool* near_singular = nullptr) const;

private:
    [[nodiscard]] Eigen::MatrixXcd resolvent_times(double omega, const Eigen::MatrixXd& rhs, bool* near_singular) const;

    Eigen::MatrixXd H_;  // Q^T A Q, upper Hessenberg
    Eigen::MatrixXd QB_; // Q^T B
    Eigen::MatrixXd CQ_; // C Q
    Eigen::MatrixXd D_;
    double scale_ = 1.0;
};

} // namespace gfm
