#include "gfm/state_space.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "gfm/error.hpp"

namespace gfm {

void StateSpaceModel::validate() const
{
    const auto n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != B.cols())
        throw ConfigError("state-space model has inconsistent dimensions");
    if (static_cast<Eigen::Index>(input_names.size()) != B.cols() ||
        static_cast<Eigen::Index>(output_names.size()) != C.rows())
        throw ConfigError("state-space model channel names do not match its dimensions");
    auto unique = [](const std::vector<std::string>& names) {
        return std::set<std::string>(names.begin(), names.end()).size() == names.size();
    };
    if (!unique(input_names) || !unique(output_names))
        throw ConfigError("state-space model channel names must be unique");
}

Eigen::Index StateSpaceModel::input_index(std::string_view name) const
{
    const auto it = std::find(input_names.begin(), input_names.end(), name);
    if (it == input_names.end())
        throw ConfigError("unknown input channel '" + std::string(name) + "'");
    return std::distance(input_names.begin(), it);
}

Eigen::Index StateSpaceModel::output_index(std::string_view name) const
{
    const auto it = std::find(output_names.begin(), output_names.end(), name);
    if (it == output_names.end())
        throw ConfigError("unknown output channel '" + std::string(name) + "'");
    return std::distance(output_names.begin(), it);
}

Eigen::MatrixXcd StateSpaceModel::response(std::complex<double> s) const
{
    const Eigen::MatrixXcd Dc = D.cast<std::complex<double>>();
    if (states() == 0)
        return Dc;
    const Eigen::MatrixXcd M =
        s * Eigen::MatrixXcd::Identity(states(), states()) - A.cast<std::complex<double>>();
    const Eigen::MatrixXcd X = M.partialPivLu().solve(B.cast<std::complex<double>>());
    return C.cast<std::complex<double>>() * X + Dc;
}

StateSpaceModel StateSpaceModel::select(const std::vector<std::string>& in, const std::vector<std::string>& out) const
{
    StateSpaceModel r;
    r.A = A;
    r.B.resize(states(), static_cast<Eigen::Index>(in.size()));
    r.C.resize(static_cast<Eigen::Index>(out.size()), states());
    r.D.resize(static_cast<Eigen::Index>(out.size()), static_cast<Eigen::Index>(in.size()));
    for (std::size_t j = 0; j < in.size(); ++j)
        r.B.col(static_cast<Eigen::Index>(j)) = B.col(input_index(in[j]));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto oi = output_index(out[i]);
        r.C.row(static_cast<Eigen::Index>(i)) = C.row(oi);
        for (std::size_t j = 0; j < in.size(); ++j)
            r.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = D(oi, input_index(in[j]));
    }
    r.input_names = in;
    r.output_names = out;
    return r;
}

StateSpaceModel StateSpaceModel::gain(const Eigen::MatrixXd& D)
{
    StateSpaceModel r;
    r.A.resize(0, 0);
    r.B.resize(0, D.cols());
    r.C.resize(D.rows(), 0);
    r.D = D;
    for (Eigen::Index j = 0; j < D.cols(); ++j)
        r.input_names.push_back("u" + std::to_string(j + 1));
    for (Eigen::Index i = 0; i < D.rows(); ++i)
        r.output_names.push_back("y" + std::to_string(i + 1));
    return r;
}

StateSpaceModel series(const StateSpaceModel& first, const StateSpaceModel& second)
{
    if (first.outputs() != second.inputs())
        throw ConfigError("series connection needs first.outputs == second.inputs");
    const auto n1 = first.states();
    const auto n2 = second.states();
    StateSpaceModel r;
    r.A = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
    r.A.topLeftCorner(n1, n1) = first.A;
    r.A.bottomLeftCorner(n2, n1) = second.B * first.C;
    r.A.bottomRightCorner(n2, n2) = second.A;
    r.B.resize(n1 + n2, first.inputs());
    r.B.topRows(n1) = first.B;
    r.B.bottomRows(n2) = second.B * first.D;
    r.C.resize(second.outputs(), n1 + n2);
    r.C.leftCols(n1) = second.D * first.C;
    r.C.rightCols(n2) = second.C;
    r.D = second.D * first.D;
    r.input_names = first.input_names;
    r.output_names = second.output_names;
    return r;
}

FrequencyEvaluator::FrequencyEvaluator(const StateSpaceModel& ss) : D_(ss.D)
{
    const auto n = ss.states();
    if (n == 0) {
        CQ_.resize(ss.outputs(), 0);
        QB_.resize(0, ss.inputs());
        return;
    }
    Eigen::HessenbergDecomposition<Eigen::MatrixXd> hess(ss.A);
    H_ = hess.matrixH();
    const Eigen::MatrixXd Q = hess.matrixQ();
    QB_ = Q.transpose() * ss.B;
    CQ_ = ss.C * Q;
    scale_ = std::max(1.0, ss.A.cwiseAbs().maxCoeff());
}

Eigen::MatrixXcd FrequencyEvaluator::resolvent_times(double omega, const Eigen::MatrixXd& rhs, bool* near_singular) const
{
    using cd = std::complex<double>;
    const auto n = H_.rows();
    Eigen::MatrixXcd M = -H_.cast<cd>();
    M.diagonal().array() += cd(0.0, omega);
    Eigen::MatrixXcd X = rhs.cast<cd>();

    // Gaussian elimination on the single subdiagonal, pivoting between adjacent rows.
    double min_pivot = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (std::abs(M(k + 1, k)) > std::abs(M(k, k))) {
            M.row(k).tail(n - k).swap(M.row(k + 1).tail(n - k));
            X.row(k).swap(X.row(k + 1));
        }
        const cd piv = M(k, k);
        if (piv == cd(0.0))
            continue;
        const cd f = M(k + 1, k) / piv;
        if (f != cd(0.0)) {
            M.row(k + 1).tail(n - k) -= f * M.row(k).tail(n - k);
            X.row(k + 1) -= f * X.row(k);
        }
    }
    for (Eigen::Index k = 0; k < n; ++k)
        min_pivot = std::min(min_pivot, std::abs(M(k, k)));
    if (near_singular)
        *near_singular = min_pivot <= 1e-13 * (scale_ + std::abs(omega));
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        if (k + 1 < n)
            X.row(k) -= M.row(k).tail(n - k - 1) * X.bottomRows(n - k - 1);
        X.row(k) /= M(k, k);
    }
    return X;
}

Eigen::MatrixXcd FrequencyEvaluator::at(double omega, bool* near_singular) const
{
    if (H_.rows() == 0) {
        if (near_singular)
            *near_singular = false;
        return D_.cast<std::complex<double>>();
    }
    return CQ_.cast<std::complex<double>>() * resolvent_times(omega, QB_, near_singular) +
           D_.cast<std::complex<double>>();
}

Eigen::VectorXcd FrequencyEvaluator::column(double omega, Eigen::Index input, bool* near_singular) const
{
    if (H_.rows() == 0) {
        if (near_singular)
            *near_singular = false;
        return D_.col(input).cast<std::complex<double>>();
    }
    return CQ_.cast<std::complex<double>>() * resolvent_times(omega, QB_.col(input), near_singular) +
           D_.col(input).cast<std::complex<double>>();
}

} // namespace gfm
