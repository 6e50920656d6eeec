#include "gfm/linear_analysis.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>

#include "gfm/error.hpp"

namespace gfm {

namespace {

std::mutex g_warn_mutex;
std::function<void(std::string_view)> g_warn_handler;

using Array8 = std::array<double, 8>;
using Array3 = std::array<double, 3>;
using Array2 = std::array<double, 2>;

} // namespace

void set_warning_handler(std::function<void(std::string_view)> handler)
{
    std::scoped_lock lock(g_warn_mutex);
    g_warn_handler = std::move(handler);
}

void warn(std::string_view message)
{
    std::scoped_lock lock(g_warn_mutex);
    if (g_warn_handler)
        g_warn_handler(message);
    else
        std::cerr << "gfm: warning: " << message << '\n';
}

StateSpaceModel linearize(const PlantState& x0, const PlantInputs& u0, const Disturbance& d0,
                          const PlantParams& prm, double step)
{
    if (!(x0.vdc > step))
        throw DomainError("cannot linearize: vdc0 must exceed the difference step");

    const Array8 x = x0.to_array();
    const Array3 u = u0.to_array();
    const Array2 d = d0.to_array();

    {
        const auto r = plant_rates<double>(x, u, d, prm);
        double res = 0.0;
        for (double v : r)
            res = std::max(res, std::abs(v));
        if (res > 1e-8)
            warn(fmt::format("linearizing away from equilibrium (max rate {:.3e})", res));
    }

    StateSpaceModel ss;
    ss.A.resize(8, 8);
    ss.B.resize(8, 5);
    ss.C.resize(5, 8);
    ss.D.resize(5, 5);

    const double h = step;
    for (std::size_t j = 0; j < 8; ++j) {
        Array8 xp = x;
        Array8 xm = x;
        xp[j] += h;
        xm[j] -= h;
        const auto fp = plant_rates<double>(xp, u, d, prm);
        const auto fm = plant_rates<double>(xm, u, d, prm);
        const auto gp = plant_output_values<double>(xp, u);
        const auto gm = plant_output_values<double>(xm, u);
        for (std::size_t i = 0; i < 8; ++i)
            ss.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (fp[i] - fm[i]) / (2.0 * h);
        for (std::size_t i = 0; i < 5; ++i)
            ss.C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (gp[i] - gm[i]) / (2.0 * h);
    }
    for (std::size_t j = 0; j < 5; ++j) {
        Array3 up = u;
        Array3 um = u;
        Array2 dp = d;
        Array2 dm = d;
        if (j < 3) {
            up[j] += h;
            um[j] -= h;
        } else {
            dp[j - 3] += h;
            dm[j - 3] -= h;
        }
        const auto fp = plant_rates<double>(x, up, dp, prm);
        const auto fm = plant_rates<double>(x, um, dm, prm);
        const auto gp = plant_output_values<double>(x, up);
        const auto gm = plant_output_values<double>(x, um);
        for (std::size_t i = 0; i < 8; ++i)
            ss.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (fp[i] - fm[i]) / (2.0 * h);
        for (std::size_t i = 0; i < 5; ++i)
            ss.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (gp[i] - gm[i]) / (2.0 * h);
    }
    ss.input_names = channel::plant_inputs;
    ss.output_names = channel::plant_outputs;
    return ss;
}

StateSpaceModel close_loop(const StateSpaceModel& plant, const GainSet& g, const PlantParams& prm)
{
    plant.validate();
    g.validate();
    const StateSpaceModel p = plant.select(channel::plant_inputs, channel::plant_outputs);

    const ControllerRealization cr = realization(g, Droop{prm.Dp, prm.Dq});
    Eigen::Matrix3d Ac;
    Eigen::Matrix<double, 3, 5> Bc;
    Eigen::Matrix3d Cc;
    Eigen::Matrix<double, 3, 5> Dc;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            Ac(i, j) = cr.A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            Cc(i, j) = cr.C[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        for (int j = 0; j < 5; ++j) {
            Bc(i, j) = cr.B[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            Dc(i, j) = cr.D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }

    const auto n = p.states();
    const Eigen::MatrixXd Bu = p.B.leftCols(3);
    const Eigen::MatrixXd Bd = p.B.rightCols(2);
    const Eigen::MatrixXd Du = p.D.leftCols(3);
    const Eigen::MatrixXd Dd = p.D.rightCols(2);

    // e = (I + Du Dc)^-1 (r + inj - C x - Du Cc xc - Dd d)
    const Eigen::MatrixXd loop = Du * Dc;
    const double rho = loop.eigenvalues().cwiseAbs().maxCoeff();
    if (!(rho < 1.0))
        throw AlgebraicLoopError(fmt::format("algebraic loop is ill-posed (spectral radius {:.6g})", rho));
    const Eigen::MatrixXd M = (Eigen::MatrixXd::Identity(5, 5) + loop).inverse();

    const Eigen::Index nc = 3;
    const Eigen::Index N = n + nc;
    // Error as a function of closed-loop state, references, disturbances.
    Eigen::MatrixXd Ee(5, N);
    Ee.leftCols(n) = -M * p.C;
    Ee.rightCols(nc) = -M * Du * Cc;
    const Eigen::MatrixXd Fe_r = M;
    const Eigen::MatrixXd Fe_d = -M * Dd;
    // Command deviation.
    Eigen::MatrixXd Eu = Dc * Ee;
    Eu.rightCols(nc) += Cc;
    const Eigen::MatrixXd Fu_r = Dc * Fe_r;
    const Eigen::MatrixXd Fu_d = Dc * Fe_d;

    StateSpaceModel cl;
    cl.A = Eigen::MatrixXd::Zero(N, N);
    cl.A.topLeftCorner(n, n) = p.A;
    cl.A.topRows(n) += Bu * Eu;
    cl.A.bottomRows(nc) = Bc * Ee;
    cl.A.bottomRightCorner(nc, nc) += Ac;

    const Eigen::Index nin = 5 + 2 + 5;
    cl.B = Eigen::MatrixXd::Zero(N, nin);
    cl.B.block(0, 0, n, 5) = Bu * Fu_r;
    cl.B.block(0, 5, n, 2) = Bd + Bu * Fu_d;
    cl.B.block(0, 7, n, 5) = Bu * Fu_r;
    cl.B.block(n, 0, nc, 5) = Bc * Fe_r;
    cl.B.block(n, 5, nc, 2) = Bc * Fe_d;
    cl.B.block(n, 7, nc, 5) = Bc * Fe_r;

    const Eigen::Index nout = 5 + 5 + 3;
    cl.C = Eigen::MatrixXd::Zero(nout, N);
    cl.D = Eigen::MatrixXd::Zero(nout, nin);
    // y = C x + Du du + Dd d
    cl.C.topRows(5) = Du * Eu;
    cl.C.block(0, 0, 5, n) += p.C;
    cl.D.block(0, 0, 5, 5) = Du * Fu_r;
    cl.D.block(0, 5, 5, 2) = Dd + Du * Fu_d;
    cl.D.block(0, 7, 5, 5) = Du * Fu_r;
    // e
    cl.C.middleRows(5, 5) = Ee;
    cl.D.block(5, 0, 5, 5) = Fe_r;
    cl.D.block(5, 5, 5, 2) = Fe_d;
    cl.D.block(5, 7, 5, 5) = Fe_r;
    // commanded inputs (deviation from the operating point)
    cl.C.bottomRows(3) = Eu;
    cl.D.block(10, 0, 3, 5) = Fu_r;
    cl.D.block(10, 5, 3, 2) = Fu_d;
    cl.D.block(10, 7, 3, 5) = Fu_r;

    for (const auto& v : {channel::references, std::vector<std::string>{"omega_g", "Vg"}, channel::injections})
        cl.input_names.insert(cl.input_names.end(), v.begin(), v.end());
    for (const auto& v : {channel::plant_outputs, channel::errors, channel::commands})
        cl.output_names.insert(cl.output_names.end(), v.begin(), v.end());
    return cl;
}

StabilityReport is_stable(const StateSpaceModel& ss)
{
    if (ss.states() == 0)
        return {true, -std::numeric_limits<double>::infinity()};
    const Eigen::VectorXcd ev = ss.A.eigenvalues();
    const double abscissa = ev.real().maxCoeff();
    return {abscissa < 0.0, abscissa};
}

double FrequencyPoint::magnitude_db() const { return 20.0 * std::log10(std::abs(value)); }

double FrequencyPoint::phase_deg() const { return std::arg(value) * 180.0 / std::numbers::pi; }

std::vector<double> log_grid(double lo, double hi, int n)
{
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw ConfigError("log grid needs 0 < lo < hi and at least 2 points");
    std::vector<double> g(static_cast<std::size_t>(n));
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> bode_grid() { return log_grid(1e-1, 1e6, 400); }

FrequencyResponseTable frequency_response(const StateSpaceModel& ss, std::string_view input, std::string_view output,
                                          std::span<const double> grid)
{
    if (grid.empty())
        throw ConfigError("frequency grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1])))
            throw ConfigError("frequency grid must be positive and strictly increasing");
    }
    const auto in = ss.input_index(input);
    const auto out = ss.output_index(output);

    FrequencyResponseTable table;
    table.input = std::string(input);
    table.output = std::string(output);
    table.rows.reserve(grid.size());
    const FrequencyEvaluator eval(ss);
    for (double w : grid) {
        bool singular = false;
        const Eigen::VectorXcd col = eval.column(w, in, &singular);
        table.rows.push_back({w, col[out], singular});
    }
    return table;
}

double magnitude_slope(const FrequencyResponseTable& table, double w1, double w2)
{
    if (!(w1 < w2))
        throw ConfigError("slope range needs w1 < w2");
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    int n = 0;
    for (const auto& row : table.rows) {
        if (row.omega < w1 || row.omega > w2)
            continue;
        const double x = std::log10(row.omega);
        const double y = row.magnitude_db();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 5)
        throw ConfigError(fmt::format("slope needs at least 5 points in [{}, {}], found {}", w1, w2, n));
    const double denom = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / denom;
}

void write_bode_csv(std::ostream& os, const FrequencyResponseTable& table)
{
    fmt::print(os, "# input: {}\n# output: {}\n", table.input, table.output);
    os << "omega_rad_s,mag_dB,phase_deg\n";
    double prev = 0.0;
    double offset = 0.0;
    bool first = true;
    for (const auto& row : table.rows) {
        double ph = row.phase_deg();
        if (!first) {
            while (ph + offset - prev > 180.0)
                offset -= 360.0;
            while (ph + offset - prev < -180.0)
                offset += 360.0;
        }
        ph += offset;
        prev = ph;
        first = false;
        fmt::print(os, "{:.10e},{:.10e},{:.10e}\n", row.omega, row.magnitude_db(), ph);
    }
}

} // namespace gfm
