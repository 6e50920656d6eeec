#include "gfm/plant.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "gfm/error.hpp"

namespace gfm {

PlantParams PlantParams::table1()
{
    PlantParams prm;
    prm.Cdc_pu = prm.dc_capacitance_pu(500e-6);
    return prm;
}

void PlantParams::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string("plant parameter ") + name + " must be finite and > 0");
    };
    positive(omega_b, "omega_b");
    positive(Lf, "Lf");
    positive(Cf, "Cf");
    positive(Lg, "Lg");
    positive(Rg, "Rg");
    positive(Cdc_pu, "Cdc");
    positive(Dp, "Dp");
    positive(Dq, "Dq");
    positive(Sn, "Sn");
    positive(Vn, "Vn");
    positive(Vdc_base, "Vdc_base");
    if (include_rf)
        positive(Rf, "Rf");
}

double PlantState::wrapped_delta() const noexcept
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(delta, two_pi);
    if (w <= -std::numbers::pi)
        w += two_pi;
    else if (w > std::numbers::pi)
        w -= two_pi;
    return w;
}

PlantState derivatives(const PlantState& x, const PlantInputs& u, const Disturbance& d, const PlantParams& prm)
{
    if (!(x.vdc > 0.0))
        throw DomainError("DC voltage must be positive, got vdc = " + std::to_string(x.vdc));
    return PlantState::from_array(plant_rates<double>(x.to_array(), u.to_array(), d.to_array(), prm));
}

PlantOutputs outputs(const PlantState& x, const PlantInputs& u)
{
    const auto y = plant_output_values<double>(x.to_array(), u.to_array());
    return {y[0], y[1], y[2], y[3], y[4]};
}

namespace {

constexpr int kUnknowns = 11;
using Vec = Eigen::Matrix<double, kUnknowns, 1>;
using Mat = Eigen::Matrix<double, kUnknowns, kUnknowns>;

struct Point {
    PlantState x;
    PlantInputs u;
};

Point unpack(const Vec& z)
{
    Point pt;
    pt.x = PlantState{z[0], z[1], z[2], z[3], z[4], z[5], z[6], z[7]};
    pt.u = PlantInputs{z[8], z[9], z[10]};
    return pt;
}

// Plant rates are scaled by 1/omega_b so all 11 residuals are O(1).
Vec residual(const Vec& z, const PlantParams& prm, const Setpoints& sp, const Disturbance& d)
{
    const Point pt = unpack(z);
    Vec r;
    const auto rates = plant_rates<double>(pt.x.to_array(), pt.u.to_array(), d.to_array(), prm);
    for (int i = 0; i < 8; ++i)
        r[i] = rates[static_cast<std::size_t>(i)] / prm.omega_b;
    const PlantOutputs y = outputs(pt.x, pt.u);
    r[8] = y.vdc - sp.Vdcref;
    r[9] = (pt.u.omega_u - 1.0) - prm.Dp * (sp.Pref - y.p);
    r[10] = (y.q + y.V / prm.Dq) - (sp.Qref + sp.Vref / prm.Dq);
    return r;
}

} // namespace

Equilibrium find_equilibrium(const PlantParams& prm, const Setpoints& sp, const Disturbance& d)
{
    prm.validate();
    if (!(sp.Vdcref > 0.0))
        throw ConfigError("Vdcref must be positive");

    // Initial guess: flat voltage profile, currents from the power balance.
    Vec z;
    const double pguess = sp.Pref + (d.omega_g - 1.0) / prm.Dp;
    z << pguess, -sp.Qref, 1.0, 0.0, pguess, -sp.Qref, 0.1, sp.Vdcref, pguess / sp.Vdcref, d.omega_g, 1.0;

    constexpr int max_iter = 100;
    constexpr double tol = 1e-14;
    Vec r = residual(z, prm, sp, d);
    double norm = r.lpNorm<Eigen::Infinity>();
    int iter = 0;
    for (; iter < max_iter && norm > tol; ++iter) {
        Mat J;
        for (int j = 0; j < kUnknowns; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(z[j]));
            Vec zp = z;
            Vec zm = z;
            zp[j] += h;
            zm[j] -= h;
            J.col(j) = (residual(zp, prm, sp, d) - residual(zm, prm, sp, d)) / (2.0 * h);
        }
        const Vec step = J.fullPivLu().solve(-r);
        if (!step.allFinite())
            break;

        // Backtracking on the residual norm; keeps vdc positive.
        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, lambda *= 0.5) {
            const Vec trial = z + lambda * step;
            if (!(trial[7] > 0.0))
                continue;
            const Vec rt = residual(trial, prm, sp, d);
            const double nt = rt.lpNorm<Eigen::Infinity>();
            if (std::isfinite(nt) && (nt < norm || nt <= tol)) {
                z = trial;
                r = rt;
                norm = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
    }

    const Point pt = unpack(z);
    const auto rates = plant_rates<double>(pt.x.to_array(), pt.u.to_array(), d.to_array(), prm);
    double rate_max = 0.0;
    for (double v : rates)
        rate_max = std::max(rate_max, std::abs(v));

    // Newton stalls at rounding level; accept anything that meets the rate contract.
    if (!std::isfinite(norm) || rate_max > 1e-10 || std::abs(r[8]) > 1e-10 || std::abs(r[9]) > 1e-10 ||
        std::abs(r[10]) > 1e-10)
        throw ConvergenceError("equilibrium solve did not converge (residual " + std::to_string(norm) + ")", norm,
                               iter);
    if (!(pt.u.Eu >= 0.0))
        throw ConvergenceError("equilibrium solve converged to negative internal voltage", norm, iter);

    return {pt.x, pt.u, rate_max, iter};
}

} // namespace gfm
