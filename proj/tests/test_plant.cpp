#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "gfm/error.hpp"
#include "gfm/linear_analysis.hpp"
#include "gfm/plant.hpp"

using namespace gfm;

namespace {

using Vec8 = std::array<double, 8>;
using Vec3 = std::array<double, 3>;
using Vec2 = std::array<double, 2>;

// Full 13-column Jacobian [d rates / d(x, u, d)] by complex-step differentiation.
std::array<std::array<double, 13>, 8> complex_step_jacobian(const Vec8& x, const Vec3& u, const Vec2& d,
                                                            const PlantParams& prm)
{
    using C = std::complex<double>;
    constexpr double h = 1e-30;
    std::array<std::array<double, 13>, 8> J{};
    for (int k = 0; k < 13; ++k) {
        std::array<C, 8> xc;
        std::array<C, 3> uc;
        std::array<C, 2> dc;
        for (int i = 0; i < 8; ++i)
            xc[i] = x[i];
        for (int i = 0; i < 3; ++i)
            uc[i] = u[i];
        for (int i = 0; i < 2; ++i)
            dc[i] = d[i];
        if (k < 8)
            xc[k] += C(0.0, h);
        else if (k < 11)
            uc[k - 8] += C(0.0, h);
        else
            dc[k - 11] += C(0.0, h);
        const auto r = plant_rates(xc, uc, dc, prm);
        for (int i = 0; i < 8; ++i)
            J[i][k] = r[i].imag() / h;
    }
    return J;
}

// Central differences at h and h/2 combined by Richardson extrapolation.
std::array<std::array<double, 13>, 8> richardson_jacobian(const Vec8& x, const Vec3& u, const Vec2& d,
                                                          const PlantParams& prm, double h)
{
    auto central = [&](int k, double step) {
        Vec8 xp = x, xm = x;
        Vec3 up = u, um = u;
        Vec2 dp = d, dm = d;
        if (k < 8) {
            xp[k] += step;
            xm[k] -= step;
        } else if (k < 11) {
            up[k - 8] += step;
            um[k - 8] -= step;
        } else {
            dp[k - 11] += step;
            dm[k - 11] -= step;
        }
        const auto a = plant_rates(xp, up, dp, prm);
        const auto b = plant_rates(xm, um, dm, prm);
        Vec8 g;
        for (int i = 0; i < 8; ++i)
            g[i] = (a[i] - b[i]) / (2.0 * step);
        return g;
    };
    std::array<std::array<double, 13>, 8> J{};
    for (int k = 0; k < 13; ++k) {
        const Vec8 g1 = central(k, h);
        const Vec8 g2 = central(k, h / 2.0);
        for (int i = 0; i < 8; ++i)
            J[i][k] = (4.0 * g2[i] - g1[i]) / 3.0;
    }
    return J;
}

struct SilenceWarnings {
    SilenceWarnings() { set_warning_handler([](std::string_view) {}); }
    ~SilenceWarnings() { set_warning_handler({}); }
};

} // namespace

TEST_SUITE("plant")
{
    TEST_CASE("table 1 defaults and DC capacitance conversion")
    {
        const PlantParams p = PlantParams::table1();
        CHECK(p.omega_b == doctest::Approx(100.0 * std::numbers::pi));
        CHECK(p.Lf == 0.0174);
        CHECK(p.Cf == 0.2268);
        CHECK(p.Lg == 0.0174);
        CHECK(p.Rg == 0.0017);
        CHECK(p.Dp == 0.01);
        CHECK(p.Dq == 0.05);
        // omega_b * 500 uF * 700^2 / 4 kVA
        CHECK(p.Cdc_pu == doctest::Approx(19.2422550032).epsilon(1e-9));
        CHECK(p.dc_capacitance_pu(500e-6) == doctest::Approx(p.Cdc_pu));
        CHECK_NOTHROW(p.validate());
    }

    TEST_CASE("invalid parameters are rejected")
    {
        PlantParams p = PlantParams::table1();
        p.Lf = 0.0;
        CHECK_THROWS_AS(p.validate(), ConfigError);
        p = PlantParams::table1();
        p.Dq = -1.0;
        CHECK_THROWS_AS(p.validate(), ConfigError);
    }

    TEST_CASE("non-positive vdc is a domain error")
    {
        PlantState x;
        x.vdc = 0.0;
        CHECK_THROWS_AS(derivatives(x, PlantInputs{}, Disturbance{}, PlantParams::table1()), DomainError);
    }

    TEST_CASE("equilibrium matches the independent prototype")
    {
        const PlantParams prm = PlantParams::table1();
        const Equilibrium eq = find_equilibrium(prm, Setpoints{}, Disturbance{});
        CHECK(eq.residual < 1e-8);
        CHECK(eq.x.id == doctest::Approx(0.50177).epsilon(1e-4));
        CHECK(eq.x.iq == doctest::Approx(0.23460).epsilon(1e-4));
        CHECK(eq.x.vd == doctest::Approx(1.00056).epsilon(1e-5));
        CHECK(eq.x.vq == doctest::Approx(-0.00873).epsilon(1e-3));
        CHECK(eq.x.iod == doctest::Approx(0.49979).epsilon(1e-4));
        CHECK(eq.x.ioq == doctest::Approx(0.00767).epsilon(1e-3));
        CHECK(eq.x.delta == doctest::Approx(0.017441).epsilon(1e-4));
        CHECK(eq.u.Eu == doctest::Approx(0.99648).epsilon(1e-5));
        CHECK(eq.u.iu == doctest::Approx(0.5).epsilon(1e-4));
    }

    TEST_CASE("equilibrium satisfies the droop relations")
    {
        const PlantParams prm = PlantParams::table1();
        for (double wg : {1.0, 0.998, 1.001}) {
            Setpoints sp;
            sp.Pref = 0.6;
            sp.Qref = 0.05;
            const Equilibrium eq = find_equilibrium(prm, sp, Disturbance{wg, 1.0});
            const PlantOutputs y = outputs(eq.x, eq.u);
            CHECK(y.vdc == doctest::Approx(1.0));
            CHECK(y.omega_u == doctest::Approx(wg).epsilon(1e-12));
            CHECK(y.p == doctest::Approx(sp.Pref - (wg - 1.0) / prm.Dp).epsilon(1e-9));
            CHECK(y.q + y.V / prm.Dq == doctest::Approx(sp.Qref + sp.Vref / prm.Dq).epsilon(1e-10));
            // DC-side power equals the converter terminal power.
            CHECK(std::abs(eq.u.iu * eq.x.vdc - eq.u.Eu * eq.x.id) < 1e-6);
        }
    }

    TEST_CASE("equilibrium with the filter resistance enabled")
    {
        PlantParams prm = PlantParams::table1();
        prm.include_rf = true;
        const Equilibrium eq = find_equilibrium(prm, Setpoints{}, Disturbance{});
        CHECK(eq.residual < 1e-8);
        CHECK(outputs(eq.x, eq.u).p == doctest::Approx(0.5));
    }

    TEST_CASE("linearization agrees with complex-step and Richardson oracles at 20 random points")
    {
        SilenceWarnings quiet;
        const PlantParams prm = PlantParams::table1();
        const Equilibrium eq = find_equilibrium(prm, Setpoints{}, Disturbance{});
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> pert(-0.2, 0.2);
        for (int trial = 0; trial < 20; ++trial) {
            Vec8 x = eq.x.to_array();
            for (double& v : x)
                v += pert(rng);
            Vec3 u = eq.u.to_array();
            for (double& v : u)
                v += 0.5 * pert(rng);
            const Vec2 d{1.0 + 0.01 * pert(rng), 1.0 + 0.5 * pert(rng)};

            const StateSpaceModel ss = linearize(PlantState::from_array(x), PlantInputs{u[0], u[1], u[2]},
                                                 Disturbance{d[0], d[1]}, prm);
            const auto Jc = complex_step_jacobian(x, u, d, prm);
            const auto Jr = richardson_jacobian(x, u, d, prm, 1e-3);
            double scale = 0.0;
            for (const auto& row : Jc)
                for (double v : row)
                    scale = std::max(scale, std::abs(v));
            for (int i = 0; i < 8; ++i) {
                for (int k = 0; k < 13; ++k) {
                    const double got = k < 8 ? ss.A(i, k) : ss.B(i, k - 8);
                    CHECK(std::abs(got - Jc[i][k]) <= 1e-6 * scale);
                    CHECK(std::abs(Jr[i][k] - Jc[i][k]) <= 1e-6 * scale);
                }
            }
        }
    }

    TEST_CASE("linearized output map")
    {
        const PlantParams prm = PlantParams::table1();
        const Equilibrium eq = find_equilibrium(prm, Setpoints{}, Disturbance{});
        const StateSpaceModel ss = linearize(eq.x, eq.u, Disturbance{}, prm);
        CHECK(ss.A.rows() == 8);
        CHECK(ss.B.cols() == 5);
        CHECK(ss.C.rows() == 5);
        // p = vd*iod + vq*ioq
        CHECK(ss.C(1, 2) == doctest::Approx(eq.x.iod).epsilon(1e-8));
        CHECK(ss.C(1, 4) == doctest::Approx(eq.x.vd).epsilon(1e-8));
        // omega_u output is the omega_u input
        CHECK(ss.D(2, 1) == doctest::Approx(1.0));
        CHECK(ss.C(0, 7) == doctest::Approx(1.0));
    }

    TEST_CASE("linearizing away from equilibrium warns")
    {
        int warnings = 0;
        set_warning_handler([&warnings](std::string_view) { ++warnings; });
        PlantState x;
        x.vd = 1.0;
        (void)linearize(x, PlantInputs{}, Disturbance{}, PlantParams::table1());
        set_warning_handler({});
        CHECK(warnings == 1);
    }

    TEST_CASE("wrapped angle stays in (-pi, pi]")
    {
        PlantState x;
        x.delta = 3.0 * std::numbers::pi + 0.1;
        CHECK(x.wrapped_delta() == doctest::Approx(-std::numbers::pi + 0.1));
    }
}
