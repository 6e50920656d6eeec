#include "gfm/controllers.hpp"

#include <cmath>
#include <string>

#include "gfm/error.hpp"

namespace gfm {

std::string_view to_string(ControllerKind kind) noexcept
{
    switch (kind) {
    case ControllerKind::vsg:
        return "vsg";
    case ControllerKind::mimo_gfm:
        return "mimo_gfm";
    case ControllerKind::proposed:
        return "proposed";
    }
    return "unknown";
}

ControllerKind controller_kind_from_string(std::string_view name)
{
    if (name == "vsg")
        return ControllerKind::vsg;
    if (name == "mimo_gfm" || name == "original")
        return ControllerKind::mimo_gfm;
    if (name == "proposed")
        return ControllerKind::proposed;
    throw ConfigError("unknown controller kind '" + std::string(name) + "'");
}

GainSet GainSet::table2_original()
{
    GainSet g;
    g.kind = ControllerKind::mimo_gfm;
    g.k_pdc = 120.224;
    g.k_idc = 265.6217;
    g.k12 = -0.0019;
    g.k14 = 0.1673;
    g.k15 = -0.8274;
    g.k21 = -0.8382;
    g.k22 = 1.7622;
    g.k24 = 0.0;
    g.k31 = -4.8977;
    g.k32 = 0.0;
    g.k34 = 1.0844;
    return g;
}

GainSet GainSet::table2_proposed()
{
    GainSet g;
    g.kind = ControllerKind::proposed;
    g.k_pdc = 18.8801;
    g.k_idc = 2811.2;
    g.k12 = 123.7138;
    g.k14 = 4.9404;
    g.k15 = 0.0; // "-" in the table
    g.k21 = -20.1083;
    g.k22 = 0.5532;
    g.k24 = 0.0615;
    g.k31 = 5.684;
    g.k32 = -0.1862;
    g.k34 = 0.0908;
    return g;
}

GainSet GainSet::vsg_from_original()
{
    GainSet g = table2_original().decoupled();
    g.kind = ControllerKind::vsg;
    return g;
}

GainSet GainSet::decoupled() const
{
    GainSet g = *this;
    g.k12 = g.k14 = g.k15 = 0.0;
    g.k21 = g.k24 = 0.0;
    g.k31 = g.k32 = 0.0;
    return g;
}

void GainSet::validate() const
{
    const double all[] = {k_pdc, k_idc, k12, k14, k15, k21, k22, k24, k31, k32, k34};
    for (double v : all)
        if (!std::isfinite(v))
            throw ConfigError("gain set contains a non-finite gain");
    if (!(k22 > 0.0))
        throw ConfigError("k22 must be > 0 (pole of the droop filter)");
    if (k_idc == 0.0)
        throw ConfigError("k_idc must be nonzero");
    if (k34 == 0.0)
        throw ConfigError("k34 must be nonzero");
    if (kind == ControllerKind::vsg &&
        (k12 != 0.0 || k14 != 0.0 || k15 != 0.0 || k21 != 0.0 || k24 != 0.0 || k31 != 0.0 || k32 != 0.0))
        throw ConfigError("VSG gain set must have all coupling gains equal to zero");
    if (kind == ControllerKind::proposed && k15 != 0.0)
        throw ConfigError("k15 is not part of the proposed structure and must be zero");
}

GainSet gain_preset(std::string_view name)
{
    if (name == "table2-original")
        return GainSet::table2_original();
    if (name == "table2-proposed")
        return GainSet::table2_proposed();
    if (name == "vsg")
        return GainSet::vsg_from_original();
    throw ConfigError("unknown gain preset '" + std::string(name) + "'");
}

ControllerState controller_derivative(const GainSet& g, const ControllerState& xc, const ErrorVector& e,
                                      const Droop& droop)
{
    const double Dp = droop.Dp;
    const double Dq = droop.Dq;
    ControllerState dx;
    switch (g.kind) {
    case ControllerKind::vsg:
    case ControllerKind::mimo_gfm:
        // Both share the decoupled state equations; MIMO-GFM differs only in
        // how the states map to the outputs.
        dx.x1 = g.k_idc * e[0];
        dx.x2 = -g.k22 * xc.x2 + Dp * g.k22 * e[1];
        dx.x3 = g.k34 * e[3] + g.k34 / Dq * e[4];
        break;
    case ControllerKind::proposed:
        dx.x1 = -g.k12 * xc.x2 + g.k_idc * e[0] + Dp * g.k12 * e[1] + g.k14 * e[3] + g.k14 / Dq * e[4];
        dx.x2 = -g.k22 * xc.x2 + g.k21 * e[0] + Dp * g.k22 * e[1] + g.k24 * e[3] + g.k24 / Dq * e[4];
        dx.x3 = -g.k32 * xc.x2 + g.k31 * e[0] + Dp * g.k32 * e[1] + g.k34 * e[3] + g.k34 / Dq * e[4];
        break;
    }
    return dx;
}

ControlDeviations controller_output(const GainSet& g, const ControllerState& xc, const ErrorVector& e,
                                    const Droop& droop)
{
    ControlDeviations out;
    switch (g.kind) {
    case ControllerKind::vsg:
    case ControllerKind::proposed:
        out.iu_dev = xc.x1 + g.k_pdc * e[0];
        out.omega_dev = xc.x2;
        out.Eu_dev = xc.x3;
        break;
    case ControllerKind::mimo_gfm:
        out.iu_dev = xc.x1 + g.k_pdc * e[0] + g.k12 * e[1] + g.k14 * e[3] + g.k15 * e[4];
        out.omega_dev = xc.x2 + g.k21 * e[0] + g.k24 * e[3] + g.k24 / droop.Dq * e[4];
        out.Eu_dev = xc.x3 + g.k31 * e[0] + g.k32 * e[1];
        break;
    }
    return out;
}

namespace {

Rational ratio(std::initializer_list<double> num_desc, std::initializer_list<double> den_desc)
{
    return {Polynomial::from_descending(num_desc), Polynomial::from_descending(den_desc)};
}

} // namespace

RationalMatrix transfer_matrix(const GainSet& g, const Droop& droop)
{
    if (!(g.k22 > 0.0))
        throw ConfigError("k22 must be > 0");
    const double Dp = droop.Dp;
    const double Dq = droop.Dq;
    const double k22 = g.k22;

    RationalMatrix phi;
    for (auto& row : phi)
        row.fill(Rational::constant(0.0));

    switch (g.kind) {
    case ControllerKind::vsg:
        phi[0][0] = ratio({g.k_pdc, g.k_idc}, {1.0, 0.0});
        phi[1][1] = ratio({Dp * k22}, {1.0, k22});
        phi[2][3] = ratio({g.k34}, {1.0, 0.0});
        phi[2][4] = ratio({g.k34 / Dq}, {1.0, 0.0});
        break;
    case ControllerKind::mimo_gfm:
        phi[0][0] = ratio({g.k_pdc, g.k_idc}, {1.0, 0.0});
        phi[0][1] = Rational::constant(g.k12);
        phi[0][3] = Rational::constant(g.k14);
        phi[0][4] = Rational::constant(g.k15);
        phi[1][0] = Rational::constant(g.k21);
        phi[1][1] = ratio({Dp * k22}, {1.0, k22});
        phi[1][3] = Rational::constant(g.k24);
        phi[1][4] = Rational::constant(g.k24 / Dq);
        phi[2][0] = Rational::constant(g.k31);
        phi[2][1] = Rational::constant(g.k32);
        phi[2][3] = ratio({g.k34}, {1.0, 0.0});
        phi[2][4] = ratio({g.k34 / Dq}, {1.0, 0.0});
        break;
    case ControllerKind::proposed: {
        const std::initializer_list<double> second = {1.0, k22, 0.0};
        const std::initializer_list<double> first = {1.0, k22};
        phi[0][0] = ratio({g.k_pdc, g.k_pdc * k22 + g.k_idc, g.k_idc * k22 - g.k12 * g.k21}, second);
        phi[0][1] = ratio({Dp * g.k12}, first);
        phi[0][3] = ratio({g.k14, g.k14 * k22 - g.k12 * g.k24}, second);
        phi[0][4] = ratio({g.k14 / Dq, g.k14 * k22 / Dq - g.k12 * g.k24 / Dq}, second);
        phi[1][0] = ratio({g.k21}, first);
        phi[1][1] = ratio({Dp * k22}, first);
        phi[1][3] = ratio({g.k24}, first);
        phi[1][4] = ratio({g.k24 / Dq}, first);
        phi[2][0] = ratio({g.k31, k22 * g.k31 - g.k21 * g.k32}, second);
        phi[2][1] = ratio({Dp * g.k32}, first);
        phi[2][3] = ratio({g.k34, k22 * g.k34 - g.k24 * g.k32}, second);
        phi[2][4] = ratio({g.k34 / Dq, k22 * g.k34 / Dq - g.k24 * g.k32 / Dq}, second);
        break;
    }
    }
    return phi;
}

ControllerRealization realization(const GainSet& g, const Droop& droop)
{
    ControllerRealization r;
    const ErrorVector zero_e{};
    for (std::size_t j = 0; j < 3; ++j) {
        ControllerState xs{};
        (j == 0 ? xs.x1 : j == 1 ? xs.x2 : xs.x3) = 1.0;
        const ControllerState dx = controller_derivative(g, xs, zero_e, droop);
        const ControlDeviations y = controller_output(g, xs, zero_e, droop);
        r.A[0][j] = dx.x1;
        r.A[1][j] = dx.x2;
        r.A[2][j] = dx.x3;
        r.C[0][j] = y.iu_dev;
        r.C[1][j] = y.omega_dev;
        r.C[2][j] = y.Eu_dev;
    }
    for (std::size_t j = 0; j < 5; ++j) {
        ErrorVector e{};
        e[j] = 1.0;
        const ControllerState dx = controller_derivative(g, ControllerState{}, e, droop);
        const ControlDeviations y = controller_output(g, ControllerState{}, e, droop);
        r.B[0][j] = dx.x1;
        r.B[1][j] = dx.x2;
        r.B[2][j] = dx.x3;
        r.D[0][j] = y.iu_dev;
        r.D[1][j] = y.omega_dev;
        r.D[2][j] = y.Eu_dev;
    }
    return r;
}

} // namespace gfm
