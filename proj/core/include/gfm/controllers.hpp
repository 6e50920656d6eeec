#pragma once

#include <array>
#include <string>
#include <string_view>

#include "gfm/polynomial.hpp"

namespace gfm {

enum class ControllerKind {
    vsg,      // decoupled virtual synchronous generator
    mimo_gfm, // original MIMO grid-forming control, couplings in the state definitions
    proposed, // direct-states MIMO control, couplings in the state equations
};

std::string_view to_string(ControllerKind kind) noexcept;
// Accepts "vsg", "mimo_gfm" (alias "original"), "proposed". Throws ConfigError.
ControllerKind controller_kind_from_string(std::string_view name);

struct Droop {
    double Dp = 0.01;
    double Dq = 0.05;
};

// Gains of the 3x5 control transfer matrix. k15 exists only in the original
// MIMO-GFM structure; VSG keeps only the diagonal gains.
struct GainSet {
    ControllerKind kind = ControllerKind::proposed;
    double k_pdc = 0.0;
    double k_idc = 0.0;
    double k12 = 0.0;
    double k14 = 0.0;
    double k15 = 0.0;
    double k21 = 0.0;
    double k22 = 0.0;
    double k24 = 0.0;
    double k31 = 0.0;
    double k32 = 0.0;
    double k34 = 0.0;

    static GainSet table2_original();
    static GainSet table2_proposed();
    // Diagonal gains of the original design with every coupling removed.
    static GainSet vsg_from_original();

    // Throws ConfigError when an invariant of the kind is broken.
    void validate() const;

    // Same kind with every coupling gain set to zero.
    [[nodiscard]] GainSet decoupled() const;

    friend bool operator==(const GainSet&, const GainSet&) = default;
};

// Looks up "table2-original", "table2-proposed" or "vsg"; throws ConfigError.
GainSet gain_preset(std::string_view name);

struct ControllerState {
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;

    friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

// e = Yref - y with Yref = [Vdcref, Pref, omega_ref, Qref, Vref]. e3 is never used.
struct ErrorVector {
    std::array<double, 5> e{};

    [[nodiscard]] double operator[](std::size_t i) const noexcept { return e[i]; }
    double& operator[](std::size_t i) noexcept { return e[i]; }
};

struct ControlDeviations {
    double iu_dev = 0.0;
    double omega_dev = 0.0;
    double Eu_dev = 0.0;

    friend bool operator==(const ControlDeviations&, const ControlDeviations&) = default;
};

ControllerState controller_derivative(const GainSet& g, const ControllerState& xc, const ErrorVector& e,
                                      const Droop& droop);

ControlDeviations controller_output(const GainSet& g, const ControllerState& xc, const ErrorVector& e,
                                    const Droop& droop);

using RationalMatrix = std::array<std::array<Rational, 5>, 3>;

// Closed-form control transfer matrix for the gain set's kind.
RationalMatrix transfer_matrix(const GainSet& g, const Droop& droop);

// Linear realization dxc = A xc + B e, dev = C xc + D e, row-major.
struct ControllerRealization {
    std::array<std::array<double, 3>, 3> A{};
    std::array<std::array<double, 5>, 3> B{};
    std::array<std::array<double, 3>, 3> C{};
    std::array<std::array<double, 5>, 3> D{};
};

// Matrices recovered by probing controller_derivative / controller_output
// with unit vectors (both maps are linear).
ControllerRealization realization(const GainSet& g, const Droop& droop);

} // namespace gfm
