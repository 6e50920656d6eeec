#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace gfm {

// Physical constants of the converter, LC filter, grid line and DC link.
// Everything except the two base quantities is per-unit on (Sn, Vn, omega_b)
// for the AC side and (Sn, Vdc_base) for the DC side.
struct PlantParams {
    double omega_b = 100.0 * std::numbers::pi; // rad/s
    double Lf = 0.0174;
    double Cf = 0.2268;
    double Lg = 0.0174;
    double Rg = 0.0017;
    double Rf = 0.0017;       // only used when include_rf is set
    double Cdc_pu = 100.0 * std::numbers::pi * 500e-6 * 700.0 * 700.0 / 4000.0; // omega_b*Cdc*Vdc_base^2/Sn
    double Dp = 0.01;
    double Dq = 0.05;
    double Sn = 4000.0;       // VA
    double Vn = 380.0;        // V line-to-line RMS (AC base)
    double Vdc_base = 700.0;  // V
    bool include_rf = false;  // add -omega_b*Rf/Lf*i to the inductor-current rates

    // Table I values, with Cdc = 500 uF converted to per-unit.
    static PlantParams table1();

    // Per-unit DC capacitance from an SI value using this object's bases.
    [[nodiscard]] double dc_capacitance_pu(double cdc_farad) const noexcept
    {
        return omega_b * cdc_farad * Vdc_base * Vdc_base / Sn;
    }

    // Throws ConfigError on non-positive elements.
    void validate() const;
};

struct PlantState {
    double id = 0.0;
    double iq = 0.0;
    double vd = 0.0;
    double vq = 0.0;
    double iod = 0.0;
    double ioq = 0.0;
    double delta = 0.0; // unwrapped in the dynamics
    double vdc = 1.0;

    static constexpr std::size_t size = 8;

    [[nodiscard]] std::array<double, size> to_array() const noexcept { return {id, iq, vd, vq, iod, ioq, delta, vdc}; }
    static PlantState from_array(const std::array<double, size>& a) noexcept
    {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
    }

    // delta mapped to (-pi, pi], for reporting.
    [[nodiscard]] double wrapped_delta() const noexcept;
};

struct PlantInputs {
    double iu = 0.0;
    double omega_u = 1.0;
    double Eu = 1.0;

    static constexpr std::size_t size = 3;
    [[nodiscard]] std::array<double, size> to_array() const noexcept { return {iu, omega_u, Eu}; }
};

struct Disturbance {
    double omega_g = 1.0;
    double Vg = 1.0;

    static constexpr std::size_t size = 2;
    [[nodiscard]] std::array<double, size> to_array() const noexcept { return {omega_g, Vg}; }
};

struct PlantOutputs {
    double vdc = 0.0;
    double p = 0.0;
    double omega_u = 0.0;
    double q = 0.0;
    double V = 0.0;

    static constexpr std::size_t size = 5;
    [[nodiscard]] std::array<double, size> to_array() const noexcept { return {vdc, p, omega_u, q, V}; }
};

// Controller references Yref = [Vdcref, Pref, omega_ref, Qref, Vref]; omega_ref is fixed at 1.
struct Setpoints {
    double Pref = 0.5;
    double Qref = 0.0;
    double Vref = 1.0;
    double Vdcref = 1.0;
};

// Right-hand side of the averaged dq model, generic in the scalar so the
// same expressions serve double evaluation and complex-step differentiation.
// Callers are responsible for the vdc > 0 precondition.
template <typename T>
std::array<T, 8> plant_rates(const std::array<T, 8>& x, const std::array<T, 3>& u, const std::array<T, 2>& d,
                             const PlantParams& prm)
{
    using std::cos;
    using std::sin;
    const double wb = prm.omega_b;
    const T& id = x[0];
    const T& iq = x[1];
    const T& vd = x[2];
    const T& vq = x[3];
    const T& iod = x[4];
    const T& ioq = x[5];
    const T& delta = x[6];
    const T& vdc = x[7];
    const T& iu = u[0];
    const T& wu = u[1];
    const T& Eu = u[2];
    const T& wg = d[0];
    const T& Vg = d[1];

    std::array<T, 8> r{};
    r[0] = wb / prm.Lf * Eu - wb / prm.Lf * vd + wb * wu * iq;
    r[1] = -wb / prm.Lf * vq - wb * wu * id;
    if (prm.include_rf) {
        r[0] -= wb * prm.Rf / prm.Lf * id;
        r[1] -= wb * prm.Rf / prm.Lf * iq;
    }
    r[2] = wb / prm.Cf * id - wb / prm.Cf * iod + wb * wu * vq;
    r[3] = wb / prm.Cf * iq - wb / prm.Cf * ioq - wb * wu * vd;
    r[4] = wb / prm.Lg * vd - wb / prm.Lg * Vg * cos(delta) - wb * prm.Rg / prm.Lg * iod + wb * wu * ioq;
    r[5] = wb / prm.Lg * vq + wb / prm.Lg * Vg * sin(delta) - wb * prm.Rg / prm.Lg * ioq - wb * wu * iod;
    r[6] = wb * wu - wb * wg;
    r[7] = wb / prm.Cdc_pu * iu - wb * Eu * id / (prm.Cdc_pu * vdc);
    return r;
}

template <typename T>
std::array<T, 5> plant_output_values(const std::array<T, 8>& x, const std::array<T, 3>& u)
{
    using std::sqrt;
    const T& vd = x[2];
    const T& vq = x[3];
    const T& iod = x[4];
    const T& ioq = x[5];
    return {x[7], vd * iod + vq * ioq, u[1], -vd * ioq + vq * iod, sqrt(vd * vd + vq * vq)};
}

// State derivative (per-second rates). Throws DomainError if x.vdc <= 0.
PlantState derivatives(const PlantState& x, const PlantInputs& u, const Disturbance& d, const PlantParams& prm);

PlantOutputs outputs(const PlantState& x, const PlantInputs& u);

struct Equilibrium {
    PlantState x;
    PlantInputs u;
    double residual = 0.0; // max |rate| in 1/s at the returned point
    int iterations = 0;
};

// Steady state consistent with the droop/integral relations of every
// controller kind: vdc = Vdcref, omega_u = omega_g,
// omega_u - 1 = Dp*(Pref - p), q + V/Dq = Qref + Vref/Dq.
// Damped Newton over the 8 states and 3 inputs; throws ConvergenceError.
Equilibrium find_equilibrium(const PlantParams& prm, const Setpoints& sp, const Disturbance& d);

} // namespace gfm
