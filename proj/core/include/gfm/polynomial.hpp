#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

namespace gfm {

// Real polynomial in s, coefficients stored in ascending powers:
// coeffs[0] + coeffs[1]*s + coeffs[2]*s^2 + ...
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> ascending);
    explicit Polynomial(std::vector<double> ascending);

    // Build from the conventional descending listing (highest power first).
    static Polynomial from_descending(std::initializer_list<double> descending);

    [[nodiscard]] int degree() const noexcept;
    [[nodiscard]] bool is_zero() const noexcept { return degree() < 0; }
    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return c_; }
    [[nodiscard]] double coeff(int power) const noexcept;

    [[nodiscard]] std::complex<double> operator()(std::complex<double> s) const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(double k, const Polynomial& a);

private:
    void trim();
    std::vector<double> c_;
};

// Real-coefficient rational function num(s)/den(s).
struct Rational {
    Polynomial num{0.0};
    Polynomial den{1.0};

    static Rational constant(double k) { return {Polynomial{k}, Polynomial{1.0}}; }

    [[nodiscard]] std::complex<double> operator()(std::complex<double> s) const { return num(s) / den(s); }
    [[nodiscard]] bool is_proper() const noexcept { return num.degree() <= den.degree(); }
    [[nodiscard]] bool is_strictly_proper() const noexcept { return num.degree() < den.degree(); }
    [[nodiscard]] bool is_zero() const noexcept { return num.is_zero(); }

    friend Rational operator*(const Rational& a, const Rational& b) { return {a.num * b.num, a.den * b.den}; }
    friend Rational operator+(const Rational& a, const Rational& b)
    {
        return {a.num * b.den + b.num * a.den, a.den * b.den};
    }
};

} // namespace gfm
