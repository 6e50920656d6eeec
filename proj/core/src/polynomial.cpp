#include "gfm/polynomial.hpp"

#include <algorithm>

namespace gfm {

Polynomial::Polynomial(std::initializer_list<double> ascending) : c_(ascending) { trim(); }

Polynomial::Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) { trim(); }

Polynomial Polynomial::from_descending(std::initializer_list<double> descending)
{
    std::vector<double> c(descending);
    std::reverse(c.begin(), c.end());
    return Polynomial(std::move(c));
}

void Polynomial::trim()
{
    while (!c_.empty() && c_.back() == 0.0)
        c_.pop_back();
}

int Polynomial::degree() const noexcept { return static_cast<int>(c_.size()) - 1; }

double Polynomial::coeff(int power) const noexcept
{
    if (power < 0 || power > degree())
        return 0.0;
    return c_[static_cast<std::size_t>(power)];
}

std::complex<double> Polynomial::operator()(std::complex<double> s) const
{
    // Horner
    std::complex<double> acc{0.0, 0.0};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it)
        acc = acc * s + *it;
    return acc;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b)
{
    std::vector<double> c(std::max(a.c_.size(), b.c_.size()), 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        c[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i)
        c[i] += b.c_[i];
    return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

Polynomial operator*(const Polynomial& a, const Polynomial& b)
{
    if (a.c_.empty() || b.c_.empty())
        return {};
    std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
        for (std::size_t j = 0; j < b.c_.size(); ++j)
            c[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(c));
}

Polynomial operator*(double k, const Polynomial& a)
{
    std::vector<double> c(a.c_);
    for (auto& v : c)
        v *= k;
    return Polynomial(std::move(c));
}

} // namespace gfm
