#pragma once

#include <stdexcept>
#include <string>

namespace gfm {

// Base of all library errors. Two families: ConfigError (bad input, exit
// code 2 from the CLI) and NumericalError (solver/model failure, exit 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Evaluation outside the model's domain, e.g. vdc <= 0 in the DC-link equation.
class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : NumericalError(what), residual_(residual), iterations_(iterations) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

class InstabilityError : public NumericalError {
public:
    InstabilityError(const std::string& what, double abscissa)
        : NumericalError(what), abscissa_(abscissa) {}

    [[nodiscard]] double abscissa() const noexcept { return abscissa_; }

private:
    double abscissa_;
};

class AlgebraicLoopError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace gfm
