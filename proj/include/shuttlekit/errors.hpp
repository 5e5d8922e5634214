#pragma once

#include <stdexcept>
#include <string>

namespace shuttlekit {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

/// An integrand or field produced a non-finite value; carries the offending abscissa.
struct EvaluationError : Error {
    double where;
    EvaluationError(const std::string& msg, double t) : Error(msg), where(t) {}
};

/// Pivot collapsed below the scaled threshold in a dense solve.
struct SingularMatrixError : Error {
    using Error::Error;
};

/// ODE state became non-finite; carries the time of first divergence.
struct DivergenceError : Error {
    double when;
    DivergenceError(const std::string& msg, double t) : Error(msg), when(t) {}
};

/// Requested transport has no solution (bounded-optimal duration below its window).
struct InfeasibleError : Error {
    using Error::Error;
};

/// Duration incompatible with a discrete-duration protocol; carries the nearest valid one.
struct InvalidDurationError : Error {
    double nearest_valid;
    InvalidDurationError(const std::string& msg, double t) : Error(msg), nearest_valid(t) {}
};

/// Bad run configuration or parameter set (maps to exit code 2 in the CLI).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace shuttlekit
