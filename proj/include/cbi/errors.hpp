#pragma once

#include <stdexcept>
#include <string>

namespace cbi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain where the requested quantity is defined
/// (e.g. a cumulant-flow denominator that is not strictly positive).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature did not reach its tolerance.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// The integrand of the ergodicity condition diverges at the origin.
class NonIntegrableError : public Error {
public:
    using Error::Error;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Two objects that must share a grid do not.
class GridMismatchError : public Error {
public:
    using Error::Error;
};

/// An exponent left the representable range of exp().
class OverflowError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration, CSV or JSON input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cbi
