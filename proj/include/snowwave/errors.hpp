#pragma once

#include <stdexcept>
#include <string>

namespace snowwave {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad inputs: invalid geometry, mismatched meshes, out-of-range arguments,
/// unsupported configurations, resource limits. CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed: meshing could not reach its quality target,
/// an eigensolve did not converge, an iteration diverged. CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The Westervelt smallness gate was violated. Carries both sides of the
/// inequality so callers can report how far off the data was. CLI exit code 4.
class SmallnessError : public Error {
public:
    SmallnessError(const std::string& what, double lhs, double rhs)
        : Error(what), lhs(lhs), rhs(rhs) {}
    double lhs;
    double rhs;
};

} // namespace snowwave
