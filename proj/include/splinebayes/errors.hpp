#pragma once

#include <stdexcept>
#include <string>

namespace splinebayes {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Violated precondition or out-of-domain argument.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// Numeric range exceeded (e.g. exp overflow for extreme natural parameters).
class RangeError : public Error {
public:
    explicit RangeError(const std::string& msg) : Error(msg) {}
};

/// Iterative solver failed to converge; carries a human-readable diagnosis.
class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

/// Discretized operator is singular/indefinite, or a score is degenerate.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Bad configuration (CLI flags or config file).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace splinebayes
