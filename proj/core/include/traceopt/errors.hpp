#pragma once

#include <stdexcept>
#include <string>

namespace traceopt {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed user input: expressions, problem files, inconsistent flags.
class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

/// Missing or broken environment pieces (external solver bridge, paths).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// A basis enumeration exceeded its configured size cap.
class BasisOverflowError : public Error {
public:
    explicit BasisOverflowError(const std::string& msg) : Error(msg) {}
};

/// Numerical breakdown: indefinite Gram blocks, failed factorizations, ...
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

} // namespace traceopt
