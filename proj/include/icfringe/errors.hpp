#ifndef ICFRINGE_ERRORS_HPP
#define ICFRINGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace icfringe {

// Base type for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A physical or mathematical precondition was violated (non-paraxial angle,
// non-positive length, degenerate kernel, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// A discrete grid cannot represent the requested computation (aliased
// quadratic phase, integration window truncating the integrand, ...).
class SamplingError : public Error {
public:
    explicit SamplingError(const std::string& msg) : Error(msg) {}
};

// Data do not support the requested estimation step (too few extrema,
// degenerate design matrix, unphysical slope, no fringe center, ...).
class FitError : public Error {
public:
    explicit FitError(const std::string& msg) : Error(msg) {}
};

// File I/O and file format problems; message carries the path and, for
// parse errors, a line or byte offset.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Configuration file / option problems; message names the key and line.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace icfringe

#endif
