#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rclab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition or argument-range failure.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A field contains NaN or Inf where finite values are required.
class NonFiniteValue : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Two objects that must share a grid (or a shape) do not.
class DimensionMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A time step produced a negative density; dt is too large for the scheme.
class PositivityViolation : public Error {
public:
    PositivityViolation(const std::string& what, double time, double min_value)
        : Error(what), time_(time), min_value_(min_value) {}
    double time() const noexcept { return time_; }
    double min_value() const noexcept { return min_value_; }

private:
    double time_;
    double min_value_;
};

/// Non-finite values appeared during time stepping.
class NumericalBlowUp : public Error {
public:
    NumericalBlowUp(const std::string& what, double time) : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// The linear solver did not reach its tolerance.
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, std::size_t iterations, double relative_residual)
        : Error(what), iterations_(iterations), relative_residual_(relative_residual) {}
    std::size_t iterations() const noexcept { return iterations_; }
    double relative_residual() const noexcept { return relative_residual_; }

private:
    std::size_t iterations_;
    double relative_residual_;
};

/// A diagnostic that needs strictly positive densities met a value below its floor.
class FloorViolation : public Error {
public:
    using Error::Error;
};

/// Malformed or out-of-range configuration. Carries every violation found.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out;
        for (const auto& item : items) {
            if (!out.empty()) out += "; ";
            out += item;
        }
        return out;
    }
    std::vector<std::string> violations_;
};

/// Corrupt, truncated or unsupported file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace rclab
