#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hdconf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or inconsistent shapes passed to an operation.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Invalid user configuration (smoothing settings, synthetic spec, run config).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. Carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a structural invariant (duplicates, missing years).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Linear-algebra failure (singular system, eigen-solver failure).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Not enough residuals to calibrate an interval at some horizon.
class CalibrationError : public Error {
public:
    CalibrationError(const std::string& message, std::size_t horizon)
        : Error("horizon " + std::to_string(horizon) + ": " + message), horizon_(horizon) {}

    [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }

private:
    std::size_t horizon_;
};

}  // namespace hdconf
