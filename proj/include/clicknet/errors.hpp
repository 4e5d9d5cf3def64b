#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clicknet {

/// Precondition violation on a public operation.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A series or root finder failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Malformed, truncated or out-of-schema file.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, std::size_t epoch)
        : std::runtime_error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

/// Inconsistent scenario or CLI configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace clicknet
