#pragma once

#include <stdexcept>
#include <string>

namespace sgl {

// Invalid geometry, grid, tree binding, or experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Weight parameters outside their admissible range (e.g. sigma < 2).
class ParameterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Evaluation outside the domain of a function (e.g. gamma at its blow-up time).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mismatched sizes between fields, grids or trees.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Divergence, NaN, ellipticity violation, singular systems.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A log-space weight exceeded the representable range of double.
class SaturationError : public NumericalError {
public:
    SaturationError(const std::string& what, double log_value)
        : NumericalError(what), log_value_(log_value) {}
    double log_value() const noexcept { return log_value_; }

private:
    double log_value_;
};

}  // namespace sgl
