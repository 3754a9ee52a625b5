#pragma once

#include <stdexcept>
#include <string>

namespace dgplace {

/// Malformed input data: feeder files, plan files, network invariant breaches.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration (solver options, GA settings, index weights).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Power flow failed to converge, or the network is electrically degenerate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, int worst_bus = 0, double worst_mismatch = 0.0)
        : std::runtime_error(what), worst_bus_(worst_bus), worst_mismatch_(worst_mismatch) {}

    int worst_bus() const noexcept { return worst_bus_; }
    double worst_mismatch() const noexcept { return worst_mismatch_; }

private:
    int worst_bus_;
    double worst_mismatch_;
};

}  // namespace dgplace
