#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace memctrl {

/// Invalid or inconsistent configuration (bad dimensions, off-grid impulse, out-of-range parameter).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver did not reach its tolerance. Carries the residual history.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> residuals)
        : std::runtime_error(what), residuals_(std::move(residuals)) {}

    [[nodiscard]] const std::vector<double>& residuals() const { return residuals_; }
    [[nodiscard]] double last_residual() const { return residuals_.empty() ? 0.0 : residuals_.back(); }

private:
    std::vector<double> residuals_;
};

/// Two independently assembled quantities that must agree did not.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A source callback tried to read the trajectory ahead of the current time.
class CausalityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace memctrl
