#pragma once

#include <optional>
#include <vector>

#include "memctrl/gramian.hpp"

namespace memctrl {

struct RegularizerSettings {
    enum class Method { Auto, ClosedForm, Newton };

    double alpha = 1e-2;
    double tolerance = 1e-10;
    int max_newton = 50;
    double damping = 0.5;
    int max_picard = 20000;
    Method method = Method::Auto;

    void validate() const;
};

/// Solution of alpha x + Gamma J(x) = alpha y, together with the residual
/// history of the iteration (empty for the closed form).
struct RegularizedSolution {
    StateVector x;
    int iterations = 0;
    std::vector<double> residuals;
    bool used_fallback = false;
};

/// Auto: closed form alpha (alpha I + Gamma)^{-1} y at p = 2, Newton otherwise.
/// Converged when |alpha x + Gamma J(x) - alpha y| <= tolerance (1 + alpha |y|).
[[nodiscard]] RegularizedSolution solve_regularized_ex(const Matrix& Gamma, const StateVector& y,
                                                       const RegularizerSettings& settings, const SpaceConfig& space,
                                                       const std::optional<StateVector>& initial = std::nullopt);
[[nodiscard]] StateVector solve_regularized(const Matrix& Gamma, const StateVector& y,
                                            const RegularizerSettings& settings, const SpaceConfig& space);

/// |alpha x + Gamma J(x) - alpha y| in coefficients.
[[nodiscard]] double regularized_residual(const Matrix& Gamma, const StateVector& x, const StateVector& y,
                                          double alpha, const SpaceConfig& space);

/// |x_alpha| <= |y| (1 + 1e-8).
[[nodiscard]] bool norm_bound_check(const StateVector& x_alpha, const StateVector& y, const SpaceConfig& space);

/// |x_alpha(y)| for each alpha.
[[nodiscard]] std::vector<double> alpha_limit_probe(const Matrix& Gamma, const StateVector& y,
                                                    const std::vector<double>& alphas, const SpaceConfig& space,
                                                    RegularizerSettings settings = {});

/// h minus the terminal contribution of psi(0) and the tabulated sources
/// (f_table plus the model's history forcings), from the explicit formula.
[[nodiscard]] StateVector sigma_defect(const SystemModel& model, const Matrix& f_table, const StateVector& h);

/// phi_hat = J(x_alpha(sigma) / alpha), i.e. J[(alpha I + Gamma J)^{-1} sigma].
[[nodiscard]] DualVector regularized_dual(const Matrix& Gamma, const StateVector& sigma,
                                          const RegularizerSettings& settings, const SpaceConfig& space);

/// (u, v) = M* phi_hat.
[[nodiscard]] ControlBundle synthesize_controls(const DualVector& phi_hat, const ControlMap& M);

}  // namespace memctrl
