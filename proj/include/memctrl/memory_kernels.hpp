#pragma once

#include <functional>

#include "memctrl/function_space.hpp"
#include "memctrl/time_grid.hpp"

namespace memctrl {

/// Parameters of the fading-memory kernels
///   G(t) = t^gamma e^{-kappa t},  N(t) = e^{-mu t},
///   H(t) = hist_kernel_scale * e^{-hist_kernel_rate t}.
struct KernelParams {
    double gamma = 0.5;
    double kappa = 1.0;
    double mu = 1.0;
    double hist_kernel_scale = 0.0;
    double hist_kernel_rate = 1.0;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// 8 / min(kappa, mu, hist_kernel_rate).
    [[nodiscard]] double default_horizon() const;
    /// Slowest exponential decay rate among the kernels.
    [[nodiscard]] double slowest_rate() const;
};

[[nodiscard]] double kernel_g(double t, const KernelParams& kp);
/// g'(t) = (gamma t^{gamma-1} - kappa t^gamma) e^{-kappa t}, t > 0.
[[nodiscard]] double kernel_g_prime(double t, const KernelParams& kp);
[[nodiscard]] double kernel_n(double t, const KernelParams& kp);

/// Initial history psi sampled at theta_j = -j * step, j = 0..count-1,
/// linearly interpolated in between. Beyond the horizon psi is taken as
/// negligible against the exponentially decaying kernels.
class HistoryFunction {
public:
    HistoryFunction(double step, Matrix samples);

    /// Samples a callable theta -> StateVector on [-horizon, 0].
    static HistoryFunction sample(const std::function<StateVector(double)>& psi, int n_modes, double horizon,
                                  double step);
    static HistoryFunction zero(int n_modes, double horizon, double step);

    [[nodiscard]] double step() const { return step_; }
    [[nodiscard]] double horizon() const { return step_ * (count() - 1); }
    [[nodiscard]] int count() const { return static_cast<int>(samples_.cols()); }
    [[nodiscard]] int n_modes() const { return static_cast<int>(samples_.rows()); }
    [[nodiscard]] const Matrix& samples() const { return samples_; }
    [[nodiscard]] StateVector initial() const { return StateVector(samples_.col(0)); }
    /// Piecewise-linear value at theta in [-horizon, 0]; zero outside.
    [[nodiscard]] StateVector value(double theta) const;
    /// max_j |psi(theta_j)|_X.
    [[nodiscard]] double sup_norm(const SpaceConfig& cfg) const;

private:
    double step_;
    Matrix samples_;
};

/// Horizon check shared by the history integrals: throws ConfigError when
/// e^{-slowest_rate * horizon} exceeds decay_tol.
void check_history_horizon(const HistoryFunction& psi, const KernelParams& kp, double decay_tol = 1e-3);

/// f1'(t) = -int_{-T}^0 g'(t - s) psi(s) ds. The t^{gamma-1} singularity is
/// integrated in the variable sigma = tau^gamma.
[[nodiscard]] StateVector history_f1_prime(double t, const HistoryFunction& psi, const KernelParams& kp);

/// (f2(t))_k = lambda_k int_{-T}^0 e^{-mu (t - s)} psi_k(s) ds.
[[nodiscard]] StateVector history_f2(double t, const HistoryFunction& psi, const KernelParams& kp,
                                     const Vector& eigenvalues);

/// Read-only view of x(s) for s <= t_limit: psi on s <= 0, trajectory nodes
/// 0..limit on s > 0 (right limits at impulse nodes open the next cell).
class PastView {
public:
    PastView(const HistoryFunction& psi, const TimeGrid& grid, const Matrix& left, const Matrix& right, int limit);

    [[nodiscard]] const HistoryFunction& history() const { return *psi_; }
    [[nodiscard]] const TimeGrid& grid() const { return *grid_; }
    [[nodiscard]] int limit() const { return limit_; }

    /// x(t_j), the left value at an impulse node.
    [[nodiscard]] Eigen::Ref<const Vector> left(int j) const;
    /// Value opening the cell [t_j, t_{j+1}]: x(t_j^+) at impulse nodes, x(t_j) elsewhere.
    [[nodiscard]] Eigen::Ref<const Vector> cell_start(int j) const;

private:
    void check(int j) const;

    const HistoryFunction* psi_;
    const TimeGrid* grid_;
    const Matrix* left_;
    const Matrix* right_;
    int limit_;
};

/// f(t_j, x_{t_j}) = int_{-T}^0 H(-theta) x(t_j + theta) dtheta, rescaled
/// to norm `clamp` when it exceeds it.
class HistoryNonlinearity {
public:
    HistoryNonlinearity(const KernelParams& kp, double horizon, double clamp, const SpaceConfig& space);

    [[nodiscard]] double clamp() const { return clamp_; }
    [[nodiscard]] bool is_zero() const { return scale_ == 0.0; }

    /// Unclamped history integral.
    [[nodiscard]] StateVector integral(int node, const PastView& view) const;
    [[nodiscard]] StateVector operator()(int node, const PastView& view) const;

private:
    double scale_;
    double rate_;
    double horizon_;
    double clamp_;
    SpaceConfig space_;
};

}  // namespace memctrl
