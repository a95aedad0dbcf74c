#pragma once

#include <functional>
#include <iosfwd>

#include "memctrl/function_space.hpp"
#include "memctrl/memory_kernels.hpp"
#include "memctrl/time_grid.hpp"

namespace memctrl {

/// Scalar kernels of one resolvent mode:
///   neutral g(t) = t^neutral_exponent * neutral_smooth(t),  memory n(t).
/// Either callable may be empty, meaning the kernel is identically zero.
struct VolterraKernels {
    double neutral_exponent = 0.0;
    std::function<double(double)> neutral_smooth;
    std::function<double(double)> memory;

    static VolterraKernels from_params(const KernelParams& kp);
    static VolterraKernels memoryless();
    /// g = c constant, n = 0.
    static VolterraKernels constant_neutral(double c);

    [[nodiscard]] bool has_neutral() const { return static_cast<bool>(neutral_smooth); }
    [[nodiscard]] bool has_memory() const { return static_cast<bool>(memory); }
    [[nodiscard]] double neutral(double t) const;
    [[nodiscard]] double memory_at(double t) const { return memory ? memory(t) : 0.0; }
};

/// Samples r(t_j), j = 0..n_steps, of
///   d/dt [r + g*r] = lambda r + n*r,  r(0) = 1.
/// Implicit trapezoid in time; g*r by product integration against the
/// piecewise-linear interpolant of r, n*r by the trapezoid rule.
[[nodiscard]] Vector solve_mode(double lambda, const VolterraKernels& kernels, const TimeGrid& grid);
[[nodiscard]] Vector solve_mode(double lambda, const KernelParams& kp, const TimeGrid& grid);

/// Diagonal resolvent R(t_j) on the sine eigenbasis.
class ResolventFamily {
public:
    ResolventFamily(Vector eigenvalues, Matrix modes, TimeGrid grid, VolterraKernels kernels);

    [[nodiscard]] const Vector& eigenvalues() const { return eigenvalues_; }
    /// n_modes x (n_steps + 1), modes()(k, j) = r_k(t_j).
    [[nodiscard]] const Matrix& modes() const { return modes_; }
    [[nodiscard]] const TimeGrid& grid() const { return grid_; }
    [[nodiscard]] const VolterraKernels& kernels() const { return kernels_; }
    [[nodiscard]] int n_modes() const { return static_cast<int>(modes_.rows()); }
    /// max_{k,j} |r_k(t_j)|.
    [[nodiscard]] double bound() const { return bound_; }

    /// Diagonal of R(t_j).
    [[nodiscard]] auto at(int j) const { return modes_.col(j); }
    [[nodiscard]] Matrix matrix(int j) const { return modes_.col(j).asDiagonal(); }

private:
    Vector eigenvalues_;
    Matrix modes_;
    TimeGrid grid_;
    VolterraKernels kernels_;
    double bound_;
};

[[nodiscard]] ResolventFamily build_family(const Vector& eigenvalues, const VolterraKernels& kernels,
                                           const TimeGrid& grid);
[[nodiscard]] ResolventFamily build_family(const Vector& eigenvalues, const KernelParams& kp, const TimeGrid& grid);

/// R(t) x for t on the grid; ConfigError otherwise.
[[nodiscard]] StateVector apply(const ResolventFamily& R, double t, const StateVector& x);
[[nodiscard]] StateVector apply_at(const ResolventFamily& R, int node, const StateVector& x);

struct ResidualReport {
    /// Defect of the identity with the convolution written as int g(t-s) r(s) ds.
    Vector direct;
    /// Same identity with the convolution written as int g(s) r(t-s) ds.
    Vector commuted;
    double max_defect = 0.0;
};

/// Time-integrated defect of the mode equation,
///   S(t) + (g*S)(t) - 1 - lambda int_0^t S - int_0^t N1(t-s) S(s) ds,  N1 = int_0 n,
/// where S is the local cubic interpolant of the samples. Quadrature is
/// Gauss-Legendre per cell, with tau = h v^4 on the singular cell. The
/// maximum is taken over the interior nodes.
[[nodiscard]] ResidualReport residual(const Vector& r, double lambda, const VolterraKernels& kernels,
                                      const TimeGrid& grid);
[[nodiscard]] ResidualReport residual(const ResolventFamily& R, int mode);

/// CSV with columns k, t, r.
void write_resolvent_csv(std::ostream& os, const ResolventFamily& R);

}  // namespace memctrl
