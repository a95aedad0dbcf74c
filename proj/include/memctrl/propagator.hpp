#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "memctrl/function_space.hpp"
#include "memctrl/memory_kernels.hpp"
#include "memctrl/resolvent.hpp"
#include "memctrl/time_grid.hpp"

namespace memctrl {

enum class ControlKernel { Min, Zero };

/// B_jk = <a_j, K a_k> for the integral operator with kernel K(z, w),
/// by nested Gauss-Legendre split at the diagonal.
[[nodiscard]] Matrix control_matrix(ControlKernel kernel, const SpaceConfig& space);
[[nodiscard]] StateVector control_operator_B(const Vector& u, const Matrix& B);

struct ImpulseSchedule {
    std::vector<double> times;
    std::vector<Matrix> D;
    std::vector<Matrix> E;

    /// The same D, E at every instant.
    static ImpulseSchedule uniform(std::vector<double> times, const Matrix& D, const Matrix& E);

    [[nodiscard]] int size() const { return static_cast<int>(times.size()); }
    /// Throws ConfigError on mismatched counts, dimensions or instants.
    void validate(const TimeGrid& grid, int n_modes, int n_control) const;
};

/// x(t_k^+) = (I + D_k) x(t_k) + E_k v_k, k = 1..m.
[[nodiscard]] StateVector jump(const StateVector& x, int k, const ImpulseSchedule& sched, const Vector& v);

/// Distributed control sampled per segment (columns at the segment's nodes,
/// both end nodes included, so an impulse node carries a value on each side)
/// plus one vector per impulse.
struct ControlBundle {
    std::vector<Matrix> u;
    std::vector<Vector> v;

    static ControlBundle zero(const TimeGrid& grid, int n_control);

    [[nodiscard]] Eigen::Ref<const Vector> u_at(const TimeGrid& grid, int segment, int node) const;
    /// max over samples of the Euclidean coefficient norm of u.
    [[nodiscard]] double max_u_norm() const;
    void check(const TimeGrid& grid, int n_control) const;
};

struct Trajectory {
    Matrix left;   // n_modes x (n_steps + 1)
    Matrix right;  // n_modes x m, x(t_k^+)

    [[nodiscard]] StateVector at(int j) const { return StateVector(left.col(j)); }
    [[nodiscard]] StateVector after_impulse(int k) const { return StateVector(right.col(k)); }
    [[nodiscard]] StateVector terminal() const { return StateVector(left.col(left.cols() - 1)); }
    /// max_j |x(t_j) - y(t_j)| over left and right values (coefficient 2-norm).
    [[nodiscard]] double sup_distance(const Trajectory& other) const;
};

/// Causal source f(t_j, x_{t_j}); it may only read nodes <= j through the view.
using SourceHandle = std::function<StateVector(int node, const PastView& view)>;

/// f1'(t_j) + f2(t_j) at every node, n_modes x (n_steps + 1).
[[nodiscard]] Matrix history_forcing_table(const TimeGrid& grid, const HistoryFunction& psi, const KernelParams& kp,
                                           const Vector& eigenvalues);

/// Everything the mild-solution formula needs apart from controls and f.
struct SystemModel {
    ResolventFamily R;
    Matrix B;
    ImpulseSchedule sched;
    HistoryFunction psi;
    Matrix forcing;

    SystemModel(ResolventFamily R, Matrix B, ImpulseSchedule sched, HistoryFunction psi, Matrix forcing);

    [[nodiscard]] const TimeGrid& grid() const { return R.grid(); }
    [[nodiscard]] int n_modes() const { return R.n_modes(); }
    [[nodiscard]] int n_control() const { return static_cast<int>(B.cols()); }
};

/// Trapezoid approximation of int_{t_a}^{t_j} R(t_j - s) w(s) ds; column i of
/// w holds w(t_{a+i}).
[[nodiscard]] StateVector segment_convolve(const ResolventFamily& R, const Matrix& w, int a, int j);

/// Forward march of the impulsive mild solution. f is evaluated once x(t_j)
/// is known; the step into t_j uses the value lagged to t_{j-1}.
[[nodiscard]] Trajectory mild_solution(const SystemModel& model, const ControlBundle& controls,
                                       const SourceHandle& f = {});
/// Same formula with f tabulated on the grid (n_modes x (n_steps + 1)).
[[nodiscard]] Trajectory mild_solution(const SystemModel& model, const ControlBundle& controls,
                                       const Matrix& f_table);

/// f(t_j, x_{t_j}) along a finished trajectory.
[[nodiscard]] Matrix tabulate_source(const SystemModel& model, const Trajectory& traj, const SourceHandle& f);

/// All x(t_k^+) from the explicit product/sum formula (no recursion).
[[nodiscard]] std::vector<StateVector> post_impulse_closed_form(const SystemModel& model,
                                                                const ControlBundle& controls,
                                                                const Matrix& f_table);

/// CSV with columns t, side, mode, coefficient.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const TimeGrid& grid);

}  // namespace memctrl
