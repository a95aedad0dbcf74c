#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "memctrl/propagator.hpp"

namespace memctrl {

/// Flat ordering of a ControlBundle: segment by segment, node by node, then
/// v_1..v_m. weights() is the discrete L2(J, U) x U^m inner product: the
/// per-segment trapezoid weight for u samples, 1 for impulse controls.
class ControlLayout {
public:
    ControlLayout(const TimeGrid& grid, int n_control);

    [[nodiscard]] int size() const { return size_; }
    [[nodiscard]] int n_control() const { return n_control_; }
    [[nodiscard]] const Vector& weights() const { return weights_; }
    /// Offset of u(segment, node).
    [[nodiscard]] int u_offset(int segment, int node) const;
    [[nodiscard]] int v_offset(int k) const;

    [[nodiscard]] Vector flatten(const ControlBundle& c) const;
    [[nodiscard]] ControlBundle unflatten(const Vector& flat) const;

private:
    TimeGrid grid_;
    int n_control_;
    std::vector<int> seg_offset_;
    int v_begin_;
    int size_;
    Vector weights_;
};

/// Maps carrying a contribution made on segment s (or at impulse k) to the
/// terminal time b, with A_k = (I + D_k) R(t_k - t_{k-1}):
///   impulse(k) = R(b - t_m) A_m ... A_{k+1},
///   segment(s) = impulse(s) (I + D_s) for s < m, I for the tail segment,
///   initial    = R(b - t_m) A_m ... A_1.
struct TerminalMaps {
    std::vector<Matrix> segment;
    std::vector<Matrix> impulse;
    Matrix initial;

    explicit TerminalMaps(const SystemModel& model);
};

/// The operator M: (u, v) -> terminal state, materialized as a matrix.
class ControlMap {
public:
    ControlMap(Matrix M, ControlLayout layout) : M_(std::move(M)), layout_(std::move(layout)) {}

    [[nodiscard]] const Matrix& matrix() const { return M_; }
    [[nodiscard]] const ControlLayout& layout() const { return layout_; }

    [[nodiscard]] StateVector apply(const ControlBundle& c) const;
    /// M* phi, adjoint under the weighted control inner product: W^{-1} M^T phi.
    [[nodiscard]] ControlBundle adjoint(const DualVector& phi) const;
    /// M W^{-1} M^T.
    [[nodiscard]] Matrix gram() const;

private:
    Matrix M_;
    ControlLayout layout_;
};

[[nodiscard]] ControlMap assemble_M(const SystemModel& model);

struct GramianBlocks {
    Matrix Gamma;       // tail integral over (t_m, b]
    Matrix GammaTilde;  // last impulse actuator
    Matrix Theta;       // distributed control before t_m
    Matrix ThetaTilde;  // earlier impulse actuators
    Matrix total;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};

/// Blocks from their own integral/product formulas (trapezoid in time).
/// Throws ConsistencyError if the sum differs from M M* by more than
/// 1e-6 relative Frobenius.
[[nodiscard]] GramianBlocks assemble_blocks(const SystemModel& model, const ControlMap& M);
[[nodiscard]] GramianBlocks assemble_blocks(const SystemModel& model);

struct PositivityReport {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    bool strictly_positive = false;

    /// `min_eig=<v> strictly_positive=<bool>`
    [[nodiscard]] std::string line() const;
};

/// Strictly positive when the smallest eigenvalue exceeds 1e-10 times the largest.
[[nodiscard]] PositivityReport positivity_report(const GramianBlocks& blocks);
[[nodiscard]] PositivityReport positivity_report(const Matrix& symmetric);

void write_matrix_csv(std::ostream& os, const Matrix& m);

}  // namespace memctrl
