#pragma once

#include <string>
#include <vector>

#include "memctrl/regularizer.hpp"

namespace memctrl {

/// A fully assembled steering problem: model, M, Gramian blocks, the
/// state-dependent source f (empty for the linear problem) and the target h.
struct ControlProblem {
    SpaceConfig space;
    SystemModel model;
    ControlMap M;
    GramianBlocks blocks;
    SourceHandle f;
    StateVector target;

    ControlProblem(SpaceConfig space, SystemModel model, SourceHandle f, StateVector target);

    [[nodiscard]] bool is_linear() const { return !static_cast<bool>(f); }
};

struct SemilinearSettings {
    RegularizerSettings reg;
    /// Negative selects 1e-8 (1 + |h|).
    double fp_tol = -1.0;
    int max_iterations = 200;
    double damping = 1.0;

    [[nodiscard]] double tolerance_for(const StateVector& h, const SpaceConfig& space) const;
};

struct ExperimentRecord {
    double alpha = 0.0;
    int iterations = 0;
    double fp_residual = 0.0;
    double terminal_error = 0.0;
    double identity_defect = 0.0;
    double wall_ms = 0.0;
    bool converged = false;
    double fp_tol = 0.0;
    double sigma_norm = 0.0;
    double max_u_norm = 0.0;
    /// M~ beta / alpha; NaN where the bound is not evaluated (p > 2).
    double control_bound = 0.0;
    std::vector<double> residual_history;
    std::string failure;
};

struct SteerResult {
    Trajectory trajectory;
    ControlBundle controls;
    StateVector sigma;
    Matrix source;  // f along the returned trajectory's predecessor iterate
    ExperimentRecord record;
};

/// Picard iteration x <- (1 - d) x + d G_alpha(x), starting from the
/// controlled trajectory with f = 0. Throws SolverError on non-convergence.
[[nodiscard]] SteerResult fixed_point_solve(const ControlProblem& problem, const SemilinearSettings& settings);

/// |x(b) - h + alpha (alpha I + Gamma J)^{-1} sigma|, with the right-hand
/// side solved afresh.
[[nodiscard]] double verify_terminal_identity(const Trajectory& traj, const StateVector& sigma, const Matrix& Gamma,
                                              const StateVector& h, const RegularizerSettings& reg,
                                              const SpaceConfig& space);

/// Constants of the distributed-control bound |u(s)| <= M~ beta / alpha.
struct ControlBoundConstants {
    double M_B = 0.0;
    double M_R = 0.0;
    double M_ID = 0.0;  // max_k |I + D_k|
    int m = 0;
    double M_tilde = 0.0;
    double beta = 0.0;
};

/// `sources` is f along the run (the history forcings are added here).
[[nodiscard]] ControlBoundConstants control_bound_constants(const ControlProblem& problem, const Matrix& sources);

/// One fixed-point run per alpha; failures are recorded, not dropped.
/// With require_positive, refuses (ConfigError) unless the Gramian is
/// strictly positive. n_threads <= 1 runs sequentially.
[[nodiscard]] std::vector<ExperimentRecord> alpha_sweep(const ControlProblem& problem,
                                                        const std::vector<double>& alphas,
                                                        const SemilinearSettings& settings, int n_threads = 1,
                                                        bool require_positive = true);

}  // namespace memctrl
