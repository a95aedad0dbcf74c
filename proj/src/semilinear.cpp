#include "memctrl/semilinear.hpp"

#include <Eigen/SVD>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "memctrl/error.hpp"

namespace memctrl {

ControlProblem::ControlProblem(SpaceConfig space_, SystemModel model_, SourceHandle f_, StateVector target_)
    : space(std::move(space_)),
      model(std::move(model_)),
      M(assemble_M(model)),
      blocks(assemble_blocks(model, M)),
      f(std::move(f_)),
      target(std::move(target_)) {
    if (target.size() != model.n_modes()) throw ConfigError("target.coeffs: wrong number of modes");
}

double SemilinearSettings::tolerance_for(const StateVector& h, const SpaceConfig& space) const {
    return fp_tol > 0.0 ? fp_tol : 1e-8 * (1.0 + lp_norm(h, space));
}

namespace {

struct Evaluation {
    Trajectory traj;
    ControlBundle controls;
    StateVector sigma;
};

// G_alpha for a tabulated source.
Evaluation evaluate_map(const ControlProblem& p, const Matrix& F, const RegularizerSettings& reg) {
    Evaluation ev;
    ev.sigma = sigma_defect(p.model, F, p.target);
    const DualVector phi = regularized_dual(p.blocks.total, ev.sigma, reg, p.space);
    ev.controls = synthesize_controls(phi, p.M);
    ev.traj = mild_solution(p.model, ev.controls, F);
    return ev;
}

Trajectory blend(const Trajectory& x, const Trajectory& y, double d) {
    Trajectory out;
    out.left = (1.0 - d) * x.left + d * y.left;
    out.right = (1.0 - d) * x.right + d * y.right;
    return out;
}

}  // namespace

SteerResult fixed_point_solve(const ControlProblem& problem, const SemilinearSettings& settings) {
    const auto start = std::chrono::steady_clock::now();
    const SystemModel& model = problem.model;
    const double tol = settings.tolerance_for(problem.target, problem.space);
    const Matrix zero = Matrix::Zero(model.n_modes(), model.grid().n_steps() + 1);

    SteerResult out;
    ExperimentRecord& rec = out.record;
    rec.alpha = settings.reg.alpha;
    rec.fp_tol = tol;

    Evaluation current = evaluate_map(problem, zero, settings.reg);
    Trajectory x = current.traj;
    Matrix F = zero;
    double d = settings.damping;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= settings.max_iterations; ++it) {
        F = problem.is_linear() ? zero : tabulate_source(model, x, problem.f);
        current = evaluate_map(problem, F, settings.reg);
        const double res = d * current.traj.sup_distance(x);
        rec.iterations = it;
        rec.residual_history.push_back(res);
        if (!std::isfinite(res)) break;
        if (res <= tol) {
            rec.converged = true;
            break;
        }
        if (res > prev && d > 1.0 / 64.0) d *= 0.5;
        prev = res;
        x = blend(x, current.traj, d);
    }
    rec.fp_residual = rec.residual_history.empty() ? 0.0 : rec.residual_history.back();

    out.trajectory = std::move(current.traj);
    out.controls = std::move(current.controls);
    out.sigma = std::move(current.sigma);
    out.source = std::move(F);
    rec.sigma_norm = lp_norm(out.sigma, problem.space);
    rec.terminal_error = lp_norm(out.trajectory.terminal() - problem.target, problem.space);
    rec.max_u_norm = out.controls.max_u_norm();
    rec.identity_defect = verify_terminal_identity(out.trajectory, out.sigma, problem.blocks.total, problem.target,
                                                   settings.reg, problem.space);
    if (problem.space.p() == 2.0) {
        const ControlBoundConstants c = control_bound_constants(problem, out.source);
        rec.control_bound = c.M_tilde * c.beta / rec.alpha;
    } else {
        rec.control_bound = std::numeric_limits<double>::quiet_NaN();
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    if (!rec.converged) {
        std::ostringstream os;
        os << "fixed-point iteration did not converge at alpha = " << rec.alpha << " after " << rec.iterations
           << " iterations (residual " << rec.fp_residual << ", tolerance " << tol << ")";
        rec.failure = os.str();
        throw SolverError(os.str(), rec.residual_history);
    }
    return out;
}

double verify_terminal_identity(const Trajectory& traj, const StateVector& sigma, const Matrix& Gamma,
                                const StateVector& h, const RegularizerSettings& reg, const SpaceConfig& space) {
    const StateVector x_alpha = solve_regularized(Gamma, sigma, reg, space);
    return lp_norm(traj.terminal() - h + x_alpha, space);
}

ControlBoundConstants control_bound_constants(const ControlProblem& problem, const Matrix& sources) {
    const SystemModel& model = problem.model;
    const TimeGrid& grid = model.grid();
    const int n = model.n_modes();
    ControlBoundConstants c;
    c.m = grid.n_impulses();
    c.M_B = model.B.size() ? Eigen::JacobiSVD<Matrix>(model.B).singularValues()(0) : 0.0;
    c.M_R = model.R.bound();
    const Matrix I = Matrix::Identity(n, n);
    for (const Matrix& D : model.sched.D) {
        c.M_ID = std::max(c.M_ID, Eigen::JacobiSVD<Matrix>(I + D).singularValues()(0));
    }
    const double grow = std::max(1.0, c.M_ID);
    for (int k = 1; k <= c.m + 1; ++k) c.M_tilde += std::pow(c.M_R, k) * std::pow(grow, k - 1);
    c.M_tilde *= c.M_B;

    // trapezoid integral of |f + f1' + f2| over J
    const Matrix S = sources + model.forcing;
    double integral = 0.0;
    for (int j = 0; j <= grid.n_steps(); ++j) {
        const double w = (j == 0 || j == grid.n_steps()) ? 0.5 : 1.0;
        integral += w * S.col(j).norm();
    }
    integral *= grid.h();

    c.beta = problem.target.coeffs.norm() +
             std::pow(c.M_ID, c.m) * std::pow(c.M_R, c.m + 1) * model.psi.initial().coeffs.norm();
    for (int k = 0; k <= c.m; ++k) c.beta += std::pow(c.M_ID, k) * std::pow(c.M_R, k + 1) * integral;
    return c;
}

std::vector<ExperimentRecord> alpha_sweep(const ControlProblem& problem, const std::vector<double>& alphas,
                                          const SemilinearSettings& settings, int n_threads, bool require_positive) {
    if (require_positive) {
        const PositivityReport rep = positivity_report(problem.blocks);
        if (!rep.strictly_positive) {
            throw ConfigError("sweep refused: assumption (H1) fails, the Gramian is not strictly positive (" +
                              rep.line() + ")");
        }
    }
    std::vector<ExperimentRecord> records(alphas.size());
    auto run_one = [&](std::size_t i) {
        SemilinearSettings s = settings;
        s.reg.alpha = alphas[i];
        try {
            records[i] = fixed_point_solve(problem, s).record;
        } catch (const SolverError& e) {
            ExperimentRecord r;
            r.alpha = alphas[i];
            r.failure = e.what();
            r.iterations = static_cast<int>(e.residuals().size());
            r.residual_history = e.residuals();
            r.fp_residual = e.last_residual();
            r.terminal_error = std::numeric_limits<double>::quiet_NaN();
            r.identity_defect = std::numeric_limits<double>::quiet_NaN();
            records[i] = std::move(r);
        }
    };

    const int workers = std::max(1, std::min<int>(n_threads, static_cast<int>(alphas.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < alphas.size(); ++i) run_one(i);
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < alphas.size(); i = next++) run_one(i);
        });
    }
    for (std::thread& t : pool) t.join();
    return records;
}

}  // namespace memctrl
