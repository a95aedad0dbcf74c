#include "memctrl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "memctrl/error.hpp"

namespace memctrl {

namespace fs = std::filesystem;

ResolvedHistory resolve_history(const RunConfig& cfg) {
    const SpaceConfig space(cfg.p, cfg.n_modes, cfg.n_grid);
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : cfg.kernels.default_horizon();
    const double step = cfg.b / cfg.n_steps;
    Vector c = Vector::Zero(cfg.n_modes);
    for (std::size_t i = 0; i < cfg.history.coeffs.size(); ++i) c(static_cast<Eigen::Index>(i)) = cfg.history.coeffs[i];

    std::function<StateVector(double)> fn;
    switch (cfg.history.kind) {
        case HistorySpec::Kind::Zero: fn = [&](double) { return StateVector::zero(cfg.n_modes); }; break;
        case HistorySpec::Kind::Constant: fn = [&](double) { return StateVector(c); }; break;
        case HistorySpec::Kind::ExpDecay:
            fn = [&, rate = cfg.history.rate](double th) { return StateVector(std::exp(rate * th) * c); };
            break;
    }
    HistoryFunction psi = HistoryFunction::sample(fn, cfg.n_modes, horizon, step);
    check_history_horizon(psi, cfg.kernels, cfg.decay_tol);
    double clamp = cfg.clamp;
    if (clamp < 0.0) {
        const double sup = psi.sup_norm(space);
        clamp = sup > 0.0 ? 10.0 * sup : std::numeric_limits<double>::infinity();
    }
    return {std::move(psi), horizon, clamp};
}

ControlProblem build_problem(const RunConfig& cfg, bool zero_actuators) {
    cfg.validate();
    SpaceConfig space(cfg.p, cfg.n_modes, cfg.n_grid);
    const TimeGrid grid(cfg.b, cfg.n_steps, cfg.impulse_times);
    ResolvedHistory hist = resolve_history(cfg);
    const Vector eigs = space.eigenvalues();
    ResolventFamily R = build_family(eigs, cfg.kernels, grid);
    const int n = cfg.n_modes;
    const Matrix I = Matrix::Identity(n, n);
    Matrix B = zero_actuators ? Matrix::Zero(n, n) : control_matrix(cfg.control, space);
    const Matrix E = zero_actuators ? Matrix::Zero(n, n) : Matrix(cfg.e_scale * I);
    ImpulseSchedule sched = ImpulseSchedule::uniform(cfg.impulse_times, cfg.d_scale * I, E);
    Matrix forcing = history_forcing_table(grid, hist.psi, cfg.kernels, eigs);
    SystemModel model(std::move(R), std::move(B), std::move(sched), hist.psi, std::move(forcing));

    SourceHandle f;
    if (cfg.kernels.hist_kernel_scale != 0.0) {
        f = HistoryNonlinearity(cfg.kernels, hist.horizon, hist.clamp, space);
    }
    Vector h = Vector::Zero(n);
    for (std::size_t i = 0; i < cfg.target.size(); ++i) h(static_cast<Eigen::Index>(i)) = cfg.target[i];
    return ControlProblem(std::move(space), std::move(model), std::move(f), StateVector(std::move(h)));
}

SemilinearSettings semilinear_settings(const RunConfig& cfg) {
    SemilinearSettings s;
    s.reg.tolerance = cfg.tolerance;
    s.reg.max_newton = cfg.max_newton;
    s.reg.damping = cfg.reg_damping;
    s.reg.alpha = cfg.alphas.front();
    s.fp_tol = cfg.fp_tol;
    s.max_iterations = cfg.max_iterations;
    s.damping = cfg.fp_damping;
    return s;
}

int thread_budget() {
    if (const char* env = std::getenv("MEMCTRL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
        throw ConfigError("MEMCTRL_THREADS must be a positive integer");
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

namespace {

#ifndef MEMCTRL_VERSION
#define MEMCTRL_VERSION "dev"
#endif

struct Context {
    const RunConfig& cfg;
    const RunOptions& opts;
    std::string command;
    fs::path dir;
};

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// Writes `content` plus a .meta.json sidecar; returns the CSV path.
fs::path write_output(const Context& ctx, const std::string& name, const std::string& content) {
    fs::create_directories(ctx.dir);
    const fs::path path = ctx.dir / name;
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
    }
    nlohmann::ordered_json meta;
    meta["file"] = name;
    meta["command"] = ctx.command;
    meta["config_hash"] = hex64(ctx.cfg.hash);
    meta["version"] = MEMCTRL_VERSION;
    meta["seed"] = ctx.opts.seed;
    std::ofstream side(path.string() + ".meta.json", std::ios::binary);
    side << meta.dump(2) << '\n';
    return path;
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

std::string sweep_csv(const std::vector<ExperimentRecord>& recs, bool timing) {
    std::ostringstream os;
    os << "alpha,iterations,fp_residual,terminal_error,identity_defect,wall_ms\n";
    for (const ExperimentRecord& r : recs) {
        os << num(r.alpha) << ',' << r.iterations << ',' << num(r.fp_residual) << ',' << num(r.terminal_error) << ','
           << num(r.identity_defect) << ',' << (timing ? num(r.wall_ms) : std::string("0")) << '\n';
    }
    return os.str();
}

std::string bounds_csv(const std::vector<ExperimentRecord>& recs) {
    std::ostringstream os;
    os << "alpha,converged,sigma_norm,max_u_norm,control_bound\n";
    for (const ExperimentRecord& r : recs) {
        os << num(r.alpha) << ',' << (r.converged ? "true" : "false") << ',' << num(r.sigma_norm) << ','
           << num(r.max_u_norm) << ',' << num(r.control_bound) << '\n';
    }
    return os.str();
}

double uncontrolled_defect(const ControlProblem& p) {
    const Trajectory free = mild_solution(p.model, ControlBundle::zero(p.model.grid(), p.model.n_control()), p.f);
    return lp_norm(p.target - free.terminal(), p.space);
}

int cmd_resolvent(const Context& ctx, std::ostream& out) {
    const RunConfig& cfg = ctx.cfg;
    const SpaceConfig space(cfg.p, cfg.n_modes, cfg.n_grid);
    const TimeGrid grid(cfg.b, cfg.n_steps, cfg.impulse_times);
    const ResolventFamily R = build_family(space.eigenvalues(), cfg.kernels, grid);
    std::ostringstream csv;
    write_resolvent_csv(csv, R);
    write_output(ctx, "resolvent.csv", csv.str());

    std::ostringstream rep;
    rep << "mode,residual\n";
    double worst = 0.0;
    for (int k = 0; k < R.n_modes(); ++k) {
        const double d = residual(R, k).max_defect;
        worst = std::max(worst, d);
        rep << (k + 1) << ',' << num(d) << '\n';
    }
    write_output(ctx, "resolvent_residual.csv", rep.str());

    out << "bound=" << num(R.bound()) << " max_residual=" << num(worst) << '\n';
    if (cfg.n_steps < 8) return kOk;

    // self-convergence of the first mode under halving of the step
    const TimeGrid coarse(cfg.b, cfg.n_steps / 2);
    const TimeGrid fine(cfg.b, cfg.n_steps);
    const auto kernels = VolterraKernels::from_params(cfg.kernels);
    const double lam = space.eigenvalues()(0);
    const double rc = residual(solve_mode(lam, kernels, coarse), lam, kernels, coarse).max_defect;
    const double rf = residual(solve_mode(lam, kernels, fine), lam, kernels, fine).max_defect;
    out << "order=" << num(std::log2(rc / rf)) << '\n';
    return kOk;
}

int cmd_gramian(const Context& ctx, std::ostream& out) {
    const ControlProblem p = build_problem(ctx.cfg);
    const GramianBlocks& g = p.blocks;
    const std::pair<const char*, const Matrix*> blocks[] = {{"gramian_total.csv", &g.total},
                                                            {"gramian_gamma.csv", &g.Gamma},
                                                            {"gramian_gamma_tilde.csv", &g.GammaTilde},
                                                            {"gramian_theta.csv", &g.Theta},
                                                            {"gramian_theta_tilde.csv", &g.ThetaTilde}};
    for (const auto& [name, m] : blocks) {
        std::ostringstream csv;
        write_matrix_csv(csv, *m);
        write_output(ctx, name, csv.str());
    }
    out << positivity_report(g).line() << '\n';
    return kOk;
}

int cmd_limit(const Context& ctx, std::ostream& out) {
    const ControlProblem p = build_problem(ctx.cfg);
    RegularizerSettings reg = semilinear_settings(ctx.cfg).reg;
    std::vector<double> alphas = ctx.cfg.alphas;
    if (ctx.opts.alpha) alphas = {*ctx.opts.alpha};
    const std::vector<double> norms = alpha_limit_probe(p.blocks.total, p.target, alphas, p.space, reg);
    std::ostringstream csv;
    csv << "alpha,norm_x_alpha\n";
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        csv << num(alphas[i]) << ',' << num(norms[i]) << '\n';
        out << "alpha=" << num(alphas[i]) << " norm=" << num(norms[i]) << '\n';
    }
    write_output(ctx, "limit.csv", csv.str());
    out << "y_norm=" << num(lp_norm(p.target, p.space)) << ' ' << positivity_report(p.blocks).line() << '\n';
    return kOk;
}

int cmd_steer(const Context& ctx, std::ostream& out) {
    const ControlProblem p = build_problem(ctx.cfg);
    SemilinearSettings s = semilinear_settings(ctx.cfg);
    s.reg.alpha = ctx.opts.alpha ? *ctx.opts.alpha : ctx.cfg.alphas.back();
    s.reg.validate();
    SteerResult res = fixed_point_solve(p, s);
    if (!ctx.opts.timing) res.record.wall_ms = 0.0;
    std::ostringstream traj;
    write_trajectory_csv(traj, res.trajectory, p.model.grid());
    write_output(ctx, "trajectory.csv", traj.str());
    write_output(ctx, "steer.csv", sweep_csv({res.record}, ctx.opts.timing));
    out << "alpha=" << num(s.reg.alpha) << " iterations=" << res.record.iterations
        << " terminal_error=" << num(res.record.terminal_error) << " identity_defect=" << num(res.record.identity_defect)
        << '\n';
    return kOk;
}

struct SweepOutcome {
    std::vector<ExperimentRecord> records;
    bool all_converged = true;
};

SweepOutcome run_sweep(const Context& ctx, const ControlProblem& p) {
    SweepOutcome o;
    o.records = alpha_sweep(p, ctx.cfg.alphas, semilinear_settings(ctx.cfg), ctx.opts.threads);
    for (ExperimentRecord& r : o.records) {
        if (!ctx.opts.timing) r.wall_ms = 0.0;
        o.all_converged = o.all_converged && r.converged;
    }
    write_output(ctx, "sweep.csv", sweep_csv(o.records, ctx.opts.timing));
    write_output(ctx, "control_bounds.csv", bounds_csv(o.records));
    return o;
}

int cmd_sweep(const Context& ctx, std::ostream& out, std::ostream& err) {
    const ControlProblem p = build_problem(ctx.cfg);
    const SweepOutcome o = run_sweep(ctx, p);
    for (const ExperimentRecord& r : o.records) {
        out << "alpha=" << num(r.alpha) << " terminal_error=" << num(r.terminal_error)
            << " iterations=" << r.iterations << (r.converged ? "" : " FAILED") << '\n';
        if (!r.converged) err << "error: " << r.failure << '\n';
    }
    return o.all_converged ? kOk : kSolver;
}

int cmd_paper_demo(const Context& ctx, std::ostream& out, std::ostream& err) {
    const ControlProblem p = build_problem(ctx.cfg);
    const PositivityReport pos = positivity_report(p.blocks);
    out << pos.line() << '\n';
    if (!pos.strictly_positive) {
        out << "controllable=false\n";
        return kOk;
    }
    const SweepOutcome o = run_sweep(ctx, p);
    const double free_defect = uncontrolled_defect(p);
    bool decaying = o.all_converged;
    for (std::size_t i = 0; i < o.records.size(); ++i) {
        const ExperimentRecord& r = o.records[i];
        out << "alpha=" << num(r.alpha) << " terminal_error=" << num(r.terminal_error) << '\n';
        if (!r.converged) err << "error: " << r.failure << '\n';
        if (i > 0 && !(r.terminal_error <= 1.05 * o.records[i - 1].terminal_error)) decaying = false;
    }
    const double final_error = o.records.back().terminal_error;
    const bool reached = final_error <= 0.01 * free_defect;
    out << "uncontrolled_defect=" << num(free_defect) << " final_ratio=" << num(final_error / free_defect) << '\n';
    out << "controllable=" << ((decaying && reached) ? "true" : "false") << '\n';
    return o.all_converged ? kOk : kSolver;
}

}  // namespace

int run_subcommand(const std::string& name, const RunConfig& cfg, const RunOptions& opts, std::ostream& out,
                   std::ostream& err) {
    const Context ctx{cfg, opts, name, fs::path(opts.out_dir.empty() ? cfg.out_dir : opts.out_dir)};
    try {
        if (opts.alpha && !(*opts.alpha > 0.0)) throw ConfigError("--alpha must be positive");
        if (name == "resolvent") return cmd_resolvent(ctx, out);
        if (name == "gramian") return cmd_gramian(ctx, out);
        if (name == "limit") return cmd_limit(ctx, out);
        if (name == "steer") return cmd_steer(ctx, out);
        if (name == "sweep") return cmd_sweep(ctx, out, err);
        if (name == "paper-demo") return cmd_paper_demo(ctx, out, err);
        err << "error: unknown subcommand '" << name << "'\n";
        return kValidation;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const SolverError& e) {
        err << "error: " << e.what() << " (last residual " << e.last_residual() << ")\n";
        return kSolver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

}  // namespace memctrl

