// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// `acceptance --write-baseline` records the reference sweep for criterion 8.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "memctrl/error.hpp"
#include "memctrl/experiments.hpp"
#include "oracles/brute_force.hpp"
#include "oracles/direct_stepper.hpp"

using namespace memctrl;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (!pass) detail << "; ";
            else detail.str("");
            pass = false;
            detail << what;
        }
    }
};

using Clock = std::chrono::steady_clock;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Vector gaussian(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> d;
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

Matrix gaussian(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) = d(rng);
    }
    return m;
}

RunConfig preset() { return load_config(std::string(MEMCTRL_PRESET_DIR) + "/paper_demo.toml"); }

// ---------------------------------------------------------------------------

Outcome resolvent_correctness() {
    Outcome o;
    const Vector r = solve_mode(-1.0, VolterraKernels::memoryless(), TimeGrid(1.0, 200));
    const double err = std::abs(r(200) - std::exp(-1.0));
    o.require(err <= 5e-4, "memoryless r(1) error " + num(err));

    auto observed_order = [](double lambda, const VolterraKernels& k) {
        double order = std::numeric_limits<double>::infinity();
        double prev = 0.0;
        for (int n : {50, 100, 200, 400}) {
            const TimeGrid grid(1.0, n);
            const double d = residual(solve_mode(lambda, k, grid), lambda, k, grid).max_defect;
            if (prev > 0.0) order = std::min(order, std::log2(prev / d));
            prev = d;
        }
        return order;
    };
    VolterraKernels smooth = VolterraKernels::constant_neutral(0.5);
    smooth.memory = [](double t) { return std::exp(-t); };
    VolterraKernels memory_only;
    memory_only.memory = [](double t) { return std::exp(-t); };
    double smooth_order = std::numeric_limits<double>::infinity();
    double singular_order = std::numeric_limits<double>::infinity();
    for (double lambda : {-1.0, -4.0, -16.0}) {
        for (const VolterraKernels* k : {&smooth, &memory_only}) smooth_order = std::min(smooth_order, observed_order(lambda, *k));
        smooth_order = std::min(smooth_order, observed_order(lambda, VolterraKernels::constant_neutral(0.7)));
        singular_order = std::min(singular_order, observed_order(lambda, VolterraKernels::from_params(KernelParams{})));
    }
    o.require(smooth_order >= 1.9, "smooth-kernel order " + num(smooth_order));
    o.require(singular_order >= 1.5, "singular-kernel order " + num(singular_order));
    if (o.pass) {
        o.detail << "r(1) error " << err << ", order smooth " << smooth_order << ", singular " << singular_order;
    }
    return o;
}

Outcome duality_map_suite() {
    Outcome o;
    std::mt19937_64 rng(2024);
    double worst_pair = 0.0, worst_norm = 0.0, worst_id = 0.0;
    for (double p : {2.0, 3.0, 4.0}) {
        const SpaceConfig space(p, 8, 128);
        for (int rep = 0; rep < 500; ++rep) {
            const StateVector x(gaussian(rng, 8));
            const DualVector j = duality_map(x, space);
            const double nx = lp_norm(x, space);
            worst_pair = std::max(worst_pair, std::abs(pairing(j, x) - nx * nx) / (1.0 + nx * nx));
            worst_norm = std::max(worst_norm, std::abs(dual_norm(j, space) - nx) / (1.0 + nx));
            if (p == 2.0) worst_id = std::max(worst_id, (j.coeffs - x.coeffs).cwiseAbs().maxCoeff());

            const double a = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
            const double hom = (duality_map(a * x, space).coeffs - a * j.coeffs).norm();
            o.require(hom <= 1e-8 * (1.0 + std::abs(a) * j.coeffs.norm()), "homogeneity fails at p = " + num(p));
            const StateVector y(gaussian(rng, 8));
            const double mono = pairing(DualVector(j.coeffs - duality_map(y, space).coeffs), x - y);
            o.require(mono >= -1e-12, "monotonicity fails at p = " + num(p));
        }
    }
    o.require(worst_pair <= 1e-8, "pairing defect " + num(worst_pair));
    o.require(worst_norm <= 1e-8, "dual norm defect " + num(worst_norm));
    o.require(worst_id <= 1e-12, "p = 2 identity defect " + num(worst_id));
    if (o.pass) o.detail << "pairing " << worst_pair << ", norm " << worst_norm << ", identity " << worst_id;
    return o;
}

double block_defect(const GramianBlocks& g, const ControlMap& M) {
    const Matrix ref = M.gram();
    return (g.Gamma + g.GammaTilde + g.Theta + g.ThetaTilde - ref).norm() / std::max(ref.norm(), 1e-300);
}

bool symmetric_psd(const Matrix& m) {
    if ((m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm())) return false;
    const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff() >= -1e-12 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff());
}

Outcome gramian_consistency() {
    Outcome o;
    double worst = 0.0;
    auto check = [&](const SystemModel& model, const std::string& label) {
        const ControlMap M = assemble_M(model);
        const GramianBlocks g = assemble_blocks(model, M);
        const double d = block_defect(g, M);
        worst = std::max(worst, d);
        o.require(d <= 1e-6, label + ": block sum defect " + num(d));
        for (const Matrix* b : {&g.Gamma, &g.GammaTilde, &g.Theta, &g.ThetaTilde}) {
            o.require(symmetric_psd(*b), label + ": block not symmetric PSD");
        }
        return g;
    };

    const ControlProblem demo = build_problem(preset());
    const GramianBlocks g = check(demo.model, "preset");
    o.require(g.Theta.isZero(0.0), "preset with D = -I: Theta not exactly zero");

    std::mt19937_64 rng(77);
    const int n = 8;
    const SpaceConfig space(2.0, n, 64);
    const Vector eigs = space.eigenvalues();
    for (int rep = 0; rep < 20; ++rep) {
        const int steps = 120;
        std::uniform_int_distribution<int> count(1, 3);
        std::vector<int> nodes;
        const int m = count(rng);
        std::uniform_int_distribution<int> pick(1, steps - 1);
        while (static_cast<int>(nodes.size()) < m) {
            const int j = pick(rng);
            if (std::find(nodes.begin(), nodes.end(), j) == nodes.end()) nodes.push_back(j);
        }
        std::sort(nodes.begin(), nodes.end());
        std::vector<double> times;
        for (int j : nodes) times.push_back(static_cast<double>(j) / steps);
        const TimeGrid grid(1.0, steps, times);
        const int nc = 1 + rep % 3;
        ImpulseSchedule sched;
        sched.times = times;
        for (int k = 0; k < m; ++k) {
            sched.D.push_back(rep % 4 == 0 ? Matrix(-Matrix::Identity(n, n)) : gaussian(rng, n, n, 0.4));
            sched.E.push_back(gaussian(rng, n, nc));
        }
        HistoryFunction psi = HistoryFunction::zero(n, 8.0, grid.h());
        SystemModel model(build_family(eigs, KernelParams{}, grid), gaussian(rng, n, nc), sched, psi,
                          Matrix::Zero(n, steps + 1));
        const GramianBlocks gr = check(model, "random schedule " + std::to_string(rep));
        if (rep % 4 == 0) o.require(gr.Theta.isZero(0.0), "random schedule with D = -I: Theta not exactly zero");
    }
    if (o.pass) o.detail << "worst relative Frobenius defect " << worst << " over 21 schedules";
    return o;
}

Matrix random_psd(std::mt19937_64& rng, int n) {
    const Matrix G = gaussian(rng, n, std::uniform_int_distribution<int>(1, n)(rng));
    return G * G.transpose();
}

Outcome regularized_equation_suite() {
    Outcome o;
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> log_alpha(-6.0, 0.0);
    int bound_fail = 0;
    for (int rep = 0; rep < 500; ++rep) {
        const double p = 2.0 + rep % 3;
        const SpaceConfig space(p, 4, 64);
        const Matrix G = random_psd(rng, 4);
        const StateVector y(gaussian(rng, 4));
        RegularizerSettings s;
        s.alpha = std::pow(10.0, log_alpha(rng));
        if (!norm_bound_check(solve_regularized(G, y, s, space), y, space)) ++bound_fail;
    }
    o.require(bound_fail == 0, std::to_string(bound_fail) + " norm-bound violations");

    double closed_vs_newton = 0.0;
    const SpaceConfig s2(2.0, 6, 32);
    for (int rep = 0; rep < 100; ++rep) {
        const Matrix G = random_psd(rng, 6);
        const StateVector y(gaussian(rng, 6));
        RegularizerSettings s;
        s.alpha = std::pow(10.0, log_alpha(rng));
        s.method = RegularizerSettings::Method::ClosedForm;
        const Vector a = solve_regularized(G, y, s, s2).coeffs;
        s.method = RegularizerSettings::Method::Newton;
        const Vector b = solve_regularized_ex(G, y, s, s2, StateVector::zero(6)).x.coeffs;
        closed_vs_newton = std::max(closed_vs_newton, (a - b).norm() / (1.0 + a.norm()));
    }
    o.require(closed_vs_newton <= 1e-10, "closed form vs Newton " + num(closed_vs_newton));

    double brute = 0.0;
    const SpaceConfig s3(3.0, 2, 64);
    for (int rep = 0; rep < 10; ++rep) {
        // the oracle needs an invertible Gamma
        const Matrix G = random_psd(rng, 2) + 0.1 * Matrix::Identity(2, 2);
        const Vector y = gaussian(rng, 2);
        RegularizerSettings s;
        s.alpha = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 0.0)(rng));
        const Vector x = solve_regularized(G, StateVector(y), s, s3).coeffs;
        const Vector ref = oracle::brute_force_regularized(G, y, s.alpha, s3);
        brute = std::max(brute, (x - ref).norm());
    }
    o.require(brute <= 1e-4, "p = 3 Newton vs brute force " + num(brute));
    if (o.pass) o.detail << "closed vs Newton " << closed_vs_newton << ", Newton vs brute force " << brute;
    return o;
}

Outcome equivalence_theorem() {
    Outcome o;
    const std::vector<double> alphas{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    const ControlProblem demo = build_problem(preset());
    const SpaceConfig& space = demo.space;
    o.require(positivity_report(demo.blocks).strictly_positive, "preset Gramian not strictly positive");

    auto decays = [&](const Matrix& G, const StateVector& y, const SpaceConfig& sp, const std::string& label) {
        const auto norms = alpha_limit_probe(G, y, alphas, sp);
        const double ny = lp_norm(y, sp);
        for (std::size_t i = 1; i < norms.size(); ++i) {
            o.require(norms[i] < norms[i - 1], label + ": |x_alpha| not decreasing");
        }
        o.require(norms.back() < 1e-3 * ny, label + ": |x_alpha| / |y| = " + num(norms.back() / ny));
        return norms.back() / ny;
    };
    double worst = decays(demo.blocks.total, demo.target, space, "preset, target");
    std::mt19937_64 rng(55);
    for (double p : {2.0, 3.0}) {
        const SpaceConfig sp(p, 4, 64);
        for (int rep = 0; rep < 10; ++rep) {
            // well-conditioned strictly positive Gramian
            const Eigen::HouseholderQR<Matrix> qr(gaussian(rng, 4, 4));
            const Matrix Q = qr.householderQ();
            Vector ev(4);
            for (int i = 0; i < 4; ++i) ev(i) = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 0.0)(rng));
            const Matrix G = Q * ev.asDiagonal() * Q.transpose();
            worst = std::max(worst, decays(G, StateVector(gaussian(rng, 4)), sp, "random positive"));
        }
    }

    // zero actuation: the null space is everything
    const ControlProblem idle = build_problem(preset(), true);
    double drift = 0.0;
    for (double a : alphas) {
        RegularizerSettings s;
        s.alpha = a;
        const StateVector x = solve_regularized(idle.blocks.total, idle.target, s, space);
        drift = std::max(drift, std::abs(lp_norm(x, space) - lp_norm(idle.target, space)));
    }
    // a null-space direction of a singular Gramian
    Matrix G = Matrix::Zero(4, 4);
    G.topLeftCorner(2, 2) = random_psd(rng, 2) + Matrix::Identity(2, 2);
    Vector y = Vector::Zero(4);
    y.tail(2) = gaussian(rng, 2);
    const SpaceConfig sp(2.0, 4, 64);
    for (double a : alphas) {
        RegularizerSettings s;
        s.alpha = a;
        const StateVector yn(y);
        drift = std::max(drift, std::abs(lp_norm(solve_regularized(G, yn, s, sp), sp) - lp_norm(yn, sp)));
    }
    o.require(drift <= 1e-12, "zero actuation drift " + num(drift));
    if (o.pass) o.detail << "worst |x_alpha(1e-6)| / |y| = " << worst << ", zero-actuation drift " << drift;
    return o;
}

Outcome mild_solution_oracle() {
    Outcome o;
    const int n = 4;
    const SpaceConfig space(2.0, n, 32);
    const Vector eigs = space.eigenvalues();
    std::mt19937_64 rng(606);

    oracle::DirectInstance in;
    in.eigs = eigs;
    in.B = control_matrix(ControlKernel::Min, space);
    in.impulse_times = {0.5};
    in.D = {gaussian(rng, n, n, 0.3)};
    in.E = {gaussian(rng, n, n, 0.5)};
    in.v = {gaussian(rng, n)};
    in.psi_coeffs = gaussian(rng, n);
    in.psi_rate = 1.0;
    in.T = 8.0;
    const Vector u0 = gaussian(rng, n);
    const Vector u1 = gaussian(rng, n);
    in.u = [&](int seg, double t) -> Vector {
        return seg == 0 ? Vector(std::cos(3.0 * t) * u0) : Vector((1.0 + t * t) * u1);
    };

    const int fine = 3200;
    const oracle::DirectSolution ref = oracle::direct_solve(in, fine);

    std::vector<double> errors;
    for (int steps : {50, 100, 200}) {
        const TimeGrid grid(1.0, steps, in.impulse_times);
        HistoryFunction psi = HistoryFunction::sample(
            [&](double th) { return StateVector(std::exp(in.psi_rate * th) * in.psi_coeffs); }, n, in.T, grid.h());
        Matrix forcing = history_forcing_table(grid, psi, in.kp, eigs);
        const SystemModel model(build_family(eigs, in.kp, grid), in.B,
                                ImpulseSchedule{in.impulse_times, in.D, in.E}, psi, forcing);
        ControlBundle c = ControlBundle::zero(grid, n);
        for (int s = 0; s < grid.n_segments(); ++s) {
            for (int j = grid.segment_begin(s); j <= grid.segment_end(s); ++j) {
                c.u[s].col(j - grid.segment_begin(s)) = in.u(s, grid.node(j));
            }
        }
        c.v = in.v;
        const Trajectory tr = mild_solution(model, c);
        const int stride = fine / steps;
        double err = 0.0;
        for (int j = 0; j <= steps; ++j) err = std::max(err, (tr.left.col(j) - ref.left.col(j * stride)).norm());
        err = std::max(err, (tr.right - ref.right).colwise().norm().maxCoeff());
        errors.push_back(err);
    }
    for (std::size_t i = 1; i < errors.size(); ++i) {
        o.require(errors[i - 1] / errors[i] >= 2.0,
                  "error ratio " + num(errors[i - 1] / errors[i]) + " at refinement " + std::to_string(i));
    }
    if (o.pass) o.detail << "sup errors " << errors[0] << ", " << errors[1] << ", " << errors[2];
    return o;
}

// Sweeps shared by criteria 7, 8 and 9.
struct SweepData {
    std::vector<ExperimentRecord> semilinear;
    std::vector<ExperimentRecord> linear;
    std::vector<ExperimentRecord> idle;
    double uncontrolled_defect = 0.0;
    std::vector<double> alphas;
    double seconds = 0.0;
};

SweepData run_sweeps() {
    const auto t0 = Clock::now();
    SweepData d;
    const RunConfig cfg = preset();
    d.alphas = cfg.alphas;
    const int threads = thread_budget();
    const SemilinearSettings settings = semilinear_settings(cfg);

    const ControlProblem demo = build_problem(cfg);
    d.semilinear = alpha_sweep(demo, cfg.alphas, settings, threads);
    const Trajectory free_run = mild_solution(demo.model, ControlBundle::zero(demo.model.grid(), demo.model.n_control()),
                                              demo.f);
    d.uncontrolled_defect = lp_norm(demo.target - free_run.terminal(), demo.space);

    RunConfig lin = cfg;
    lin.kernels.hist_kernel_scale = 0.0;
    d.linear = alpha_sweep(build_problem(lin), cfg.alphas, settings, threads);

    d.idle = alpha_sweep(build_problem(cfg, true), cfg.alphas, settings, threads, false);
    d.seconds = seconds_since(t0);
    return d;
}

Outcome terminal_identity(const SweepData& d) {
    Outcome o;
    double worst = 0.0;
    int runs = 0;
    for (const auto* recs : {&d.semilinear, &d.linear}) {
        for (const ExperimentRecord& r : *recs) {
            o.require(r.converged, "run at alpha " + num(r.alpha) + " did not converge");
            if (!r.converged) continue;
            ++runs;
            worst = std::max(worst, r.identity_defect / r.fp_tol);
            o.require(r.identity_defect <= 10.0 * r.fp_tol,
                      "identity defect " + num(r.identity_defect) + " at alpha " + num(r.alpha));
        }
    }
    if (o.pass) o.detail << runs << " converged runs, worst defect / fp_tol = " << worst;
    return o;
}

std::vector<std::pair<double, double>> read_baseline() {
    std::vector<std::pair<double, double>> rows;
    std::ifstream in(MEMCTRL_BASELINE);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        double a = 0.0, e = 0.0;
        if (std::sscanf(line.c_str(), "%lf,%lf", &a, &e) == 2) rows.emplace_back(a, e);
    }
    return rows;
}

Outcome end_to_end(const SweepData& d) {
    Outcome o;
    const auto& s = d.semilinear;
    for (std::size_t i = 1; i < s.size(); ++i) {
        o.require(s[i].terminal_error <= 1.05 * s[i - 1].terminal_error,
                  "terminal error rises at alpha " + num(s[i].alpha));
    }
    const double ratio = s.back().terminal_error / d.uncontrolled_defect;
    o.require(ratio <= 0.01, "final error / uncontrolled defect = " + num(ratio));

    double spread = 0.0;
    for (const ExperimentRecord& r : d.idle) {
        spread = std::max(spread, std::abs(r.terminal_error - d.idle.front().terminal_error));
    }
    o.require(spread <= 1e-10 * d.idle.front().terminal_error, "zero-actuation error not constant");

    const auto base = read_baseline();
    o.require(base.size() == s.size(), "regression baseline missing or incomplete");
    if (base.size() == s.size()) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double rel = std::abs(s[i].terminal_error - base[i].second) / base[i].second;
            o.require(base[i].first == s[i].alpha && rel <= 1e-6,
                      "baseline mismatch at alpha " + num(s[i].alpha));
        }
    }
    o.require(d.seconds < 120.0, "sweeps took " + num(d.seconds) + " s");
    if (o.pass) {
        o.detail << "final error " << s.back().terminal_error << " = " << ratio << " of uncontrolled defect "
                 << d.uncontrolled_defect << ", zero-actuation error " << d.idle.front().terminal_error
                 << ", sweeps " << d.seconds << " s";
    }
    return o;
}

Outcome control_bound(const SweepData& d) {
    Outcome o;
    double worst = 0.0;
    for (const auto* recs : {&d.semilinear, &d.linear, &d.idle}) {
        for (const ExperimentRecord& r : *recs) {
            worst = std::max(worst, r.max_u_norm / r.control_bound);
            o.require(r.max_u_norm <= r.control_bound,
                      "bound violated at alpha " + num(r.alpha));
        }
    }
    if (o.pass) o.detail << "worst max|u| / bound = " << worst;
    return o;
}

int write_baseline() {
    const SweepData d = run_sweeps();
    std::ofstream out(MEMCTRL_BASELINE);
    out.precision(17);
    out << "alpha,terminal_error\n";
    for (const ExperimentRecord& r : d.semilinear) out << r.alpha << ',' << r.terminal_error << '\n';
    std::cout << "baseline written to " << MEMCTRL_BASELINE << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1 && std::string(argv[1]) == "--write-baseline") return write_baseline();

    int failures = 0;
    auto report = [&](int id, const std::string& name, double limit, const std::function<Outcome()>& fn) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = seconds_since(t0);
        if (limit > 0.0) o.require(secs < limit, "runtime " + num(secs) + " s over " + num(limit) + " s");
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << name << " (" << o.detail.str()
                  << "; " << secs << " s)" << std::endl;
    };

    report(1, "resolvent correctness", 5.0, resolvent_correctness);
    report(2, "duality-map suite", 2.0, duality_map_suite);
    report(3, "Gramian consistency", 10.0, gramian_consistency);
    report(4, "regularized-equation suite", 30.0, regularized_equation_suite);
    report(5, "equivalence of positivity and alpha-limit", 5.0, equivalence_theorem);
    report(6, "mild solution vs direct time-stepper", 20.0, mild_solution_oracle);

    SweepData sweeps;
    std::string sweep_error;
    try {
        sweeps = run_sweeps();
    } catch (const std::exception& e) {
        sweep_error = e.what();
    }
    auto with_sweeps = [&](Outcome (*fn)(const SweepData&)) {
        return [&, fn]() {
            if (!sweep_error.empty()) throw std::runtime_error("sweep failed: " + sweep_error);
            return fn(sweeps);
        };
    };
    report(7, "terminal identity on converged runs", 0.0, with_sweeps(terminal_identity));
    report(8, "end-to-end steering on the reference preset", 0.0, with_sweeps(end_to_end));
    report(9, "distributed-control bound", 0.0, with_sweeps(control_bound));

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
