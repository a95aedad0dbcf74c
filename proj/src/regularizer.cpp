#include "memctrl/regularizer.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "memctrl/error.hpp"

namespace memctrl {

void RegularizerSettings::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("solver.alpha must be positive");
    if (!(tolerance > 0.0)) throw ConfigError("solver.tolerance must be positive");
    if (max_newton < 1) throw ConfigError("solver.max_newton must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("solver.damping must lie in (0, 1]");
}

double regularized_residual(const Matrix& Gamma, const StateVector& x, const StateVector& y, double alpha,
                            const SpaceConfig& space) {
    const Vector F = alpha * x.coeffs + Gamma * duality_map(x, space).coeffs - alpha * y.coeffs;
    return F.norm();
}

namespace {

// alpha x + Gamma j - alpha y accumulated in long double, so that refinement
// can recover the digits lost to the conditioning of alpha I + Gamma.
Vector precise_residual(const Matrix& Gamma, const Vector& x, const Vector& j, const Vector& y, double alpha) {
    using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const LongVector r = static_cast<long double>(alpha) * (x.cast<long double>() - y.cast<long double>()) +
                         Gamma.cast<long double>() * j.cast<long double>();
    return r.cast<double>();
}

Vector closed_form(const Matrix& Gamma, const Vector& y, double alpha) {
    const int n = static_cast<int>(y.size());
    const Eigen::LDLT<Matrix> ldlt(alpha * Matrix::Identity(n, n) + Gamma);
    Vector x = ldlt.solve(alpha * y);
    for (int it = 0; it < 2; ++it) x -= ldlt.solve(precise_residual(Gamma, x, x, y, alpha));
    return x;
}

}  // namespace

RegularizedSolution solve_regularized_ex(const Matrix& Gamma, const StateVector& y, const RegularizerSettings& settings,
                                         const SpaceConfig& space, const std::optional<StateVector>& initial) {
    settings.validate();
    const int n = space.n_modes();
    if (Gamma.rows() != n || Gamma.cols() != n || y.size() != n) {
        throw ConfigError("regularizer: dimension mismatch");
    }
    const double alpha = settings.alpha;
    const double target = settings.tolerance * (1.0 + alpha * y.coeffs.norm());

    RegularizedSolution sol;
    const bool closed = settings.method == RegularizerSettings::Method::ClosedForm ||
                        (settings.method == RegularizerSettings::Method::Auto && space.p() == 2.0);
    if (closed) {
        if (space.p() != 2.0) throw ConfigError("regularizer: closed form requires p = 2");
        sol.x = StateVector(closed_form(Gamma, y.coeffs, alpha));
        return sol;
    }

    auto residual_vec = [&](const Vector& x) {
        return Vector(alpha * x + Gamma * duality_map(StateVector(x), space).coeffs - alpha * y.coeffs);
    };

    Vector x = initial ? initial->coeffs : closed_form(Gamma, y.coeffs, alpha);
    Vector F = residual_vec(x);
    double fn = F.norm();
    sol.residuals.push_back(fn);
    const Matrix I = Matrix::Identity(n, n);

    for (int it = 0; it < settings.max_newton && fn > target; ++it) {
        const Matrix Jac = alpha * I + Gamma * duality_map_jacobian(StateVector(x), space);
        const Vector dx = Jac.partialPivLu().solve(-F);
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            const Vector trial = x + step * dx;
            const Vector Ft = residual_vec(trial);
            if (Ft.norm() < (1.0 - 1e-4 * step) * fn || Ft.norm() <= target) {
                x = trial;
                F = Ft;
                fn = Ft.norm();
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++sol.iterations;
        sol.residuals.push_back(fn);
        if (!accepted) break;  // stagnation: hand over to the fallback
    }

    if (fn <= target && sol.iterations > 0) {
        // polishing steps against the extended-precision residual
        for (int it = 0; it < 2; ++it) {
            const Vector Fp = precise_residual(Gamma, x, duality_map(StateVector(x), space).coeffs, y.coeffs, alpha);
            const Matrix Jac = alpha * I + Gamma * duality_map_jacobian(StateVector(x), space);
            const Vector trial = x - Jac.partialPivLu().solve(Fp);
            const Vector Ft = precise_residual(Gamma, trial, duality_map(StateVector(trial), space).coeffs, y.coeffs,
                                               alpha);
            if (!(Ft.norm() <= Fp.norm())) break;
            x = trial;
        }
        fn = residual_vec(x).norm();
    }

    if (fn > target) {
        sol.used_fallback = true;
        const double d = settings.damping;
        for (int it = 0; it < settings.max_picard && fn > target; ++it) {
            const Vector gx = y.coeffs - Gamma * duality_map(StateVector(x), space).coeffs / alpha;
            x = (1.0 - d) * x + d * gx;
            fn = residual_vec(x).norm();
            ++sol.iterations;
            if (it % 100 == 0) sol.residuals.push_back(fn);
            if (!std::isfinite(fn)) break;
        }
        sol.residuals.push_back(fn);
    }
    if (!(fn <= target)) {
        std::ostringstream os;
        os << "regularized equation did not converge (alpha = " << alpha << ", residual " << fn << ", target "
           << target << ")";
        throw SolverError(os.str(), sol.residuals);
    }
    sol.x = StateVector(std::move(x));
    return sol;
}

StateVector solve_regularized(const Matrix& Gamma, const StateVector& y, const RegularizerSettings& settings,
                              const SpaceConfig& space) {
    return solve_regularized_ex(Gamma, y, settings, space).x;
}

bool norm_bound_check(const StateVector& x_alpha, const StateVector& y, const SpaceConfig& space) {
    return lp_norm(x_alpha, space) <= lp_norm(y, space) * (1.0 + 1e-8);
}

std::vector<double> alpha_limit_probe(const Matrix& Gamma, const StateVector& y, const std::vector<double>& alphas,
                                      const SpaceConfig& space, RegularizerSettings settings) {
    std::vector<double> out;
    for (double a : alphas) {
        settings.alpha = a;
        out.push_back(lp_norm(solve_regularized(Gamma, y, settings, space), space));
    }
    return out;
}

StateVector sigma_defect(const SystemModel& model, const Matrix& f_table, const StateVector& h) {
    const TimeGrid& grid = model.grid();
    if (h.size() != model.n_modes()) throw ConfigError("target has wrong dimension");
    if (f_table.rows() != model.n_modes() || f_table.cols() != grid.n_steps() + 1) {
        throw ConfigError("source table has wrong dimensions");
    }
    const TerminalMaps maps(model);
    Vector sigma = h.coeffs - maps.initial * model.psi.initial().coeffs;
    for (int s = 0; s < grid.n_segments(); ++s) {
        const int a = grid.segment_begin(s);
        const int e = grid.segment_end(s);
        const Matrix w = f_table.middleCols(a, e - a + 1) + model.forcing.middleCols(a, e - a + 1);
        sigma -= maps.segment[s] * segment_convolve(model.R, w, a, e).coeffs;
    }
    return StateVector(std::move(sigma));
}

DualVector regularized_dual(const Matrix& Gamma, const StateVector& sigma, const RegularizerSettings& settings,
                            const SpaceConfig& space) {
    StateVector x = solve_regularized(Gamma, sigma, settings, space);
    x *= 1.0 / settings.alpha;
    return duality_map(x, space);
}

ControlBundle synthesize_controls(const DualVector& phi_hat, const ControlMap& M) { return M.adjoint(phi_hat); }

}  // namespace memctrl
