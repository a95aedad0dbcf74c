#include "memctrl/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "memctrl/error.hpp"
#include "memctrl/quadrature.hpp"

namespace memctrl {

VolterraKernels VolterraKernels::from_params(const KernelParams& kp) {
    kp.validate();
    VolterraKernels k;
    k.neutral_exponent = kp.gamma;
    k.neutral_smooth = [kappa = kp.kappa](double t) { return std::exp(-kappa * t); };
    k.memory = [mu = kp.mu](double t) { return std::exp(-mu * t); };
    return k;
}

VolterraKernels VolterraKernels::memoryless() { return VolterraKernels{}; }

VolterraKernels VolterraKernels::constant_neutral(double c) {
    VolterraKernels k;
    k.neutral_smooth = [c](double) { return c; };
    return k;
}

double VolterraKernels::neutral(double t) const {
    if (!neutral_smooth) return 0.0;
    if (neutral_exponent == 0.0) return neutral_smooth(t);
    if (t <= 0.0) return 0.0;
    return std::pow(t, neutral_exponent) * neutral_smooth(t);
}

namespace {

// Product-integration weights of g against the two hats of the cell
// tau in [i h, (i+1) h]: near[i] multiplies r(t - i h), far[i] r(t - (i+1) h).
struct NeutralWeights {
    Vector near;
    Vector far;
};

NeutralWeights neutral_weights(const VolterraKernels& k, double h, int n) {
    NeutralWeights w{Vector::Zero(n), Vector::Zero(n)};
    if (!k.has_neutral()) return w;
    const double e = k.neutral_exponent;
    {
        // tau = h u^4 tames tau^e at the origin
        const auto& rule = gauss_rule<16>();
        for (unsigned q = 0; q < rule.nodes.size(); ++q) {
            const double u = 0.5 * (rule.nodes[q] + 1.0);
            const double u4 = u * u * u * u;
            const double tau = h * u4;
            const double jac = 4.0 * h * u * u * u;
            const double g = std::pow(h, e) * std::pow(u, 4.0 * e) * k.neutral_smooth(tau);
            const double wt = 0.5 * rule.weights[q] * jac * g;
            w.near(0) += wt * (1.0 - u4);
            w.far(0) += wt * u4;
        }
    }
    const auto& rule = gauss_rule<8>();
    for (int i = 1; i < n; ++i) {
        for (unsigned q = 0; q < rule.nodes.size(); ++q) {
            const double v = 0.5 * (rule.nodes[q] + 1.0);
            const double wt = 0.5 * rule.weights[q] * h * k.neutral((i + v) * h);
            w.near(i) += wt * (1.0 - v);
            w.far(i) += wt * v;
        }
    }
    return w;
}

}  // namespace

Vector solve_mode(double lambda, const VolterraKernels& kernels, const TimeGrid& grid) {
    const int n = grid.n_steps();
    const double h = grid.h();
    const NeutralWeights nw = neutral_weights(kernels, h, n);
    Vector ntab = Vector::Zero(n + 1);
    if (kernels.has_memory()) {
        for (int i = 0; i <= n; ++i) ntab(i) = kernels.memory(i * h);
    }

    const double coef = 1.0 + nw.near(0) - 0.5 * h * lambda - 0.25 * h * h * ntab(0);
    if (std::abs(coef) < 1e-12) {
        std::ostringstream os;
        os << "grid.n_steps: implicit step coefficient " << coef << " for eigenvalue " << lambda
           << " is singular; reduce the time step";
        throw ConfigError(os.str());
    }

    Vector r = Vector::Zero(n + 1);
    r(0) = 1.0;
    double y_prev = 1.0;
    double mem_prev = 0.0;
    for (int j = 1; j <= n; ++j) {
        double conv = nw.far(0) * r(j - 1);
        for (int i = 1; i < j; ++i) conv += nw.near(i) * r(j - i) + nw.far(i) * r(j - i - 1);
        double mem = 0.0;
        if (kernels.has_memory()) {
            for (int i = 1; i < j; ++i) mem += ntab(i) * r(j - i);
            mem += 0.5 * ntab(j) * r(0);
            mem *= h;
        }
        const double rhs = y_prev - conv + 0.5 * h * (lambda * r(j - 1) + mem_prev + mem);
        r(j) = rhs / coef;
        y_prev = (1.0 + nw.near(0)) * r(j) + conv;
        mem_prev = mem + 0.5 * h * ntab(0) * r(j);
    }
    return r;
}

Vector solve_mode(double lambda, const KernelParams& kp, const TimeGrid& grid) {
    return solve_mode(lambda, VolterraKernels::from_params(kp), grid);
}

ResolventFamily::ResolventFamily(Vector eigenvalues, Matrix modes, TimeGrid grid, VolterraKernels kernels)
    : eigenvalues_(std::move(eigenvalues)),
      modes_(std::move(modes)),
      grid_(std::move(grid)),
      kernels_(std::move(kernels)),
      bound_(modes_.size() ? modes_.cwiseAbs().maxCoeff() : 0.0) {
    if (modes_.rows() != eigenvalues_.size() || modes_.cols() != grid_.n_steps() + 1) {
        throw ConfigError("resolvent family dimensions do not match the grid");
    }
}

ResolventFamily build_family(const Vector& eigenvalues, const VolterraKernels& kernels, const TimeGrid& grid) {
    Matrix modes(eigenvalues.size(), grid.n_steps() + 1);
    for (int k = 0; k < eigenvalues.size(); ++k) {
        modes.row(k) = solve_mode(eigenvalues(k), kernels, grid).transpose();
    }
    return ResolventFamily(eigenvalues, std::move(modes), grid, kernels);
}

ResolventFamily build_family(const Vector& eigenvalues, const KernelParams& kp, const TimeGrid& grid) {
    return build_family(eigenvalues, VolterraKernels::from_params(kp), grid);
}

StateVector apply_at(const ResolventFamily& R, int node, const StateVector& x) {
    if (node < 0 || node > R.grid().n_steps()) throw ConfigError("resolvent: node out of range");
    if (x.size() != R.n_modes()) throw ConfigError("resolvent: dimension mismatch");
    return StateVector(R.at(node).cwiseProduct(x.coeffs));
}

StateVector apply(const ResolventFamily& R, double t, const StateVector& x) {
    const int node = snap_to_grid(t, R.grid().b(), R.grid().n_steps());
    if (node < 0) {
        std::ostringstream os;
        os << "resolvent: t = " << t << " is not a grid node (no interpolation)";
        throw ConfigError(os.str());
    }
    return apply_at(R, node, x);
}

namespace {

/// Local cubic (or lower, on tiny grids) Lagrange interpolant of node samples.
class CubicInterpolant {
public:
    CubicInterpolant(const Vector& r, double h) : r_(r), h_(h), n_(static_cast<int>(r.size()) - 1) {}

    double operator()(double s) const {
        const int deg = std::min(3, n_);
        const int cell = std::clamp(static_cast<int>(std::floor(s / h_)), 0, n_ - 1);
        const int start = std::clamp(cell - 1, 0, n_ - deg);
        const double x = s / h_;
        double sum = 0.0;
        for (int a = 0; a <= deg; ++a) {
            double l = 1.0;
            for (int b = 0; b <= deg; ++b) {
                if (b != a) l *= (x - (start + b)) / static_cast<double>(a - b);
            }
            sum += l * r_(start + a);
        }
        return sum;
    }

private:
    const Vector& r_;
    double h_;
    int n_;
};

double memory_primitive(const VolterraKernels& k, double tau) {
    if (!k.has_memory() || tau <= 0.0) return 0.0;
    return gauss_rule<8>().integrate([&](double s) { return k.memory(s); }, 0.0, tau);
}

}  // namespace

ResidualReport residual(const Vector& r, double lambda, const VolterraKernels& kernels, const TimeGrid& grid) {
    const int n = grid.n_steps();
    const double h = grid.h();
    if (r.size() != n + 1) throw ConfigError("residual: sample count does not match the grid");
    const CubicInterpolant S(r, h);
    const auto& g8 = gauss_rule<8>();
    const auto& g16 = gauss_rule<16>();
    constexpr int Q = 8;
    constexpr int Q1 = 16;
    const double e = kernels.neutral_exponent;

    // Kernel values at the Gauss nodes of each lag cell tau in [i h, (i+1) h].
    // Both orientations of the convolution visit exactly these lags.
    // smooth(i, q) = weight * (-lambda - N1(tau)); neutral(i, q) = weight * g(tau)
    Matrix tau(Q, n), smooth(Q, n), neutral(Q, n);
    for (int i = 0; i < n; ++i) {
        for (int q = 0; q < Q; ++q) {
            const double t = (i + 0.5 * (1.0 + g8.nodes[q])) * h;
            const double w = 0.5 * h * g8.weights[q];
            tau(q, i) = t;
            smooth(q, i) = w * (-lambda - memory_primitive(kernels, t));
            neutral(q, i) = (i > 0 && kernels.has_neutral()) ? w * kernels.neutral(t) : 0.0;
        }
    }
    // singular lag cell, tau = h u^4
    Vector tau0(Q1), neutral0 = Vector::Zero(Q1);
    for (int q = 0; q < Q1; ++q) {
        const double u = 0.5 * (g16.nodes[q] + 1.0);
        tau0(q) = h * u * u * u * u;
        if (kernels.has_neutral()) {
            neutral0(q) = 0.5 * g16.weights[q] * 4.0 * std::pow(h, e + 1.0) * std::pow(u, 4.0 * e + 3.0) *
                          kernels.neutral_smooth(tau0(q));
        }
    }
    // Gauss nodes come in +-pairs, so reflecting a cell maps node q to q ^ 1
    auto mirror = [](int q) { return q ^ 1; };

    ResidualReport rep;
    rep.direct = Vector::Zero(n + 1);
    rep.commuted = Vector::Zero(n + 1);
    for (int j = 1; j < n; ++j) {
        const double t = grid.node(j);

        // int_0^t g(t - s) S(s) ds + smooth terms, cells in s
        double direct = 0.0;
        for (int c = 0; c < j; ++c) {
            const double lo = grid.node(c);
            const int lag = j - c - 1;
            double cell = 0.0;
            for (int q = 0; q < Q; ++q) {
                const double s = lo + 0.5 * h * (1.0 + g8.nodes[q]);
                const int qm = mirror(q);
                cell += (smooth(qm, lag) + neutral(qm, lag)) * S(s);
            }
            if (lag == 0) {
                for (int q = 0; q < Q1; ++q) cell += neutral0(q) * S(t - tau0(q));
            }
            direct += cell;
        }
        rep.direct(j) = r(j) - 1.0 + direct;

        // the same identity with int_0^t g(tau) S(t - tau) dtau, cells in tau
        double commuted = 0.0;
        for (int i = 0; i < j; ++i) {
            double cell = 0.0;
            for (int q = 0; q < Q; ++q) cell += (smooth(q, i) + neutral(q, i)) * S(t - tau(q, i));
            if (i == 0) {
                for (int q = 0; q < Q1; ++q) cell += neutral0(q) * S(t - tau0(q));
            }
            commuted += cell;
        }
        rep.commuted(j) = r(j) - 1.0 + commuted;
        rep.max_defect = std::max({rep.max_defect, std::abs(rep.direct(j)), std::abs(rep.commuted(j))});
    }
    return rep;
}

ResidualReport residual(const ResolventFamily& R, int mode) {
    if (mode < 0 || mode >= R.n_modes()) throw ConfigError("residual: mode index out of range");
    return residual(R.modes().row(mode).transpose(), R.eigenvalues()(mode), R.kernels(), R.grid());
}

void write_resolvent_csv(std::ostream& os, const ResolventFamily& R) {
    os << "k,t,r\n";
    os.precision(17);
    for (int k = 0; k < R.n_modes(); ++k) {
        for (int j = 0; j <= R.grid().n_steps(); ++j) {
            os << (k + 1) << ',' << R.grid().node(j) << ',' << R.modes()(k, j) << '\n';
        }
    }
}

}  // namespace memctrl
