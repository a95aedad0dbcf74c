#include "memctrl/memory_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "memctrl/error.hpp"
#include "memctrl/quadrature.hpp"

namespace memctrl {

void KernelParams::validate() const {
    auto fail = [](const char* field, const std::string& why) {
        throw ConfigError(std::string(field) + ": " + why);
    };
    if (!(gamma > 0.0 && gamma < 1.0)) fail("kernels.gamma", "must lie in (0, 1)");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) fail("kernels.kappa", "must be positive");
    if (!(mu > 0.0) || !std::isfinite(mu)) fail("kernels.mu", "must be positive");
    if (!(hist_kernel_rate > 0.0) || !std::isfinite(hist_kernel_rate)) fail("kernels.hist_rate", "must be positive");
    if (!std::isfinite(hist_kernel_scale)) fail("kernels.hist_scale", "must be finite");
}

double KernelParams::slowest_rate() const { return std::min({kappa, mu, hist_kernel_rate}); }

double KernelParams::default_horizon() const { return 8.0 / slowest_rate(); }

double kernel_g(double t, const KernelParams& kp) {
    if (t < 0.0) throw std::domain_error("kernel_g: negative time");
    if (t == 0.0) return 0.0;
    return std::pow(t, kp.gamma) * std::exp(-kp.kappa * t);
}

double kernel_g_prime(double t, const KernelParams& kp) {
    if (!(t > 0.0)) throw std::domain_error("kernel_g_prime: requires t > 0");
    return (kp.gamma * std::pow(t, kp.gamma - 1.0) - kp.kappa * std::pow(t, kp.gamma)) * std::exp(-kp.kappa * t);
}

double kernel_n(double t, const KernelParams& kp) {
    if (t < 0.0) throw std::domain_error("kernel_n: negative time");
    return std::exp(-kp.mu * t);
}

// ---------------------------------------------------------------------------
// HistoryFunction

HistoryFunction::HistoryFunction(double step, Matrix samples) : step_(step), samples_(std::move(samples)) {
    if (!(step > 0.0)) throw ConfigError("history.step must be positive");
    if (samples_.cols() < 2) throw ConfigError("history needs at least two samples");
    if (!samples_.allFinite()) throw ConfigError("history samples must be finite");
}

HistoryFunction HistoryFunction::sample(const std::function<StateVector(double)>& psi, int n_modes, double horizon,
                                        double step) {
    if (!(horizon > 0.0)) throw ConfigError("history.horizon must be positive");
    const int count = static_cast<int>(std::ceil(horizon / step - 1e-9)) + 1;
    Matrix s(n_modes, count);
    for (int j = 0; j < count; ++j) {
        const StateVector v = psi(-j * step);
        if (v.size() != n_modes) throw ConfigError("history callable returned wrong dimension");
        s.col(j) = v.coeffs;
    }
    return HistoryFunction(step, std::move(s));
}

HistoryFunction HistoryFunction::zero(int n_modes, double horizon, double step) {
    const int count = static_cast<int>(std::ceil(horizon / step - 1e-9)) + 1;
    return HistoryFunction(step, Matrix::Zero(n_modes, std::max(count, 2)));
}

StateVector HistoryFunction::value(double theta) const {
    if (theta > 0.0 || theta < -horizon()) return StateVector::zero(n_modes());
    const double pos = -theta / step_;
    const int j = std::min(static_cast<int>(std::floor(pos)), count() - 2);
    const double frac = pos - j;
    return StateVector((1.0 - frac) * samples_.col(j) + frac * samples_.col(j + 1));
}

double HistoryFunction::sup_norm(const SpaceConfig& cfg) const {
    double m = 0.0;
    for (int j = 0; j < count(); ++j) {
        m = std::max(m, lp_norm(StateVector(samples_.col(j)), cfg));
    }
    return m;
}

void check_history_horizon(const HistoryFunction& psi, const KernelParams& kp, double decay_tol) {
    const double tail = std::exp(-kp.slowest_rate() * psi.horizon());
    if (tail > decay_tol) {
        std::ostringstream os;
        os << "history horizon " << psi.horizon() << " too short: kernel tail e^{-rate T} = " << tail
           << " exceeds decay tolerance " << decay_tol;
        throw ConfigError(os.str());
    }
}

namespace {

struct CellMoments {
    double lower;  // weight of the sample at the cell's lower theta
    double upper;  // weight of the sample at the cell's upper theta
};

/// Weights c_j with int_lo^hi k(s) psi_lin(s) ds = sum_j c_j psi_j. `rule`
/// integrates one (possibly clipped) cell [a, b] of [theta_lo, theta_hi].
template <typename CellRule>
Vector history_weights(const HistoryFunction& psi, double lo, double hi, CellRule&& rule) {
    Vector c = Vector::Zero(psi.count());
    lo = std::max(lo, -psi.horizon());
    hi = std::min(hi, 0.0);
    if (!(lo < hi)) return c;
    const double d = psi.step();
    const int first = std::max(0, static_cast<int>(std::floor(-hi / d)));
    const int last = std::min(psi.count() - 2, static_cast<int>(std::ceil(-lo / d)));
    for (int j = first; j <= last; ++j) {
        const double th_upper = -j * d;
        const double th_lower = -(j + 1) * d;
        const double a = std::max(th_lower, lo);
        const double b = std::min(th_upper, hi);
        if (!(a < b)) continue;
        const CellMoments m = rule(a, b, th_lower, th_upper);
        c(j + 1) += m.lower;
        c(j) += m.upper;
    }
    return c;
}

/// Moments of a smooth kernel k(s) against the two hat functions of a cell.
template <typename K>
CellMoments smooth_moments(K&& k, double a, double b, double th_lower, double th_upper) {
    const auto& rule = gauss_rule<4>();
    const double d = th_upper - th_lower;
    CellMoments m{0.0, 0.0};
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    for (unsigned i = 0; i < rule.nodes.size(); ++i) {
        const double s = mid + half * rule.nodes[i];
        const double w = half * rule.weights[i] * k(s);
        m.lower += w * (th_upper - s) / d;
        m.upper += w * (s - th_lower) / d;
    }
    return m;
}

}  // namespace

StateVector history_f1_prime(double t, const HistoryFunction& psi, const KernelParams& kp) {
    if (t < 0.0) throw std::domain_error("history_f1_prime: negative time");
    check_history_horizon(psi, kp);
    const double gam = kp.gamma;
    const double kap = kp.kappa;
    const auto& rule = gauss_rule<6>();
    // In sigma = tau^gamma, g'(tau) dtau = (1 - kappa tau / gamma) e^{-kappa tau} dsigma.
    auto cell = [&](double a, double b, double th_lower, double th_upper) {
        const double d = th_upper - th_lower;
        const double sig_lo = std::pow(t - b, gam);
        const double sig_hi = std::pow(t - a, gam);
        const double half = 0.5 * (sig_hi - sig_lo);
        const double mid = 0.5 * (sig_hi + sig_lo);
        CellMoments m{0.0, 0.0};
        for (unsigned i = 0; i < rule.nodes.size(); ++i) {
            const double sig = mid + half * rule.nodes[i];
            const double tau = std::pow(sig, 1.0 / gam);
            const double s = t - tau;
            const double w = half * rule.weights[i] * (1.0 - kap * tau / gam) * std::exp(-kap * tau);
            m.lower += w * (th_upper - s) / d;
            m.upper += w * (s - th_lower) / d;
        }
        return m;
    };
    const Vector c = history_weights(psi, -psi.horizon(), 0.0, cell);
    return StateVector(-(psi.samples() * c));
}

StateVector history_f2(double t, const HistoryFunction& psi, const KernelParams& kp, const Vector& eigenvalues) {
    if (t < 0.0) throw std::domain_error("history_f2: negative time");
    if (eigenvalues.size() != psi.n_modes()) throw ConfigError("history_f2: eigenvalue count mismatch");
    check_history_horizon(psi, kp);
    auto k = [&](double s) { return std::exp(-kp.mu * (t - s)); };
    auto cell = [&](double a, double b, double lo, double hi) { return smooth_moments(k, a, b, lo, hi); };
    const Vector c = history_weights(psi, -psi.horizon(), 0.0, cell);
    return StateVector(eigenvalues.cwiseProduct(psi.samples() * c));
}

// ---------------------------------------------------------------------------
// PastView

PastView::PastView(const HistoryFunction& psi, const TimeGrid& grid, const Matrix& left, const Matrix& right,
                   int limit)
    : psi_(&psi), grid_(&grid), left_(&left), right_(&right), limit_(limit) {}

void PastView::check(int j) const {
    if (j > limit_) {
        std::ostringstream os;
        os << "source read x at node " << j << " while evaluating node " << limit_;
        throw CausalityError(os.str());
    }
}

Eigen::Ref<const Vector> PastView::left(int j) const {
    check(j);
    return left_->col(j);
}

Eigen::Ref<const Vector> PastView::cell_start(int j) const {
    check(j);
    const auto& idx = grid_->impulse_indices();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] == j && j < limit_) return right_->col(static_cast<Eigen::Index>(k));
    }
    return left_->col(j);
}

// ---------------------------------------------------------------------------
// HistoryNonlinearity

HistoryNonlinearity::HistoryNonlinearity(const KernelParams& kp, double horizon, double clamp,
                                         const SpaceConfig& space)
    : scale_(kp.hist_kernel_scale), rate_(kp.hist_kernel_rate), horizon_(horizon), clamp_(clamp), space_(space) {
    if (!(clamp >= 0.0)) throw ConfigError("kernels.clamp must be non-negative");
}

StateVector HistoryNonlinearity::integral(int node, const PastView& view) const {
    const int n = view.history().n_modes();
    if (scale_ == 0.0) return StateVector::zero(n);
    const TimeGrid& grid = view.grid();
    const double t = grid.node(node);
    const double lo = t - horizon_;
    auto k = [&](double s) { return std::exp(-rate_ * (t - s)); };

    Vector acc = Vector::Zero(n);
    const double h = grid.h();
    for (int i = 0; i < node; ++i) {
        const double a = std::max(grid.node(i), lo);
        const double b = grid.node(i + 1);
        if (!(a < b)) continue;
        const CellMoments m = smooth_moments(k, a, b, grid.node(i), grid.node(i) + h);
        acc += m.lower * view.cell_start(i) + m.upper * view.left(i + 1);
    }
    if (lo < 0.0) {
        auto cell = [&](double a, double b, double th_lo, double th_hi) { return smooth_moments(k, a, b, th_lo, th_hi); };
        const Vector c = history_weights(view.history(), lo, 0.0, cell);
        acc += view.history().samples() * c;
    }
    return StateVector(scale_ * acc);
}

StateVector HistoryNonlinearity::operator()(int node, const PastView& view) const {
    StateVector f = integral(node, view);
    if (std::isfinite(clamp_)) {
        const double norm = lp_norm(f, space_);
        if (norm > clamp_) f *= clamp_ / norm;
    }
    return f;
}

}  // namespace memctrl
