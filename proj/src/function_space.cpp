#include "memctrl/function_space.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "memctrl/error.hpp"

namespace memctrl {

SpaceConfig::SpaceConfig(double p, int n_modes, int n_grid) : p_(p), n_modes_(n_modes), n_grid_(n_grid) {
    if (!(p >= 2.0) || !std::isfinite(p)) {
        throw ConfigError("space.p must be a finite real >= 2, got " + std::to_string(p));
    }
    if (n_modes < 1) {
        throw ConfigError("space.n_modes must be positive");
    }
    if (n_grid < 2 * n_modes) {
        throw ConfigError("space.n_grid must be at least 2 * n_modes (" + std::to_string(2 * n_modes) +
                          "), got " + std::to_string(n_grid));
    }

    const double pi = std::numbers::pi;
    const int intervals = n_grid - 1;
    const double dz = pi / intervals;
    nodes_.resize(n_grid);
    weights_.resize(n_grid);
    for (int i = 0; i < n_grid; ++i) {
        nodes_(i) = i * dz;
        weights_(i) = (i == 0 || i == intervals) ? 0.5 * dz : dz;
    }
    nodes_(intervals) = pi;

    const double scale = std::sqrt(2.0 / pi);
    basis_.resize(n_grid, n_modes);
    for (int k = 0; k < n_modes; ++k) {
        for (int i = 0; i < n_grid; ++i) {
            basis_(i, k) = scale * std::sin((k + 1) * nodes_(i));
        }
    }
    // endpoints carry exact Dirichlet zeros
    basis_.row(0).setZero();
    basis_.row(intervals).setZero();
}

Vector SpaceConfig::eigenvalues() const {
    Vector lam(n_modes_);
    for (int k = 0; k < n_modes_; ++k) {
        lam(k) = -static_cast<double>((k + 1) * (k + 1));
    }
    return lam;
}

namespace {

void check_dim(int got, const SpaceConfig& cfg) {
    if (got != cfg.n_modes()) {
        throw ConfigError("dimension mismatch: vector has " + std::to_string(got) + " modes, space has " +
                          std::to_string(cfg.n_modes()));
    }
}

}  // namespace

Vector to_grid(const StateVector& x, const SpaceConfig& cfg) {
    check_dim(x.size(), cfg);
    return cfg.basis() * x.coeffs;
}

StateVector from_grid(const Vector& samples, const SpaceConfig& cfg) {
    if (samples.size() != cfg.n_grid()) {
        throw ConfigError("dimension mismatch: expected " + std::to_string(cfg.n_grid()) + " grid samples");
    }
    return StateVector(cfg.basis().transpose() * cfg.weights().cwiseProduct(samples));
}

double lp_norm_samples(const Vector& samples, double p, const SpaceConfig& cfg) {
    double sum = 0.0;
    for (int i = 0; i < samples.size(); ++i) {
        sum += cfg.weights()(i) * std::pow(std::abs(samples(i)), p);
    }
    return std::pow(sum, 1.0 / p);
}

double lp_norm(const StateVector& x, const SpaceConfig& cfg) {
    if (cfg.p() == 2.0) {
        check_dim(x.size(), cfg);
        return x.coeffs.norm();
    }
    return lp_norm_samples(to_grid(x, cfg), cfg.p(), cfg);
}

double pairing(const DualVector& f, const StateVector& x) {
    if (f.size() != x.size()) {
        throw ConfigError("dimension mismatch in pairing");
    }
    return f.coeffs.dot(x.coeffs);
}

DualVector duality_map(const StateVector& x, const SpaceConfig& cfg) {
    const double p = cfg.p();
    if (p == 2.0) {
        check_dim(x.size(), cfg);
        return DualVector(x.coeffs, to_grid(x, cfg));
    }
    const Vector s = to_grid(x, cfg);
    const double norm = lp_norm_samples(s, p, cfg);
    if (norm == 0.0) {
        return DualVector(Vector::Zero(x.size()), Vector::Zero(cfg.n_grid()));
    }
    const double scale = std::pow(norm, 2.0 - p);
    Vector j(s.size());
    for (int i = 0; i < s.size(); ++i) {
        j(i) = scale * std::pow(std::abs(s(i)), p - 2.0) * s(i);
    }
    Vector c = cfg.basis().transpose() * cfg.weights().cwiseProduct(j);
    return DualVector(std::move(c), std::move(j));
}

double dual_norm(const DualVector& f, const SpaceConfig& cfg) {
    if (f.representer) {
        return lp_norm_samples(*f.representer, cfg.q(), cfg);
    }
    check_dim(f.size(), cfg);
    if (cfg.p() == 2.0) return f.coeffs.norm();
    return lp_norm_samples(cfg.basis() * f.coeffs, cfg.q(), cfg);
}

Matrix duality_map_jacobian(const StateVector& x, const SpaceConfig& cfg) {
    const int n = cfg.n_modes();
    const double p = cfg.p();
    if (p == 2.0) {
        return Matrix::Identity(n, n);
    }
    const Vector s = to_grid(x, cfg);
    const double norm = lp_norm_samples(s, p, cfg);
    if (norm == 0.0) {
        // J is continuous but not differentiable at 0 for p > 2; its derivative there is 0.
        return Matrix::Zero(n, n);
    }
    const Vector& w = cfg.weights();
    Vector abs_pm2(s.size());
    Vector g(s.size());  // |s|^{p-2} s, the sampled gradient direction
    for (int i = 0; i < s.size(); ++i) {
        abs_pm2(i) = std::pow(std::abs(s(i)), p - 2.0);
        g(i) = abs_pm2(i) * s(i);
    }
    // dJ/ds = (p-1) |x|^{2-p} diag(|s|^{p-2}) + (2-p) |x|^{2-2p} g (w.g)^T
    const double a = (p - 1.0) * std::pow(norm, 2.0 - p);
    const double b = (2.0 - p) * std::pow(norm, 2.0 - 2.0 * p);
    const Matrix& phi = cfg.basis();
    const Vector wg = w.cwiseProduct(g);
    const Matrix weighted = phi.transpose() * w.cwiseProduct(abs_pm2).asDiagonal();
    Matrix jac = a * weighted * phi;
    const Vector pg = phi.transpose() * wg;
    jac += b * pg * pg.transpose();
    return 0.5 * (jac + jac.transpose());
}

}  // namespace memctrl
