#pragma once

#include <Eigen/Dense>
#include <optional>

namespace memctrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Discretization of X = L^p(0, pi) on the Dirichlet sine eigenbasis
/// a_k(z) = sqrt(2/pi) sin(k z), k = 1..n_modes, sampled on a uniform
/// trapezoid grid that includes both endpoints.
class SpaceConfig {
public:
    SpaceConfig(double p, int n_modes, int n_grid);

    [[nodiscard]] double p() const { return p_; }
    /// Conjugate exponent q = p / (p - 1).
    [[nodiscard]] double q() const { return p_ / (p_ - 1.0); }
    [[nodiscard]] int n_modes() const { return n_modes_; }
    [[nodiscard]] int n_grid() const { return n_grid_; }

    [[nodiscard]] const Vector& nodes() const { return nodes_; }
    [[nodiscard]] const Vector& weights() const { return weights_; }
    /// n_grid x n_modes table of basis samples a_k(z_i).
    [[nodiscard]] const Matrix& basis() const { return basis_; }
    /// -k^2 for k = 1..n_modes.
    [[nodiscard]] Vector eigenvalues() const;

private:
    double p_;
    int n_modes_;
    int n_grid_;
    Vector nodes_;
    Vector weights_;
    Matrix basis_;
};

/// Element of X stored as coefficients against the sine eigenbasis.
struct StateVector {
    Vector coeffs;

    StateVector() = default;
    explicit StateVector(Vector c) : coeffs(std::move(c)) {}

    static StateVector zero(int n) { return StateVector(Vector::Zero(n)); }
    static StateVector unit(int n, int mode) {
        Vector c = Vector::Zero(n);
        c(mode) = 1.0;
        return StateVector(std::move(c));
    }

    [[nodiscard]] int size() const { return static_cast<int>(coeffs.size()); }

    StateVector& operator+=(const StateVector& o) {
        coeffs += o.coeffs;
        return *this;
    }
    StateVector& operator-=(const StateVector& o) {
        coeffs -= o.coeffs;
        return *this;
    }
    StateVector& operator*=(double a) {
        coeffs *= a;
        return *this;
    }
};

inline StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
inline StateVector operator-(StateVector a, const StateVector& b) { return a -= b; }
inline StateVector operator*(double s, StateVector a) { return a *= s; }

/// Element of X* = L^q. Coefficients give the pairing against the basis;
/// when the element came from the duality map the full grid representer
/// (which need not lie in the retained span) is kept for norm evaluation.
struct DualVector {
    Vector coeffs;
    std::optional<Vector> representer;

    DualVector() = default;
    explicit DualVector(Vector c) : coeffs(std::move(c)) {}
    DualVector(Vector c, Vector samples) : coeffs(std::move(c)), representer(std::move(samples)) {}

    [[nodiscard]] int size() const { return static_cast<int>(coeffs.size()); }
};

inline DualVector operator*(double s, const DualVector& f) {
    DualVector out(s * f.coeffs);
    if (f.representer) out.representer = s * (*f.representer);
    return out;
}

/// Grid samples x(z_i) = sum_k c_k a_k(z_i).
[[nodiscard]] Vector to_grid(const StateVector& x, const SpaceConfig& cfg);
/// Trapezoid projection onto the retained modes; exact inverse of to_grid.
[[nodiscard]] StateVector from_grid(const Vector& samples, const SpaceConfig& cfg);

[[nodiscard]] double lp_norm_samples(const Vector& samples, double p, const SpaceConfig& cfg);
[[nodiscard]] double lp_norm(const StateVector& x, const SpaceConfig& cfg);

/// <f, x>; the basis is L2-orthonormal so this is the coefficient dot product.
[[nodiscard]] double pairing(const DualVector& f, const StateVector& x);

/// J[x](z) = |x|_p^{2-p} |x(z)|^{p-2} x(z), projected back to coefficients.
/// J[0] = 0.
[[nodiscard]] DualVector duality_map(const StateVector& x, const SpaceConfig& cfg);

/// L^q norm of the representer (or of the span function when none is stored).
[[nodiscard]] double dual_norm(const DualVector& f, const SpaceConfig& cfg);

/// Coefficient-space derivative of duality_map at x (the Hessian of |x|_p^2 / 2).
/// Symmetric positive semidefinite.
[[nodiscard]] Matrix duality_map_jacobian(const StateVector& x, const SpaceConfig& cfg);

}  // namespace memctrl
