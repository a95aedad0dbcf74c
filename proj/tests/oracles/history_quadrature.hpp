#pragma once
// Adaptive quadrature of the history integrals against the exact (not
// sampled) history function.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>

#include "memctrl/function_space.hpp"
#include "memctrl/memory_kernels.hpp"

namespace oracle {

using HistoryFn = std::function<memctrl::Vector(double)>;

inline double adaptive(const std::function<double(double)>& f, double lo, double hi) {
    if (!(lo < hi)) return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 25, 1e-14, &err);
}

/// -int_{-T}^0 g'(t - s) psi(s) ds. Integrated in tau = t - s with the
/// endpoint singularity at tau = 0 (t = 0) left to tanh-sinh.
inline memctrl::Vector f1_prime(double t, const HistoryFn& psi, int n, const memctrl::KernelParams& kp, double T) {
    memctrl::Vector out(n);
    boost::math::quadrature::tanh_sinh<double> ts;
    for (int k = 0; k < n; ++k) {
        auto integrand = [&](double tau) {
            if (tau <= 0.0) return 0.0;
            return memctrl::kernel_g_prime(tau, kp) * psi(t - tau)(k);
        };
        out(k) = -(t > 0.0 ? adaptive(integrand, t, t + T) : ts.integrate(integrand, 0.0, T));
    }
    return out;
}

/// lambda_k int_{-T}^0 e^{-mu (t - s)} psi_k(s) ds.
inline memctrl::Vector f2(double t, const HistoryFn& psi, const memctrl::Vector& eigs, const memctrl::KernelParams& kp,
                          double T) {
    memctrl::Vector out(eigs.size());
    for (int k = 0; k < eigs.size(); ++k) {
        out(k) = eigs(k) * adaptive([&](double s) { return std::exp(-kp.mu * (t - s)) * psi(s)(k); }, -T, 0.0);
    }
    return out;
}

/// scale int_{t-T}^t e^{-rate (t - s)} x(s) ds for a continuous path x.
inline memctrl::Vector history_integral(double t, const HistoryFn& x, int n, double scale, double rate, double T) {
    memctrl::Vector out(n);
    for (int k = 0; k < n; ++k) {
        out(k) = scale * adaptive([&](double s) { return std::exp(-rate * (t - s)) * x(s)(k); }, t - T, t);
    }
    return out;
}

}  // namespace oracle
