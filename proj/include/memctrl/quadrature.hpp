#pragma once

#include <array>
#include <boost/math/quadrature/gauss.hpp>

namespace memctrl {

/// Gauss-Legendre rule on [-1, 1], expanded from Boost's half-rule storage.
template <unsigned N>
struct GaussRule {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    GaussRule() {
        using G = boost::math::quadrature::gauss<double, N>;
        const auto& a = G::abscissa();
        const auto& w = G::weights();
        unsigned idx = 0;
        if constexpr (N % 2 == 1) {
            nodes[idx] = a[0];
            weights[idx] = w[0];
            ++idx;
            for (unsigned i = 1; i < a.size(); ++i) {
                nodes[idx] = a[i];
                weights[idx++] = w[i];
                nodes[idx] = -a[i];
                weights[idx++] = w[i];
            }
        } else {
            for (unsigned i = 0; i < a.size(); ++i) {
                nodes[idx] = a[i];
                weights[idx++] = w[i];
                nodes[idx] = -a[i];
                weights[idx++] = w[i];
            }
        }
    }

    /// Integrates f over [lo, hi].
    template <typename F>
    double integrate(F&& f, double lo, double hi) const {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double sum = 0.0;
        for (unsigned i = 0; i < N; ++i) {
            sum += weights[i] * f(mid + half * nodes[i]);
        }
        return half * sum;
    }
};

template <unsigned N>
const GaussRule<N>& gauss_rule() {
    static const GaussRule<N> rule;
    return rule;
}

}  // namespace memctrl
