#include <catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "memctrl/error.hpp"

using namespace memctrl;
using testing_support::random_vector;

TEST_CASE("space config validation and quadrature weights") {
    REQUIRE_THROWS_AS(SpaceConfig(1.5, 8, 32), ConfigError);
    REQUIRE_THROWS_AS(SpaceConfig(2.0, 16, 31), ConfigError);
    REQUIRE_THROWS_WITH(SpaceConfig(2.0, 16, 31), Catch::Matchers::ContainsSubstring("space.n_grid"));
    const SpaceConfig s(3.0, 8, 64);
    REQUIRE(s.weights().minCoeff() > 0.0);
    REQUIRE(std::abs(s.weights().sum() - std::numbers::pi) < 1e-12);
    REQUIRE(s.q() == Catch::Approx(1.5));
}

TEST_CASE("to_grid and from_grid") {
    const SpaceConfig s(2.0, 8, 64);
    const Vector g = to_grid(StateVector::unit(8, 0), s);
    for (int i = 0; i < s.n_grid(); ++i) {
        REQUIRE(std::abs(g(i) - std::sqrt(2.0 / std::numbers::pi) * std::sin(s.nodes()(i))) < 1e-14);
    }
    REQUIRE(to_grid(StateVector::zero(8), s).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const StateVector x(random_vector(rng, 8));
        REQUIRE((from_grid(to_grid(x, s), s).coeffs - x.coeffs).cwiseAbs().maxCoeff() < 1e-10);
    }
    REQUIRE_THROWS_AS(to_grid(StateVector::zero(7), s), ConfigError);
}

TEST_CASE("lp norms") {
    const SpaceConfig s(2.0, 8, 64);
    REQUIRE(lp_norm_samples(Vector::Ones(64), 2.0, s) == Catch::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
    REQUIRE(lp_norm(StateVector::zero(8), s) == 0.0);
    REQUIRE(lp_norm(StateVector::unit(8, 0), s) == Catch::Approx(1.0).epsilon(1e-14));

    std::mt19937_64 rng(3);
    const StateVector x(random_vector(rng, 8));
    REQUIRE(std::abs(lp_norm_samples(to_grid(x, s), 2.0, s) - x.coeffs.norm()) < 1e-10);

    // L^3 norm of a_1: (2/pi)^{3/2} int sin^3 = (2/pi)^{3/2} 4/3
    const SpaceConfig s3(3.0, 8, 2048);
    const double exact = std::cbrt(std::pow(2.0 / std::numbers::pi, 1.5) * 4.0 / 3.0);
    REQUIRE(lp_norm(StateVector::unit(8, 0), s3) == Catch::Approx(exact).epsilon(1e-6));
}

TEST_CASE("pairing") {
    REQUIRE(pairing(DualVector(StateVector::unit(4, 0).coeffs), StateVector::unit(4, 0)) == 1.0);
    REQUIRE(pairing(DualVector(StateVector::unit(4, 0).coeffs), StateVector::unit(4, 1)) == 0.0);
    std::mt19937_64 rng(5);
    const DualVector f(random_vector(rng, 6));
    const StateVector x(random_vector(rng, 6)), y(random_vector(rng, 6));
    const double a = 0.7, b = -1.3;
    REQUIRE(std::abs(pairing(f, a * x + b * y) - (a * pairing(f, x) + b * pairing(f, y))) < 1e-10);
    REQUIRE_THROWS_AS(pairing(f, StateVector::zero(5)), ConfigError);
}

TEST_CASE("duality map") {
    std::mt19937_64 rng(17);
    const SpaceConfig s2(2.0, 8, 64);
    const StateVector x(random_vector(rng, 8));
    REQUIRE((duality_map(x, s2).coeffs - x.coeffs).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(duality_map(StateVector::zero(8), s2).coeffs.isZero(0.0));

    for (double p : {3.0, 4.0}) {
        const SpaceConfig s(p, 8, 128);
        REQUIRE(duality_map(StateVector::zero(8), s).coeffs.isZero(0.0));
        for (int rep = 0; rep < 20; ++rep) {
            const StateVector z(random_vector(rng, 8));
            const DualVector j = duality_map(z, s);
            const double nz = lp_norm(z, s);
            REQUIRE(std::abs(pairing(j, z) - nz * nz) < 1e-8 * (1.0 + nz * nz));
            REQUIRE(std::abs(dual_norm(j, s) - nz) < 1e-8 * (1.0 + nz));
            const double a = -2.5;
            REQUIRE((duality_map(a * z, s).coeffs - a * j.coeffs).cwiseAbs().maxCoeff() < 1e-8);
            const StateVector w(random_vector(rng, 8));
            REQUIRE(pairing(DualVector(j.coeffs - duality_map(w, s).coeffs), z - w) > 0.0);
        }
    }
}

TEST_CASE("duality map jacobian matches finite differences") {
    std::mt19937_64 rng(23);
    const SpaceConfig s(3.0, 6, 128);
    const StateVector x(random_vector(rng, 6));
    const Matrix J = duality_map_jacobian(x, s);
    REQUIRE((J - J.transpose()).norm() < 1e-12);
    const double eps = 1e-6;
    for (int k = 0; k < 6; ++k) {
        StateVector xp = x, xm = x;
        xp.coeffs(k) += eps;
        xm.coeffs(k) -= eps;
        const Vector fd = (duality_map(xp, s).coeffs - duality_map(xm, s).coeffs) / (2 * eps);
        REQUIRE((fd - J.col(k)).norm() < 1e-6 * (1.0 + fd.norm()));
    }
    REQUIRE(duality_map_jacobian(StateVector::zero(6), s).isZero(0.0));
    REQUIRE(duality_map_jacobian(x, SpaceConfig(2.0, 6, 32)).isIdentity(0.0));
}
