#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ballvi/penalty.hpp"
#include "support/oracles.hpp"

using namespace ballvi;

TEST_CASE("parameter validation") {
    PenaltyParams p;
    CHECK_NOTHROW(validate(p));
    p.epsilon = 0.0;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p = PenaltyParams{};
    p.delta = -0.1;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    p = PenaltyParams{};
    p.delta = 0.5;
    p.delta0 = 0.25;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
}

TEST_CASE("kernel branches") {
    PenaltyParams p;
    p.epsilon = 0.1;
    p.delta = 0.0;

    CHECK(k_eval(-1.0, p) == 0.0);
    CHECK(k_eval(0.0, p) == 0.0);
    // expm1(0.21 / 0.1); the quotient rounds below 2.1
    CHECK(k_eval(0.21, p) == 7.1661699125676472);
    CHECK(k_eval(0.21, p) == Catch::Approx(7.1661699125676508).epsilon(1e-14));
    CHECK(k_derivative(-0.5, p) == 0.0);
    CHECK(k_derivative(0.0, p) == 0.0);
    CHECK(k_derivative(0.21, p) == std::exp(0.21 / 0.1) / 0.1);

    p.delta = 0.4;
    CHECK(k_eval(-2.0, p) == 0.4);
    CHECK(k_eval(0.21, p) == 0.4 + 7.1661699125676472);
    // continuous at zero from the right
    CHECK(k_eval(1e-14, p) == Catch::Approx(0.4).margin(1e-12));
}

TEST_CASE("kernel is nondecreasing and floored at delta") {
    PenaltyParams p;
    p.epsilon = 0.02;
    p.delta = 0.3;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 0.9);
    for (int rep = 0; rep < 10000; ++rep) {
        double a = dist(rng), b = dist(rng);
        if (a > b) std::swap(a, b);
        const double ka = k_eval(a, p), kb = k_eval(b, p);
        REQUIRE(ka >= p.delta);
        REQUIRE(ka <= kb);
    }
}

TEST_CASE("map u -> k(|u|^2-1) u is monotone") {
    const Grid g = Grid::make_1d(1.0, 3);
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> dist(-1.2, 1.2);
    std::uniform_real_distribution<double> eps_dist(0.01, 1.0);
    std::uniform_real_distribution<double> delta_dist(0.0, 1.0);

    for (int rep = 0; rep < 10000; ++rep) {
        PenaltyParams p;
        p.epsilon = eps_dist(rng);
        p.delta = delta_dist(rng);
        p.delta0 = 1.0 + p.delta;

        VectorField u(g, 2), v(g, 2);
        u.node(1)[0] = dist(rng);
        u.node(1)[1] = dist(rng);
        v.node(1)[0] = dist(rng);
        v.node(1)[1] = dist(rng);

        const VectorField pu = phi_apply(g, u, p);
        const VectorField pv = phi_apply(g, v, p);
        double pairing = 0.0, mag = 1.0;
        for (int c = 0; c < 2; ++c) {
            const double du = u.node(1)[c] - v.node(1)[c];
            const double dp = pu.node(1)[c] - pv.node(1)[c];
            pairing += dp * du;
            mag = std::max({mag, std::abs(pu.node(1)[c]), std::abs(pv.node(1)[c])});
        }
        REQUIRE(pairing >= -1e-12 * mag);
    }
}

TEST_CASE("primitive of k: closed form") {
    PenaltyParams p;
    p.epsilon = 0.25;
    p.delta = 0.0;
    const double s = 0.25 * std::log(2.0);
    // delta*s + eps*expm1(s/eps) - s with expm1 = 1
    CHECK(psi_primitive2(s, p) == Catch::Approx(0.076713204860013678).epsilon(1e-15));
    CHECK(psi_primitive2(0.0, p) == 0.0);
    CHECK(psi_primitive2(-0.3, p) == 0.0); // delta = 0 branch

    p.delta = 0.4;
    CHECK(psi_primitive2(-0.3, p) == 0.4 * -0.3);

    // derivative of the primitive is the kernel (centered difference)
    for (double at : {-0.5, 0.1, 0.35}) {
        const double d = 1e-6;
        const double slope = (psi_primitive2(at + d, p) - psi_primitive2(at - d, p)) / (2.0 * d);
        CHECK(slope == Catch::Approx(k_eval(at, p)).epsilon(1e-7));
    }
}

TEST_CASE("psi powers against closed forms") {
    PenaltyParams p;
    p.epsilon = 0.25;
    p.delta = 0.5;

    CHECK(psi_eval(0.7, p, 1) == 0.7);
    CHECK(psi_eval(-0.2, p, 3) == 0.25 * -0.2); // delta^2 * s
    CHECK(psi_eval(0.4, p, 2) == psi_primitive2(0.4, p));

    // integral of (delta - 1 + e^{sigma/eps})^(power-1) on [0, 0.4],
    // expanded exactly (values frozen from the expansion)
    CHECK(psi_eval(0.4, p, 3) == Catch::Approx(2.0533081685398904).epsilon(1e-9));
    CHECK(psi_eval(0.4, p, 4) == Catch::Approx(6.3213789608439939).epsilon(1e-9));
}

TEST_CASE("psi powers against midpoint quadrature") {
    PenaltyParams p;
    p.epsilon = 0.1;
    p.delta = 0.25;
    for (int power : {3, 4, 5}) {
        const double s = 0.35;
        const double want = oracle::midpoint(
            [&](double sigma) {
                double val = 1.0;
                for (int i = 0; i < power - 1; ++i) val *= k_eval(sigma, p);
                return val;
            },
            0.0, s, 200000);
        CHECK(psi_eval(s, p, power) == Catch::Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("exponent cap saturates the kernel") {
    PenaltyParams p;
    p.epsilon = 0.1;
    p.delta = 0.25;
    p.exp_cap = 5.0; // smax = 0.5

    CHECK(k_eval(0.5, p) == 147.6631591025766); // delta + expm1(5)
    CHECK(k_eval(0.7, p) == k_eval(0.5, p));
    CHECK(k_eval(123.0, p) == k_eval(0.5, p));
    CHECK(k_derivative(0.49, p) > 0.0);
    CHECK(k_derivative(0.5, p) == 0.0);
    CHECK(k_derivative(2.0, p) == 0.0);

    CHECK(psi_primitive2(0.5, p) == Catch::Approx(14.366315910257661).epsilon(1e-15));
    // linear extension past the cap with slope k(smax)
    const double beyond = psi_primitive2(0.9, p);
    CHECK(beyond == Catch::Approx(14.366315910257661 + 0.4 * 147.6631591025766).epsilon(1e-14));

    // default cap keeps the kernel and the primitives finite for any
    // argument the iteration can reach
    PenaltyParams q;
    q.epsilon = 1e-3;
    CHECK(std::isfinite(k_eval(1e6, q)));
    CHECK(std::isfinite(psi_primitive2(2.0, q)));
    CHECK(std::isfinite(psi_eval(2.0, q, 4)));
}
