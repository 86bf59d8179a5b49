#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ballvi/grid.hpp"

using namespace ballvi;

namespace {

VectorField random_dirichlet_field(const Grid& g, int comps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    VectorField u(g, comps);
    for (double& v : u.v) v = dist(rng);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.boundary(i, j)) {
                double* p = u.node(g.index(i, j));
                for (int c = 0; c < comps; ++c) p[c] = 0.0;
            }
    return u;
}

} // namespace

TEST_CASE("grid factories validate input") {
    CHECK_THROWS_AS(Grid::make_1d(1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make_1d(0.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make_1d(-1.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make_2d(1.0, 1.0, 5, 2), std::invalid_argument);
    CHECK_THROWS_AS(Grid::make_2d(1.0, 0.0, 5, 5), std::invalid_argument);

    const Grid g = Grid::make_1d(2.0, 5);
    CHECK(g.hx == 0.5);
    CHECK(g.node_count() == 5);
    CHECK(g.measure() == 2.0);
    CHECK(g.cell() == 0.5);

    const Grid q = Grid::make_2d(1.0, 3.0, 5, 7);
    CHECK(q.hx == 0.25);
    CHECK(q.hy == 0.5);
    CHECK(q.node_count() == 35);
    CHECK(q.measure() == 3.0);
    CHECK(q.cell() == 0.125);
    CHECK(q.index(2, 3) == 3 * 5 + 2);
    CHECK(q.x(2) == 0.5);
    CHECK(q.y(3) == 1.5);
}

TEST_CASE("boundary detection and weights") {
    const Grid g1 = Grid::make_1d(1.0, 5);
    CHECK(g1.boundary(0, 0));
    CHECK(g1.boundary(4, 0));
    CHECK_FALSE(g1.boundary(2, 0));
    CHECK(g1.weight(0, 0) == 0.0);
    CHECK(g1.weight(2, 0) == g1.cell());

    const Grid g2 = Grid::make_2d(1.0, 1.0, 4, 4);
    int boundary_nodes = 0;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i)
            if (g2.boundary(i, j)) ++boundary_nodes;
    CHECK(boundary_nodes == 12); // all but the 2x2 interior block
}

TEST_CASE("1d laplacian on a hat profile") {
    const Grid g = Grid::make_1d(1.0, 5); // h = 1/4, 1/h^2 = 16
    VectorField u(g, 1);
    const double vals[5] = {0.0, 1.0, 2.0, 1.0, 0.0};
    for (int i = 0; i < 5; ++i) u.v[i] = vals[i];
    const VectorField lap = laplacian_apply(g, u);
    CHECK(lap.v[0] == 0.0);
    CHECK(lap.v[1] == 0.0);  // 2*16*1 - 16*(0 + 2)
    CHECK(lap.v[2] == 32.0); // 2*16*2 - 16*(1 + 1)
    CHECK(lap.v[3] == 0.0);
    CHECK(lap.v[4] == 0.0);
}

TEST_CASE("2d laplacian against an independent stencil") {
    const Grid g = Grid::make_2d(1.0, 2.0, 5, 6);
    const VectorField u = random_dirichlet_field(g, 2, 11);
    const VectorField lap = laplacian_apply(g, u);

    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double* got = lap.node(g.index(i, j));
            for (int c = 0; c < 2; ++c) {
                double want = 0.0;
                if (!g.boundary(i, j)) {
                    const auto at = [&](int ii, int jj) { return u.node(g.index(ii, jj))[c]; };
                    want = (2.0 * ax + 2.0 * ay) * at(i, j) - ax * (at(i - 1, j) + at(i + 1, j)) -
                           ay * (at(i, j - 1) + at(i, j + 1));
                }
                CHECK(got[c] == Catch::Approx(want).margin(1e-12));
            }
        }
}

TEST_CASE("gradient energy matches the operator quadratic form") {
    for (int dim = 1; dim <= 2; ++dim) {
        const Grid g = dim == 1 ? Grid::make_1d(1.5, 17) : Grid::make_2d(1.0, 0.75, 9, 11);
        const VectorField u = random_dirichlet_field(g, 2, 500 + dim);
        const double via_edges = grad_norm_sq(g, u);
        const double via_operator = weighted_dot(g, laplacian_apply(g, u), u);
        CHECK(via_edges == Catch::Approx(via_operator).epsilon(1e-12));
    }
}

TEST_CASE("impulse norms have the expected quadrature scaling") {
    const Grid g = Grid::make_2d(1.0, 1.0, 5, 5);
    VectorField u(g, 2);
    u.node(g.index(2, 2))[0] = 3.0;
    u.node(g.index(2, 2))[1] = 4.0; // |u| = 5 at a single interior node

    const double tau = 0.01;
    std::vector<VectorField> snaps{u};
    const double h2 = g.cell(); // 1/16

    for (double p : {2.0, 4.0}) {
        const double norm = lp_norm_spacetime(g, std::span<const VectorField>(snaps), tau, p);
        const double want = std::pow(tau, 1.0 / p) * std::pow(h2, 1.0 / p) * 5.0;
        CHECK(norm == Catch::Approx(want).epsilon(1e-14));
    }
    CHECK(linf_l2_norm(g, std::span<const VectorField>(snaps)) ==
          Catch::Approx(std::sqrt(h2) * 5.0).epsilon(1e-14));

    // boundary impulses are invisible to the weighted norms
    VectorField b(g, 2);
    b.node(g.index(0, 3))[0] = 7.0;
    std::vector<VectorField> bs{b};
    CHECK(lp_norm_spacetime(g, std::span<const VectorField>(bs), tau, 2.0) == 0.0);
    CHECK(weighted_pow_sum(g, b, 2.0) == 0.0);
}

TEST_CASE("weighted dot is the diagonal quadrature") {
    const Grid g = Grid::make_1d(1.0, 9);
    VectorField a(g, 1), b(g, 1);
    for (int i = 0; i < 9; ++i) {
        a.v[i] = i;
        b.v[i] = 1.0;
    }
    // sum over interior i = 1..7 of h * i = (1/8) * 28
    CHECK(weighted_dot(g, a, b) == Catch::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("poincare constants for the box") {
    const double pi = std::numbers::pi;
    CHECK(poincare_constant(Grid::make_1d(1.0, 5)) == Catch::Approx(1.0 / pi).epsilon(1e-15));
    CHECK(poincare_constant(Grid::make_1d(2.0, 5)) == Catch::Approx(2.0 / pi).epsilon(1e-15));
    CHECK(poincare_constant(Grid::make_2d(1.0, 1.0, 5, 5)) ==
          Catch::Approx(1.0 / (pi * std::sqrt(2.0))).epsilon(1e-15));
}

TEST_CASE("ball projection") {
    const Grid g = Grid::make_1d(1.0, 5);
    VectorField u(g, 2);
    u.node(1)[0] = 0.3;
    u.node(1)[1] = -0.4; // |u| = 0.5, untouched
    u.node(2)[0] = 3.0;
    u.node(2)[1] = 4.0; // |u| = 5, scaled
    u.node(3)[0] = -2.0;

    project_ball(u);
    CHECK(u.node(1)[0] == 0.3);
    CHECK(u.node(1)[1] == -0.4);
    CHECK(node_abs(u, 2) == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(u.node(2)[0] == Catch::Approx(0.6).epsilon(1e-15));
    CHECK(u.node(2)[1] == Catch::Approx(0.8).epsilon(1e-15));
    CHECK(u.node(3)[0] == Catch::Approx(-1.0).epsilon(1e-15));
    CHECK(u.node(0)[0] == 0.0);
    CHECK(max_node_abs(u, g) == Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("csv snapshots") {
    const Grid g = Grid::make_1d(1.0, 3);
    VectorField u(g, 2);
    u.node(1)[0] = 0.5;
    u.node(1)[1] = -1.25;
    std::ostringstream os;
    write_csv(g, u, os);
    CHECK(os.str() == "x,comp_0,comp_1\n"
                      "0,0,0\n"
                      "0.5,0.5,-1.25\n"
                      "1,0,0\n");

    const Grid q = Grid::make_2d(1.0, 1.0, 3, 3);
    ScalarField s(q);
    s.v[q.index(1, 1)] = 2.0;
    std::ostringstream qs;
    write_csv(q, s, qs);
    const std::string text = qs.str();
    CHECK(text.substr(0, text.find('\n')) == "x,y,comp_0");
    CHECK(text.find("0.5,0.5,2\n") != std::string::npos);
}
