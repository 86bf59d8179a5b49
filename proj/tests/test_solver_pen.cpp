#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ballvi/solver_pen.hpp"
#include "support/oracles.hpp"

using namespace ballvi;

namespace {

VectorField constant_force(const Grid& g, double c0, double c1) {
    VectorField f(g, 2);
    for (int idx = 0; idx < g.node_count(); ++idx) {
        f.node(idx)[0] = c0;
        f.node(idx)[1] = c1;
    }
    return f;
}

Scenario small_saturating() {
    Scenario sc;
    sc.name = "test-saturating";
    sc.dim = 1;
    sc.nx = 33;
    sc.lx = 1.0;
    sc.components = 2;
    sc.horizon = 0.2;
    sc.penalty.epsilon = 1e-2;
    sc.penalty.delta = 0.0;
    sc.penalty.delta0 = 1.0;
    sc.force = {parse_expr("12"), parse_expr("0")};
    sc.initial = {parse_expr("0"), parse_expr("0")};
    return sc;
}

double sup_diff(const VectorField& a, const VectorField& b) {
    double m = 0.0;
    for (std::size_t q = 0; q < a.v.size(); ++q) m = std::max(m, std::abs(a.v[q] - b.v[q]));
    return m;
}

} // namespace

TEST_CASE("implicit step agrees with a dense Newton solve") {
    SECTION("1d, contact forms during the step") {
        const Grid g = Grid::make_1d(1.0, 9);
        PenaltyParams pen;
        pen.epsilon = 1e-2;
        pen.delta = 0.0;
        const double tau = 0.1;
        const VectorField u_prev(g, 2);
        const VectorField f = constant_force(g, 25.0, 0.0);

        const VectorField want = oracle::newton_step_solve(g, pen, tau, u_prev, f);

        PenSolveConfig cfg;
        VectorField u = u_prev;
        const PenStepResult r = pen_step(g, pen, cfg, tau, u_prev, f, u);
        REQUIRE(r.converged);
        CHECK(sup_diff(u, want) <= 1e-6);
        CHECK(max_node_abs(want, g) > 1.0); // the constraint really bites
    }

    SECTION("2d, mixed components, warm interior state") {
        const Grid g = Grid::make_2d(1.0, 1.0, 5, 5);
        PenaltyParams pen;
        pen.epsilon = 5e-2;
        pen.delta = 0.2;
        const double tau = 0.05;
        VectorField u_prev(g, 2);
        const double pi = std::numbers::pi;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (g.boundary(i, j)) continue;
                double* p = u_prev.node(g.index(i, j));
                p[0] = 0.5 * std::sin(pi * g.x(i)) * std::sin(pi * g.y(j));
                p[1] = -0.25;
            }
        const VectorField f = constant_force(g, 48.0, 24.0);

        const VectorField want = oracle::newton_step_solve(g, pen, tau, u_prev, f);

        PenSolveConfig cfg;
        VectorField u = u_prev;
        const PenStepResult r = pen_step(g, pen, cfg, tau, u_prev, f, u);
        REQUIRE(r.converged);
        CHECK(sup_diff(u, want) <= 1e-6);
    }
}

TEST_CASE("zero data finishes in one iteration") {
    const Grid g = Grid::make_1d(1.0, 17);
    PenaltyParams pen;
    PenSolveConfig cfg;
    const VectorField u_prev(g, 2), f(g, 2);
    VectorField u = u_prev;
    const PenStepResult r = pen_step(g, pen, cfg, 0.05, u_prev, f, u);
    CHECK(r.converged);
    CHECK(r.outer_iterations == 1);
    for (double v : u.v) CHECK(v == 0.0);
}

TEST_CASE("inactive step is bitwise the plain linear solve") {
    const Grid g = Grid::make_1d(1.0, 33);
    PenaltyParams pen;
    pen.epsilon = 1e-2;
    pen.delta = 0.1;
    const double tau = 0.01;
    const double pi = std::numbers::pi;

    VectorField u_prev(g, 2);
    for (int i = 1; i + 1 < g.nx; ++i) u_prev.node(i)[0] = 0.2 * std::sin(pi * g.x(i));
    const VectorField f = constant_force(g, 0.5, 0.0);

    PenSolveConfig cfg;
    VectorField u = u_prev;
    const PenStepResult r = pen_step(g, pen, cfg, tau, u_prev, f, u);
    REQUIRE(r.converged);
    CHECK(r.outer_iterations == 1);
    CHECK(max_node_abs(u, g) < 1.0);

    // same call the penalized step must reduce to while the constraint is off
    VectorField rhs0(g, 2);
    const double inv_tau = 1.0 / tau;
    for (std::size_t q = 0; q < rhs0.v.size(); ++q) rhs0.v[q] = f.v[q] + inv_tau * u_prev.v[q];
    ScalarField shift(g, pen.delta);
    ShiftedOperator op{&g, tau, &shift};
    VectorField x = u_prev;
    const CgResult cg = cg_solve(op, rhs0, x, cfg.cg_tol, cfg.max_cg, cfg.use_jacobi);
    REQUIRE(cg.converged);

    for (std::size_t q = 0; q < u.v.size(); ++q) CHECK(u.v[q] == x.v[q]);
}

TEST_CASE("run satisfies the summed energy identity") {
    const Scenario sc = small_saturating();
    PenSolveConfig cfg;
    cfg.tau = 0.01;
    const PenRunResult run = pen_run(sc, cfg);
    CHECK(run.traj.step_count() == 20);
    CHECK(std::abs(run.energy_gap) <= 1e-6 * run.energy_scale);
    CHECK(run.total_outer >= run.traj.step_count());
}

TEST_CASE("constraint violation is controlled by the kernel mass") {
    const Scenario sc = small_saturating();
    PenSolveConfig cfg;
    cfg.tau = 0.01;
    const PenRunResult run = pen_run(sc, cfg);
    // pointwise (|u|^2-1)_+ <= eps (k - delta), summed with the same weights
    CHECK(run.khat_l1 > 0.0);
    CHECK(run.constraint_violation_l1 <= sc.penalty.epsilon * run.khat_l1 + 1e-12);
}

TEST_CASE("multiplier field tracks the kernel") {
    const Grid g = Grid::make_1d(1.0, 5);
    PenaltyParams pen;
    pen.epsilon = 0.1;
    pen.delta = 0.3;
    VectorField u(g, 2);
    u.node(1)[0] = 0.5;  // inactive
    u.node(2)[0] = 1.1;  // violating
    const ScalarField lam = extract_multiplier(g, u, pen);
    CHECK(lam.v[1] == 0.3);
    CHECK(lam.v[2] == k_eval(1.1 * 1.1 - 1.0, pen));
    CHECK(lam.v[2] > 0.3);
    CHECK(lam.v[0] == 0.3); // boundary node carries the floor value
}

TEST_CASE("exhausted budget throws with step context") {
    Scenario sc = small_saturating();
    sc.initial = {parse_expr("0.9*sin(3.141592653589793*x)"), parse_expr("0")};
    PenSolveConfig cfg;
    cfg.tau = 0.1;
    cfg.max_outer = 1;
    try {
        pen_run(sc, cfg);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.step() >= 1);
        CHECK(e.residual() > 0.0);
    }
}

TEST_CASE("smaller first trial step reaches the same state") {
    const Scenario sc = small_saturating();
    PenSolveConfig cfg;
    cfg.tau = 0.01;
    PenSolveConfig damped = cfg;
    damped.theta = 0.25;
    const PenRunResult a = pen_run(sc, cfg);
    const PenRunResult b = pen_run(sc, damped);
    REQUIRE(a.traj.step_count() == b.traj.step_count());
    double m = 0.0;
    for (int s = 0; s < a.traj.step_count(); ++s)
        m = std::max(m, sup_diff(a.traj.steps[s].u, b.traj.steps[s].u));
    CHECK(m <= 1e-6);
}
