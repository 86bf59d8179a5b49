#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ballvi/audit.hpp"
#include "ballvi/solver_pen.hpp"

using namespace ballvi;

namespace {

Scenario base_scenario(const char* f0, double horizon, int nx) {
    Scenario sc;
    sc.name = "audit-case";
    sc.dim = 1;
    sc.nx = nx;
    sc.lx = 1.0;
    sc.components = 2;
    sc.horizon = horizon;
    sc.penalty.epsilon = 1e-2;
    sc.penalty.delta = 0.1;
    sc.penalty.delta0 = 1.0;
    sc.force = {parse_expr(f0), parse_expr("0")};
    sc.initial = {parse_expr("0"), parse_expr("0")};
    return sc;
}

const EstimateRecord& find(const EstimateReport& rep, const std::string& name, int p = 0) {
    for (const EstimateRecord& r : rep.records)
        if (r.name == name && r.p == p) return r;
    FAIL("record not found: " + name);
    static EstimateRecord dummy;
    return dummy;
}

} // namespace

TEST_CASE("data norms and the energy bound in closed form") {
    // Unit force on the unit interval: the squared space-time force norm is
    // the interior weight mass times the horizon, 127/128 here, and the
    // domain constant is 1/pi, so the energy bound is (1/pi^2)(127/128).
    const Scenario sc = base_scenario("1", 1.0, 129);
    PenSolveConfig cfg;
    cfg.tau = 0.25;
    const PenRunResult run = pen_run(sc, cfg);
    REQUIRE(run.traj.step_count() == 4);

    const EstimateReport rep = audit_run(sc, run.traj, {3, 5});
    const double pi = std::numbers::pi;

    CHECK(rep.norms.omega == 1.0);
    CHECK(rep.norms.qt == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(rep.norms.c_poincare == Catch::Approx(1.0 / pi).epsilon(1e-15));
    CHECK(rep.norms.f_l2_sq == Catch::Approx(127.0 / 128.0).epsilon(1e-13));
    CHECK(rep.norms.f_linf == 1.0);
    CHECK(rep.norms.u0_l2_sq == 0.0);
    CHECK(rep.norms.grad_u0_sq == 0.0);

    const EstimateRecord& energy = find(rep, "energy.u_linf_l2_sq");
    CHECK(energy.bound ==
          Catch::Approx((1.0 / (pi * pi)) * (127.0 / 128.0)).epsilon(1e-13));
    CHECK(rep.records[0].name == "energy.u_linf_l2_sq");
    CHECK(rep.records[1].name == "energy.grad_l2_sq");
    CHECK(rep.records[2].name == "energy.k_u2_l1_x2");
    CHECK(rep.records[3].name == "k.l1");
}

TEST_CASE("bound formulas recomputed from the reported data norms") {
    const Scenario sc = base_scenario("12", 0.2, 33);
    PenSolveConfig cfg;
    cfg.tau = 0.01;
    const PenRunResult run = pen_run(sc, cfg);
    const EstimateReport rep = audit_run(sc, run.traj, {3, 5});
    const ScenarioNorms& n = rep.norms;
    const double d0 = sc.penalty.delta0;

    const double bk1 = 0.5 * n.c_poincare * n.c_poincare * n.f_l2_sq + 0.5 * n.u0_l2_sq +
                       0.5 * d0 * n.qt;
    CHECK(find(rep, "k.l1").bound == Catch::Approx(bk1).epsilon(1e-14));

    // p = 3 walks the k = 2 branch of the iterated estimate
    const double inner3 = 2.0 * (2.0 * n.qt + bk1 * 2.0);
    const double bu3 = std::pow(n.qt, 1.0 / 3.0 - 1.0 / 4.0) * std::pow(inner3, 1.0 / 4.0);
    CHECK(find(rep, "u.lp", 3).bound == Catch::Approx(bu3).epsilon(1e-13));

    const double inner5 = 4.0 * (2.0 * n.qt + bk1 * 6.0);
    const double bu5 = std::pow(n.qt, 1.0 / 5.0 - 1.0 / 6.0) * std::pow(inner5, 1.0 / 6.0);
    CHECK(find(rep, "u.lp", 5).bound == Catch::Approx(bu5).epsilon(1e-13));

    const double bk3 = std::pow(std::pow(n.f_linf, 3) * std::pow(bu3, 3) +
                                    d0 * d0 * 1.5 * n.u0_l2_sq + std::pow(d0, 3) * 3.0 * n.qt,
                                1.0 / 3.0);
    CHECK(find(rep, "k.lp", 3).bound == Catch::Approx(bk3).epsilon(1e-13));

    const double bdt = d0 * n.omega + n.f_l2_sq + n.grad_u0_sq + d0 * n.u0_l2_sq;
    CHECK(find(rep, "dt.dt_l2_sq").bound == Catch::Approx(bdt).epsilon(1e-14));
    CHECK(find(rep, "dt.grad_linf_sq").bound == Catch::Approx(bdt).epsilon(1e-14));
}

TEST_CASE("saturating run passes every estimate") {
    const Scenario sc = base_scenario("12", 0.2, 33);
    PenSolveConfig cfg;
    cfg.tau = 0.01;
    const PenRunResult run = pen_run(sc, cfg);
    const EstimateReport rep = audit_run(sc, run.traj, {3, 5});
    for (const EstimateRecord& r : rep.records) {
        INFO(r.name << " p=" << r.p << " measured=" << r.measured << " bound=" << r.bound);
        CHECK(r.pass);
        CHECK(r.measured >= 0.0);
        CHECK(r.bound > 0.0);
    }
    CHECK(rep.all_pass);
    // saturated steps make the kernel mass genuinely positive
    CHECK(find(rep, "k.l1").measured > sc.penalty.delta * rep.norms.qt * 0.5);
}

TEST_CASE("tampered trajectory is caught") {
    const Scenario sc = base_scenario("12", 0.2, 33);
    PenSolveConfig cfg;
    cfg.tau = 0.01;
    PenRunResult run = pen_run(sc, cfg);
    for (TrajectoryStep& st : run.traj.steps)
        for (double& v : st.u.v) v *= 10.0;
    const EstimateReport rep = audit_run(sc, run.traj, {3, 5});
    CHECK_FALSE(find(rep, "energy.u_linf_l2_sq").pass);
    CHECK_FALSE(rep.all_pass);
}
