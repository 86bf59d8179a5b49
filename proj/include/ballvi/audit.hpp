#pragma once

// A-priori estimate audit: computes closed-form bounds from the problem data
// alone (forces, initial state, domain constants, the multiplier floor and
// cap) and checks the measured space-time norms of a computed trajectory
// against them. The bounds hold for the continuous problem; the discrete
// quadratures reproduce them up to a small consistency defect, absorbed by
// the pass slack (2% by default). A trajectory that fails an audit was not
// produced by a convergent solve of this problem.

#include <cmath>
#include <string>
#include <vector>

#include "ballvi/grid.hpp"
#include "ballvi/penalty.hpp"
#include "ballvi/scenario.hpp"
#include "ballvi/solver_pen.hpp"
#include "ballvi/trajectory.hpp"
#include "ballvi/util.hpp"

namespace ballvi {

struct ScenarioNorms {
    double c_poincare = 0.0;
    double omega = 0.0;      // domain measure
    double qt = 0.0;         // omega * M * tau
    double f_l2_sq = 0.0;    // squared space-time L2 of the force
    double f_linf = 0.0;     // sup-in-time of the nodal max of |f|
    double u0_l2_sq = 0.0;
    double grad_u0_sq = 0.0;
};

inline ScenarioNorms measure_data(const Scenario& sc, const Grid& g, double tau, int steps,
                                  const ForceFn& force) {
    ScenarioNorms n;
    n.c_poincare = poincare_constant(g);
    n.omega = g.measure();
    n.qt = n.omega * double(steps) * tau;

    VectorField f(g, sc.components);
    for (int m = 1; m <= steps; ++m) {
        force(g, tau * m, f);
        n.f_l2_sq += tau * weighted_dot(g, f, f);
        n.f_linf = std::fmax(n.f_linf, max_node_abs(f, g));
    }
    const VectorField u0 = eval_initial(sc, g);
    n.u0_l2_sq = weighted_dot(g, u0, u0);
    n.grad_u0_sq = grad_norm_sq(g, u0);
    return n;
}

// Energy bound: both the sup-in-time squared L2 norm, the space-time squared
// gradient norm, and twice the kernel-weighted mass stay below it.
inline double bound_energy(const ScenarioNorms& n) {
    return n.c_poincare * n.c_poincare * n.f_l2_sq + n.u0_l2_sq;
}

inline double bound_k_l1(const ScenarioNorms& n, double delta0) {
    return 0.5 * n.c_poincare * n.c_poincare * n.f_l2_sq + 0.5 * n.u0_l2_sq +
           0.5 * delta0 * n.qt;
}

// Lp bound on the state via the iterated power estimate with exponent
// k = ceil(p/2); reduces to the energy bound's reach at p = 2.
inline double bound_u_lp(const ScenarioNorms& n, double delta0, int p) {
    const int k = (p + 1) / 2;
    const double inner =
        pow_int(2.0, k - 1) * (2.0 * n.qt + bound_k_l1(n, delta0) * factorial(k));
    const double expo_qt = 1.0 / double(p) - 1.0 / double(2 * k);
    return std::pow(n.qt, expo_qt) * std::pow(inner, 1.0 / double(2 * k));
}

inline double bound_k_lp(const ScenarioNorms& n, double delta0, int p) {
    const double cp = bound_u_lp(n, delta0, p);
    const double val = pow_int(n.f_linf, p) * pow_int(cp, p) +
                       pow_int(delta0, p - 1) * (0.5 * double(p)) * n.u0_l2_sq +
                       pow_int(delta0, p) * double(p) * n.qt;
    return std::pow(val, 1.0 / double(p));
}

inline double bound_dt(const ScenarioNorms& n, double delta0) {
    return delta0 * n.omega + n.f_l2_sq + n.grad_u0_sq + delta0 * n.u0_l2_sq;
}

struct EstimateRecord {
    std::string name;
    int p = 0; // 0 for records without an exponent
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct EstimateReport {
    ScenarioNorms norms;
    double slack = 0.02;
    std::vector<EstimateRecord> records;
    bool all_pass = true;

    void add(const std::string& name, int p, double measured, double bound) {
        EstimateRecord r{name, p, measured, bound, measured <= bound * (1.0 + slack)};
        all_pass = all_pass && r.pass;
        records.push_back(std::move(r));
    }
};

// Measured space-time norms of a trajectory. The kernel values come from the
// per-step multiplier field, so the same audit covers the penalized runs
// (where it equals k(|u|^2-1)) and the projected runs (where it is the
// recovered contact factor).
inline EstimateReport audit_run(const Scenario& sc, const Trajectory& traj,
                                const std::vector<int>& p_list, const ForceFn& force,
                                double slack = 0.02) {
    const Grid g = sc.make_grid();
    const double tau = traj.tau;
    const int steps = traj.step_count();
    const double d0 = sc.penalty.delta0;

    EstimateReport rep;
    rep.slack = slack;
    rep.norms = measure_data(sc, g, tau, steps, force);

    double u_linf_sq = weighted_dot(g, traj.u0, traj.u0);
    double grad_linf_sq = grad_norm_sq(g, traj.u0);
    double grad_l2_sq = 0.0;
    double k_u2 = 0.0;
    double k_l1 = 0.0;
    double dt_l2_sq = 0.0;
    std::vector<double> u_lp_sum(p_list.size(), 0.0), k_lp_sum(p_list.size(), 0.0);

    const VectorField* prev = &traj.u0;
    VectorField diff(g, traj.u0.n);
    for (const TrajectoryStep& st : traj.steps) {
        u_linf_sq = std::fmax(u_linf_sq, weighted_dot(g, st.u, st.u));
        const double gsq = grad_norm_sq(g, st.u);
        grad_linf_sq = std::fmax(grad_linf_sq, gsq);
        grad_l2_sq += tau * gsq;

        double ku2 = 0.0, kl1 = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double w = g.weight(i, j);
                if (w == 0.0) continue;
                const int idx = g.index(i, j);
                const double lam = st.lambda.v[idx];
                ku2 += w * lam * node_abs_sq(st.u, idx);
                kl1 += w * lam;
            }
        k_u2 += tau * ku2;
        k_l1 += tau * kl1;

        for (std::size_t q = 0; q < diff.v.size(); ++q)
            diff.v[q] = (st.u.v[q] - prev->v[q]) / tau;
        dt_l2_sq += tau * weighted_dot(g, diff, diff);
        prev = &st.u;

        for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
            u_lp_sum[pi] += tau * weighted_pow_sum(g, st.u, double(p_list[pi]));
            k_lp_sum[pi] += tau * weighted_pow_sum(g, st.lambda, double(p_list[pi]));
        }
    }

    const double b_energy = bound_energy(rep.norms);
    rep.add("energy.u_linf_l2_sq", 0, u_linf_sq, b_energy);
    rep.add("energy.grad_l2_sq", 0, grad_l2_sq, b_energy);
    rep.add("energy.k_u2_l1_x2", 0, 2.0 * k_u2, b_energy);
    rep.add("k.l1", 0, k_l1, bound_k_l1(rep.norms, d0));
    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
        const int p = p_list[pi];
        rep.add("u.lp", p, std::pow(u_lp_sum[pi], 1.0 / double(p)), bound_u_lp(rep.norms, d0, p));
    }
    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
        const int p = p_list[pi];
        rep.add("k.lp", p, std::pow(k_lp_sum[pi], 1.0 / double(p)), bound_k_lp(rep.norms, d0, p));
    }
    const double b_dt = bound_dt(rep.norms, d0);
    rep.add("dt.dt_l2_sq", 0, dt_l2_sq, b_dt);
    rep.add("dt.grad_linf_sq", 0, grad_linf_sq, b_dt);
    return rep;
}

inline EstimateReport audit_run(const Scenario& sc, const Trajectory& traj,
                                const std::vector<int>& p_list, double slack = 0.02) {
    return audit_run(sc, traj, p_list, make_force_fn(sc), slack);
}

} // namespace ballvi
