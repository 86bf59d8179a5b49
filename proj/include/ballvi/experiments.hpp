#pragma once

// Study drivers built on the two solvers:
//   linear_run        kernel frozen at delta, plain implicit Euler; the
//                     penalized solver must match it bit for bit while the
//                     constraint stays inactive.
//   epsilon_study     penalized runs against the projected reference for a
//                     decreasing list of epsilons; errors must not grow and
//                     the complementarity defect must shrink.
//   dependence_study  perturbed forces f + g/n; the state perturbation must
//                     obey the stability inequality at every time and scale
//                     like 1/n.
//   multiplier_check  both routes' multipliers: equal to the floor delta on
//                     the common inactive set, compared in L1 on the contact
//                     set.

#include <cmath>
#include <vector>

#include "ballvi/audit.hpp"
#include "ballvi/grid.hpp"
#include "ballvi/scenario.hpp"
#include "ballvi/solver_pen.hpp"
#include "ballvi/solver_vi.hpp"
#include "ballvi/trajectory.hpp"

namespace ballvi {

// Time stepping with the kernel frozen at its floor value: each step is one
// SPD solve. The operator, right hand side, warm start, and CG settings are
// assembled exactly like the penalized step's first linear solve.
inline Trajectory linear_run(const Scenario& sc, const PenSolveConfig& cfg, const ForceFn& force) {
    sc.check();
    const Grid g = sc.make_grid();
    const double tau = cfg.tau > 0.0 ? cfg.tau : sc.horizon / 200.0;
    const int steps = step_count(sc.horizon, tau);
    const double inv_tau = 1.0 / tau;

    Trajectory traj;
    traj.tau = tau;
    traj.u0 = eval_initial(sc, g);
    traj.steps.reserve(steps);

    const ScalarField shift(g, sc.penalty.delta);
    const ShiftedOperator op{&g, tau, &shift};
    VectorField u_prev = traj.u0;
    VectorField u = u_prev;
    VectorField f(g, sc.components), rhs(g, sc.components);

    for (int m = 1; m <= steps; ++m) {
        const double t = tau * m;
        force(g, t, f);
        for (std::size_t q = 0; q < rhs.v.size(); ++q) rhs.v[q] = f.v[q] + inv_tau * u_prev.v[q];
        const CgResult cg = cg_solve(op, rhs, u, cfg.cg_tol, cfg.max_cg, cfg.use_jacobi);
        if (!cg.converged)
            throw SolverError("linear step did not converge", m, cg.relative_residual);
        TrajectoryStep st;
        st.t = t;
        st.u = u;
        st.lambda = ScalarField(g, sc.penalty.delta);
        st.iterations = cg.iterations;
        st.residual = cg.relative_residual;
        traj.steps.push_back(std::move(st));
        u_prev = u;
    }
    return traj;
}

inline Trajectory linear_run(const Scenario& sc, const PenSolveConfig& cfg) {
    return linear_run(sc, cfg, make_force_fn(sc));
}

inline double trajectory_l2_distance(const Grid& g, const Trajectory& a, const Trajectory& b) {
    double s = 0.0;
    VectorField diff(g, a.u0.n);
    const std::size_t m = std::min(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t q = 0; q < diff.v.size(); ++q)
            diff.v[q] = a.steps[i].u.v[q] - b.steps[i].u.v[q];
        s += a.tau * weighted_dot(g, diff, diff);
    }
    return std::sqrt(s);
}

struct EpsilonRow {
    double epsilon = 0.0;
    double err_l2 = 0.0;
    double violation_l1 = 0.0;
    double complementarity_l1 = 0.0;
    std::vector<double> k_lp;
    std::vector<double> k_lp_bound;
    bool bounds_pass = true;
};

struct EpsilonStudyResult {
    std::vector<int> p_list;
    std::vector<EpsilonRow> rows;
    bool err_monotone = true;
    bool complementarity_shrinks = true;
    bool bounds_pass = true;
    bool pass() const { return err_monotone && complementarity_shrinks && bounds_pass; }
};

// eps_list must be strictly decreasing. Error monotonicity gets a 5%
// allowance plus an absolute cushion so noise at the solver tolerance does
// not flip the verdict; the complementarity defect must at least halve from
// the first epsilon to the last unless it already sits at rounding level.
inline EpsilonStudyResult epsilon_study(const Scenario& sc, const PenSolveConfig& pen_cfg,
                                        const ViSolveConfig& vi_cfg,
                                        const std::vector<double>& eps_list,
                                        const std::vector<int>& p_list, double slack = 0.02) {
    EpsilonStudyResult out;
    out.p_list = p_list;
    const Grid g = sc.make_grid();

    const ViRunResult ref = vi_run(sc, vi_cfg);
    const double tau = ref.traj.tau;
    const int steps = ref.traj.step_count();
    const ScenarioNorms norms = measure_data(sc, g, tau, steps, make_force_fn(sc));
    const double delta = sc.penalty.delta;

    for (double eps : eps_list) {
        Scenario run_sc = sc;
        run_sc.penalty.epsilon = eps;
        const PenRunResult pr = pen_run(run_sc, pen_cfg);
        if (pr.traj.step_count() != steps)
            throw ConfigError("epsilon study: solver configs disagree on the step count");

        EpsilonRow row;
        row.epsilon = eps;
        row.err_l2 = trajectory_l2_distance(g, pr.traj, ref.traj);
        row.violation_l1 = pr.constraint_violation_l1;
        for (const TrajectoryStep& st : pr.traj.steps) {
            double comp = 0.0;
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const double w = g.weight(i, j);
                    if (w == 0.0) continue;
                    const int idx = g.index(i, j);
                    comp += w * std::fabs((st.lambda.v[idx] - delta) *
                                          (node_abs_sq(st.u, idx) - 1.0));
                }
            row.complementarity_l1 += tau * comp;
        }
        for (int p : p_list) {
            double sum = 0.0;
            for (const TrajectoryStep& st : pr.traj.steps)
                sum += tau * weighted_pow_sum(g, st.lambda, double(p));
            const double measured = std::pow(sum, 1.0 / double(p));
            const double bound = bound_k_lp(norms, run_sc.penalty.delta0, p);
            row.k_lp.push_back(measured);
            row.k_lp_bound.push_back(bound);
            row.bounds_pass = row.bounds_pass && measured <= bound * (1.0 + slack);
        }
        out.bounds_pass = out.bounds_pass && row.bounds_pass;
        out.rows.push_back(std::move(row));
    }

    for (std::size_t i = 1; i < out.rows.size(); ++i)
        if (out.rows[i].err_l2 > 1.05 * out.rows[i - 1].err_l2 + 1e-12) out.err_monotone = false;
    if (!out.rows.empty()) {
        const double first = out.rows.front().complementarity_l1;
        const double last = out.rows.back().complementarity_l1;
        if (first > 1e-14 && last > 0.5 * first) out.complementarity_shrinks = false;
    }
    return out;
}

struct DependenceRow {
    int n = 0;
    double lhs_final = 0.0;
    double rhs_final = 0.0;
    double max_ratio = 0.0; // max over time of lhs(t)/rhs(t)
    double n_sq_lhs = 0.0;
    bool pass = true;
};

struct DependenceStudyResult {
    std::vector<DependenceRow> rows;
    double scaling_spread = 0.0; // max/min of n^2 lhs over participating rows
    bool inequality_pass = true;
    bool scaling_pass = true;
    bool pass() const { return inequality_pass && scaling_pass; }
};

// Runs the penalized scheme with forces f + g/n and checks the stability
// inequality of the state perturbation z_n = u_n - u at every snapshot:
//   |z(t)|^2/2 + sum tau (|grad z|^2/2 + delta |z|^2) <= (C^2/2) |g|_{Q_t}^2 / n^2
// up to the quadrature slack. n^2 lhs(T) must stay within a factor 4 across
// the list; rows with 1/n at rounding level only need lhs ~ 0.
inline DependenceStudyResult dependence_study(const Scenario& sc, const PenSolveConfig& cfg,
                                              const std::vector<int>& n_list,
                                              double slack = 0.02) {
    if (sc.perturbation.empty())
        throw ConfigError("dependence study needs a perturbation in the scenario");
    DependenceStudyResult out;
    const Grid g = sc.make_grid();
    const double delta = sc.penalty.delta;
    const double c2 = poincare_constant(g) * poincare_constant(g);

    const PenRunResult base = pen_run(sc, cfg);
    const double tau = base.traj.tau;
    const int steps = base.traj.step_count();

    VectorField gfield(g, sc.components);
    std::vector<double> g_l2_sq(steps + 1, 0.0); // cumulative in time
    for (int m = 1; m <= steps; ++m) {
        eval_expressions(g, sc.perturbation, tau * m, gfield);
        g_l2_sq[m] = g_l2_sq[m - 1] + tau * weighted_dot(g, gfield, gfield);
    }

    for (int n : n_list) {
        if (n <= 0) throw ConfigError("dependence study: n values must be positive");
        const double inv_n = 1.0 / double(n);
        ForceFn force = [&sc, inv_n,
                         pert = VectorField()](const Grid& gr, double t, VectorField& outf) mutable {
            eval_force(sc, gr, t, outf);
            eval_expressions(gr, sc.perturbation, t, pert);
            for (std::size_t q = 0; q < outf.v.size(); ++q) outf.v[q] += inv_n * pert.v[q];
        };
        const PenRunResult run = pen_run(sc, cfg, force);

        DependenceRow row;
        row.n = n;
        VectorField z(g, sc.components);
        double accum = 0.0; // gradient and delta terms up to the current step
        double lhs = 0.0, rhs = 0.0;
        for (int m = 1; m <= steps; ++m) {
            const VectorField& a = run.traj.steps[m - 1].u;
            const VectorField& b = base.traj.steps[m - 1].u;
            for (std::size_t q = 0; q < z.v.size(); ++q) z.v[q] = a.v[q] - b.v[q];
            accum += tau * (0.5 * grad_norm_sq(g, z) + delta * weighted_dot(g, z, z));
            lhs = 0.5 * weighted_dot(g, z, z) + accum;
            rhs = 0.5 * c2 * g_l2_sq[m] * inv_n * inv_n;
            if (rhs > 0.0)
                row.max_ratio = std::fmax(row.max_ratio, lhs / rhs);
            else if (lhs > 1e-12)
                row.pass = false;
        }
        row.lhs_final = lhs;
        row.rhs_final = rhs;
        row.n_sq_lhs = double(n) * double(n) * lhs;
        if (row.max_ratio > 1.0 + slack) row.pass = false;
        out.inequality_pass = out.inequality_pass && row.pass;
        out.rows.push_back(row);
    }

    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const DependenceRow& row : out.rows) {
        if (1.0 / double(row.n) <= 1e-6) {
            if (row.lhs_final > 1e-12) out.scaling_pass = false;
            continue;
        }
        if (!any) {
            lo = hi = row.n_sq_lhs;
            any = true;
        } else {
            lo = std::fmin(lo, row.n_sq_lhs);
            hi = std::fmax(hi, row.n_sq_lhs);
        }
    }
    if (any && lo > 0.0) {
        out.scaling_spread = hi / lo;
        if (out.scaling_spread > 4.0) out.scaling_pass = false;
    } else if (any && hi > 1e-12) {
        out.scaling_pass = false; // a zero row next to a nonzero one
    }
    return out;
}

struct MultiplierRow {
    int step = 0;
    double t = 0.0;
    double inactive_max_diff = 0.0;
    double contact_l1 = 0.0;       // spatial L1 of the multiplier gap
    double contact_measure = 0.0;  // area where both routes see contact
    double mixed_measure = 0.0;    // area where the routes disagree on contact
};

struct MultiplierReport {
    std::vector<MultiplierRow> rows;
    double inactive_max_diff = 0.0;
    double contact_l1 = 0.0; // time-integrated
    bool pass = false;

    static constexpr double inactive_tol = 1e-8;
};

// Both routes carry a multiplier: the penalized kernel value and the
// recovered contact factor. Where both report the constraint slack the two
// must agree exactly at the floor delta; on the common contact set their gap
// is recorded for the report. Nodes the routes classify differently sit in
// the boundary layer and are only measured.
inline MultiplierReport multiplier_check(const Scenario& sc, const PenSolveConfig& pen_cfg,
                                         const ViSolveConfig& vi_cfg) {
    MultiplierReport rep;
    const Grid g = sc.make_grid();
    const double delta = sc.penalty.delta;

    const PenRunResult pr = pen_run(sc, pen_cfg);
    const ViRunResult vr = vi_run(sc, vi_cfg);
    const double tau = pr.traj.tau;
    const int steps = std::min(pr.traj.step_count(), vr.traj.step_count());

    for (int m = 0; m < steps; ++m) {
        const TrajectoryStep& ps = pr.traj.steps[m];
        const TrajectoryStep& vs = vr.traj.steps[m];
        MultiplierRow row;
        row.step = m + 1;
        row.t = ps.t;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double w = g.weight(i, j);
                if (w == 0.0) continue;
                const int idx = g.index(i, j);
                const double lp = ps.lambda.v[idx];
                const double lv = vs.lambda.v[idx];
                const bool pen_active = lp > delta;
                const bool vi_contact = node_abs(vs.u, idx) >= 1.0 - vi_cfg.contact_tol;
                if (!pen_active && !vi_contact) {
                    row.inactive_max_diff = std::fmax(row.inactive_max_diff, std::fabs(lp - lv));
                } else if (pen_active && vi_contact) {
                    row.contact_l1 += w * std::fabs(lp - lv);
                    row.contact_measure += w;
                } else {
                    row.mixed_measure += w;
                }
            }
        rep.inactive_max_diff = std::fmax(rep.inactive_max_diff, row.inactive_max_diff);
        rep.contact_l1 += tau * row.contact_l1;
        rep.rows.push_back(row);
    }
    rep.pass = rep.inactive_max_diff <= MultiplierReport::inactive_tol;
    return rep;
}

} // namespace ballvi
