#pragma once

// Reference solver: implicit Euler for the constrained flow, each step the
// variational inequality
//   <(u - u_prev)/tau - Delta u + delta u - f, w - u> >= 0   for all |w| <= 1,
// solved by projected block Gauss-Seidel in lexicographic node order. Every
// nodal update minimizes the step energy exactly over the local ball, so the
// energy is non-increasing sweep by sweep and the iterate stays feasible at
// all times. After convergence a verification pass checks the discrete
// complementarity conditions node by node: near-zero residual where the
// constraint is slack, residual anti-parallel to u with nonnegative factor
// where it binds. The recovered factor is the multiplier the penalized
// solver must reproduce in the small-epsilon limit.

#include <algorithm>
#include <cmath>

#include "ballvi/errors.hpp"
#include "ballvi/grid.hpp"
#include "ballvi/log.hpp"
#include "ballvi/scenario.hpp"
#include "ballvi/trajectory.hpp"

namespace ballvi {

struct ViSolveConfig {
    double tau = 0.0;          // 0 picks horizon / 200
    double pgs_tol = 1e-10;    // max nodal change per sweep
    int max_sweeps = 200000;   // per time step
    double contact_tol = 1e-6; // |u| >= 1 - contact_tol counts as contact
    double kkt_angle_tol = 1e-3;
    bool track_energy = true;
};

struct ViStepResult {
    int sweeps = 0;
    double max_change = 0.0;
    double max_energy_increase = 0.0;
    double max_inactive_residual = 0.0;
    double min_contact_mu = 0.0;
    double max_contact_angle = 0.0;
    int kkt_retries = 0;
    bool converged = false;
    bool kkt_ok = false;
};

namespace vi_detail {

inline double diag(const Grid& g, double tau, double delta) {
    double a = 1.0 / tau + delta + 2.0 / (g.hx * g.hx);
    if (g.dim == 2) a += 2.0 / (g.hy * g.hy);
    return a;
}

// Step energy over the constraint set; decreases under exact blockwise
// minimization, tracked as a solver invariant.
inline double step_energy(const Grid& g, double tau, double delta, const VectorField& u_prev,
                          const VectorField& f, const VectorField& v) {
    double e = 0.5 * grad_norm_sq(g, v);
    const double inv_tau = 1.0 / tau;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double w = g.weight(i, j);
            if (w == 0.0) continue;
            const int idx = g.index(i, j);
            const double* p = v.node(idx);
            const double* pp = u_prev.node(idx);
            const double* pf = f.node(idx);
            double dsq = 0.0, vsq = 0.0, lin = 0.0;
            for (int c = 0; c < v.n; ++c) {
                const double d = p[c] - pp[c];
                dsq += d * d;
                vsq += p[c] * p[c];
                lin += pf[c] * p[c];
            }
            e += w * (0.5 * inv_tau * dsq + 0.5 * delta * vsq - lin);
        }
    return e;
}

// One lexicographic sweep; returns the max euclidean nodal change.
inline double sweep(const Grid& g, double tau, double delta, const VectorField& u_prev,
                    const VectorField& f, VectorField& u) {
    const int n = u.n;
    const double inv_tau = 1.0 / tau;
    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = g.dim == 2 ? 1.0 / (g.hy * g.hy) : 0.0;
    const double a = inv_tau + delta + 2.0 * ax + 2.0 * ay;
    double max_change = 0.0;
    double rloc[8];
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (g.boundary(i, j)) continue;
            const int idx = g.index(i, j);
            const double* pf = f.node(idx);
            const double* pp = u_prev.node(idx);
            const double* uw = u.node(g.index(i - 1, j));
            const double* ue = u.node(g.index(i + 1, j));
            const double* us = g.dim == 2 ? u.node(g.index(i, j - 1)) : nullptr;
            const double* un = g.dim == 2 ? u.node(g.index(i, j + 1)) : nullptr;
            double vsq = 0.0;
            for (int c = 0; c < n; ++c) {
                double r = pf[c] + inv_tau * pp[c] + ax * (uw[c] + ue[c]);
                if (us) r += ay * (us[c] + un[c]);
                rloc[c] = r / a;
                vsq += rloc[c] * rloc[c];
            }
            if (vsq > 1.0) {
                const double inv = 1.0 / std::sqrt(vsq);
                for (int c = 0; c < n; ++c) rloc[c] *= inv;
            }
            double* p = u.node(idx);
            double csq = 0.0;
            for (int c = 0; c < n; ++c) {
                const double d = rloc[c] - p[c];
                csq += d * d;
                p[c] = rloc[c];
            }
            max_change = std::fmax(max_change, std::sqrt(csq));
        }
    return max_change;
}

// Complementarity verification on the converged iterate. The sweep updates
// each node after its earlier-ordered neighbors, so a converged sweep leaves
// every nodal residual below a few diagonal units times the change bound;
// the factor 8 covers the neighbor updates that happen later in the sweep.
inline bool kkt_check(const Grid& g, double tau, double delta, const ViSolveConfig& cfg,
                      const VectorField& u_prev, const VectorField& f, const VectorField& u,
                      ViStepResult& out) {
    const int n = u.n;
    const double inv_tau = 1.0 / tau;
    const double a = diag(g, tau, delta);
    const double lin_tol = 8.0 * a * cfg.pgs_tol;
    const double angle_floor = lin_tol / cfg.kkt_angle_tol;

    VectorField lap = laplacian_apply(g, u);
    out.max_inactive_residual = 0.0;
    out.min_contact_mu = 0.0;
    out.max_contact_angle = 0.0;
    bool ok = true;

    double res[8];
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (g.boundary(i, j)) continue;
            const int idx = g.index(i, j);
            const double* p = u.node(idx);
            const double* pp = u_prev.node(idx);
            const double* pf = f.node(idx);
            const double* pl = lap.node(idx);
            double rsq = 0.0, ru = 0.0, usq = 0.0;
            for (int c = 0; c < n; ++c) {
                res[c] = (inv_tau + delta) * p[c] + pl[c] - pf[c] - inv_tau * pp[c];
                rsq += res[c] * res[c];
                ru += res[c] * p[c];
                usq += p[c] * p[c];
            }
            const double rnorm = std::sqrt(rsq);
            const double unorm = std::sqrt(usq);
            if (unorm < 1.0 - cfg.contact_tol) {
                out.max_inactive_residual = std::fmax(out.max_inactive_residual, rnorm);
                if (rnorm > lin_tol) ok = false;
                continue;
            }
            const double mu = usq > 0.0 ? -ru / usq : 0.0;
            out.min_contact_mu = std::fmin(out.min_contact_mu, mu);
            if (mu < -lin_tol) ok = false;
            if (rnorm > angle_floor) {
                const double cosang = std::clamp(-ru / (rnorm * unorm), -1.0, 1.0);
                const double ang = std::acos(cosang);
                out.max_contact_angle = std::fmax(out.max_contact_angle, ang);
                if (ang > cfg.kkt_angle_tol) ok = false;
            }
        }
    return ok;
}

} // namespace vi_detail

// One constrained implicit Euler step. u is the warm start on entry and the
// converged feasible state on exit. Components beyond 8 per node would need
// the scratch arrays widened, which nothing here asks for.
inline ViStepResult vi_step(const Grid& g, double delta, const ViSolveConfig& cfg, double tau,
                            const VectorField& u_prev, const VectorField& f, VectorField& u) {
    if (u.n > 8) throw ConfigError("projection solver supports at most 8 components");
    ViStepResult result;
    double tol = cfg.pgs_tol;
    double energy =
        cfg.track_energy
            ? vi_detail::step_energy(g, tau, delta, u_prev, f, u)
            : 0.0;

    // Verification thresholds stay pinned to the configured tolerance; a
    // retry tightens only the sweep stop so the residuals actually shrink.
    for (int attempt = 0; attempt <= 2; ++attempt) {
        while (result.sweeps < cfg.max_sweeps) {
            const double change = vi_detail::sweep(g, tau, delta, u_prev, f, u);
            ++result.sweeps;
            result.max_change = change;
            if (cfg.track_energy) {
                const double next = vi_detail::step_energy(g, tau, delta, u_prev, f, u);
                result.max_energy_increase =
                    std::fmax(result.max_energy_increase, next - energy);
                energy = next;
            }
            if (change <= tol) break;
        }
        result.converged = result.max_change <= tol;
        if (!result.converged) return result;

        result.kkt_ok = vi_detail::kkt_check(g, tau, delta, cfg, u_prev, f, u, result);
        if (result.kkt_ok) return result;
        result.kkt_retries = attempt + 1;
        tol *= 1e-2;
        log_debug("vi_step: complementarity check failed, retrying with tol %.3e", tol);
    }
    return result;
}

// lambda = (r . u)/|u|^2 on the contact set with r = f - (u - u_prev)/tau
// + Delta u; elsewhere the constraint is slack and the factor is the floor
// delta exactly.
inline ScalarField recover_multiplier(const Grid& g, double delta, double tau, double contact_tol,
                                      const VectorField& u_prev, const VectorField& f,
                                      const VectorField& u) {
    ScalarField lam(g);
    VectorField lap = laplacian_apply(g, u);
    const double inv_tau = 1.0 / tau;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int idx = g.index(i, j);
            if (g.boundary(i, j)) {
                lam.v[idx] = delta;
                continue;
            }
            const double usq = node_abs_sq(u, idx);
            if (std::sqrt(usq) < 1.0 - contact_tol) {
                lam.v[idx] = delta;
                continue;
            }
            const double* p = u.node(idx);
            const double* pp = u_prev.node(idx);
            const double* pf = f.node(idx);
            const double* pl = lap.node(idx);
            double ru = 0.0;
            for (int c = 0; c < u.n; ++c)
                ru += (pf[c] - inv_tau * (p[c] - pp[c]) - pl[c]) * p[c];
            lam.v[idx] = ru / usq;
        }
    return lam;
}

struct ViRunResult {
    Trajectory traj;
    double max_energy_increase = 0.0;
    double max_feasibility_excess = 0.0; // max over time of (max |u| - 1)
    double max_inactive_residual = 0.0;
    double min_contact_mu = 0.0;
    // Space-time L1 of lambda and of (lambda - delta)(1 - |u|^2).
    double lambda_l1 = 0.0;
    double complementarity_l1 = 0.0;
    long total_sweeps = 0;
};

inline ViRunResult vi_run(const Scenario& sc, const ViSolveConfig& cfg, const ForceFn& force) {
    sc.check();
    const Grid g = sc.make_grid();
    const double delta = sc.penalty.delta;
    const double tau = cfg.tau > 0.0 ? cfg.tau : sc.horizon / 200.0;
    const int steps = (int)std::ceil(sc.horizon / tau - 1e-9);

    ViRunResult out;
    out.traj.tau = tau;
    out.traj.u0 = eval_initial(sc, g);
    out.traj.steps.reserve(steps);

    VectorField u_prev = out.traj.u0;
    VectorField u = u_prev;
    VectorField f(g, sc.components);

    for (int m = 1; m <= steps; ++m) {
        const double t = tau * m;
        force(g, t, f);
        const ViStepResult r = vi_step(g, delta, cfg, tau, u_prev, f, u);
        out.total_sweeps += r.sweeps;
        if (!r.converged)
            throw SolverError("projection step did not converge within the sweep budget", m,
                              r.max_change);
        if (!r.kkt_ok)
            throw SolverError("projection step failed the complementarity verification", m,
                              r.max_inactive_residual);
        out.max_energy_increase = std::fmax(out.max_energy_increase, r.max_energy_increase);
        out.max_inactive_residual =
            std::fmax(out.max_inactive_residual, r.max_inactive_residual);
        out.min_contact_mu = std::fmin(out.min_contact_mu, r.min_contact_mu);
        out.max_feasibility_excess =
            std::fmax(out.max_feasibility_excess, max_node_abs(u, g) - 1.0);

        TrajectoryStep st;
        st.t = t;
        st.u = u;
        st.lambda = recover_multiplier(g, delta, tau, cfg.contact_tol, u_prev, f, u);
        st.iterations = r.sweeps;
        st.residual = r.max_change;

        double lam_sum = 0.0, comp_sum = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double w = g.weight(i, j);
                if (w == 0.0) continue;
                const int idx = g.index(i, j);
                lam_sum += w * st.lambda.v[idx];
                comp_sum += w * std::fabs((st.lambda.v[idx] - delta) *
                                          (1.0 - node_abs_sq(u, idx)));
            }
        out.lambda_l1 += tau * lam_sum;
        out.complementarity_l1 += tau * comp_sum;

        out.traj.steps.push_back(std::move(st));
        u_prev = u;
        log_debug("vi_run: step %d/%d sweeps=%d change=%.3e", m, steps, r.sweeps, r.max_change);
    }
    return out;
}

inline ViRunResult vi_run(const Scenario& sc, const ViSolveConfig& cfg) {
    return vi_run(sc, cfg, make_force_fn(sc));
}

} // namespace ballvi
