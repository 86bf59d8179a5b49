#pragma once

// Command implementations behind the ballvi binary. Each command loads a
// JSON config, runs the requested computation, writes its files into the
// output directory, and prints a summary table to stdout. All output is
// deterministic: rerunning a command with the same config and seed produces
// byte-identical files and stdout.
//
// Exit codes: 0 success, 1 config or usage error, 2 solver failure,
// 3 a verification (audit, study, or spot check) did not pass. Config and
// solver errors leave as exceptions for the frontend to map.

#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ballvi/audit.hpp"
#include "ballvi/config.hpp"
#include "ballvi/errors.hpp"
#include "ballvi/experiments.hpp"
#include "ballvi/log.hpp"
#include "ballvi/report_io.hpp"
#include "ballvi/solver_pen.hpp"
#include "ballvi/solver_vi.hpp"

namespace ballvi {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    int threads = 0; // accepted for interface stability; kernels run sequentially
    unsigned long long seed = 0;
};

namespace cli_detail {

inline std::string snapshot_name(const char* prefix, int m) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%06d.csv", prefix, m);
    return buf;
}

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

inline void write_trajectory_files(const Grid& g, const Trajectory& traj,
                                   const std::filesystem::path& dir) {
    {
        std::ostringstream os;
        write_csv(g, traj.u0, os);
        write_file(dir / snapshot_name("u", 0), os.str());
    }
    for (int m = 0; m < traj.step_count(); ++m) {
        std::ostringstream os;
        write_csv(g, traj.steps[m].u, os);
        write_file(dir / snapshot_name("u", m + 1), os.str());
        std::ostringstream ls;
        write_csv(g, traj.steps[m].lambda, ls);
        write_file(dir / snapshot_name("lambda", m + 1), ls.str());
    }
}

inline void print_step_table(const Trajectory& traj) {
    std::cout << "step,t,iterations,residual\n";
    for (int m = 0; m < traj.step_count(); ++m) {
        const TrajectoryStep& st = traj.steps[m];
        std::cout << (m + 1) << ',' << fmt17(st.t) << ',' << st.iterations << ','
                  << fmt17(st.residual) << "\n";
    }
}

inline void print_audit_table(const EstimateReport& rep) {
    std::cout << "record,p,measured,bound,status\n";
    for (const EstimateRecord& r : rep.records) {
        std::cout << r.name << ',';
        if (r.p > 0) std::cout << r.p;
        std::cout << ',' << fmt17(r.measured) << ',' << fmt17(r.bound) << ','
                  << (r.pass ? "pass" : "FAIL") << "\n";
    }
    std::cout << "audit: " << (rep.all_pass ? "PASS" : "FAIL") << "\n";
}

inline void manifest_common(JsonWriter& w, const char* command, const RunConfig& cfg,
                            const CliOptions& opt, double tau, int steps) {
    const Scenario& sc = cfg.scenario;
    w.field("command", command);
    w.field("scenario", sc.name);
    w.begin_object("grid");
    w.field("dim", sc.dim);
    w.field("nx", sc.nx);
    if (sc.dim == 2) w.field("ny", sc.ny);
    w.field("lx", sc.lx);
    if (sc.dim == 2) w.field("ly", sc.ly);
    w.end_object();
    w.field("components", sc.components);
    w.field("horizon", sc.horizon);
    w.field("tau", tau);
    w.field("steps", steps);
    w.begin_object("penalty");
    w.field("epsilon", sc.penalty.epsilon);
    w.field("delta", sc.penalty.delta);
    w.field("delta0", sc.penalty.delta0);
    w.end_object();
    w.field("threads", opt.threads);
    w.field("seed", (long)opt.seed);
    w.begin_object("outputs");
    w.field("snapshots", steps + 1);
    w.field("multipliers", steps);
    w.field("snapshot_pattern", "u_%06d.csv");
    w.field("multiplier_pattern", "lambda_%06d.csv");
    w.end_object();
}

// Random feasible test fields for the variational spot check: componentwise
// uniform in [-1, 1], projected onto the ball, zero trace.
inline std::vector<VectorField> spot_fields(const Grid& g, int n, int count,
                                            unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<VectorField> out;
    out.reserve(count);
    for (int s = 0; s < count; ++s) {
        VectorField w(g, n);
        for (double& v : w.v) v = dist(rng);
        project_ball(w);
        linsolve_detail::zero_boundary(g, w);
        out.push_back(std::move(w));
    }
    return out;
}

struct SpotCheck {
    int samples = 0;
    double min_pairing = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

// <(u - u_prev)/tau - Delta u + delta u - f, w - u> must be nonnegative for
// every feasible w, up to the converged solver's residual scale.
inline SpotCheck vi_spot_check(const Grid& g, const Scenario& sc, const Trajectory& traj,
                               const ForceFn& force, const ViSolveConfig& vi_cfg,
                               unsigned long long seed, int samples) {
    SpotCheck sp;
    sp.samples = samples;
    const std::vector<VectorField> ws = spot_fields(g, sc.components, samples, seed);
    const double tau = traj.tau;
    const double inv_tau = 1.0 / tau;
    const double delta = sc.penalty.delta;

    VectorField f(g, sc.components), res(g, sc.components), diff(g, sc.components);
    const VectorField* prev = &traj.u0;
    double max_abs = 0.0;
    for (const TrajectoryStep& st : traj.steps) {
        force(g, st.t, f);
        laplacian_apply(g, st.u, res);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (g.boundary(i, j)) continue;
                const int idx = g.index(i, j);
                double* r = res.node(idx);
                const double* p = st.u.node(idx);
                const double* pp = prev->node(idx);
                const double* pf = f.node(idx);
                for (int c = 0; c < sc.components; ++c)
                    r[c] += inv_tau * (p[c] - pp[c]) + delta * p[c] - pf[c];
            }
        for (const VectorField& w : ws) {
            for (std::size_t q = 0; q < diff.v.size(); ++q) diff.v[q] = w.v[q] - st.u.v[q];
            const double pairing = weighted_dot(g, res, diff);
            sp.min_pairing = std::fmin(sp.min_pairing, pairing);
            max_abs = std::fmax(max_abs, std::fabs(pairing));
        }
        prev = &st.u;
    }
    // Residual scale: the sweep stop bounds each nodal residual by a few
    // diagonal units of the change tolerance; pairing errors integrate that.
    const double a = vi_detail::diag(g, tau, delta);
    sp.tolerance = 16.0 * a * vi_cfg.pgs_tol * g.measure() + 1e-12 * std::max(1.0, max_abs);
    sp.pass = sp.min_pairing >= -sp.tolerance;
    return sp;
}

} // namespace cli_detail

inline int cmd_run_pen(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    const Scenario& sc = cfg.scenario;
    const std::filesystem::path dir = cli_detail::prepare_out_dir(opt.out_dir);

    const PenRunResult run = pen_run(sc, cfg.pen);
    const Grid g = sc.make_grid();
    const int steps = run.traj.step_count();

    std::cout << "run-pen scenario=" << sc.name << " steps=" << steps
              << " tau=" << fmt17(run.traj.tau) << "\n";
    cli_detail::print_step_table(run.traj);

    const EstimateReport rep = audit_run(sc, run.traj, cfg.p_list, cfg.audit_slack);
    cli_detail::print_audit_table(rep);
    std::cout << "totals outer=" << run.total_outer << " cg=" << run.total_cg << "\n";

    cli_detail::write_trajectory_files(g, run.traj, dir);

    JsonWriter aw;
    aw.begin_object();
    aw.field("scenario", sc.name);
    aw.field("kind", "run-pen");
    append_estimate_records(aw, rep);
    aw.end_object();
    write_file(dir / "audit.json", std::move(aw).take() + "\n");

    JsonWriter mw;
    mw.begin_object();
    cli_detail::manifest_common(mw, "run-pen", cfg, opt, run.traj.tau, steps);
    mw.begin_object("totals");
    mw.field("outer_iterations", run.total_outer);
    mw.field("cg_iterations", run.total_cg);
    mw.end_object();
    mw.begin_object("energy_identity");
    mw.field("gap", run.energy_gap);
    mw.field("scale", run.energy_scale);
    mw.end_object();
    mw.begin_object("constraint");
    mw.field("violation_l1", run.constraint_violation_l1);
    mw.field("khat_l1", run.khat_l1);
    mw.end_object();
    mw.field("audit_pass", rep.all_pass);
    mw.end_object();
    write_file(dir / "manifest.json", std::move(mw).take() + "\n");

    return rep.all_pass ? 0 : 3;
}

inline int cmd_run_vi(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    const Scenario& sc = cfg.scenario;
    const std::filesystem::path dir = cli_detail::prepare_out_dir(opt.out_dir);

    const ViRunResult run = vi_run(sc, cfg.vi);
    const Grid g = sc.make_grid();
    const int steps = run.traj.step_count();

    std::cout << "run-vi scenario=" << sc.name << " steps=" << steps
              << " tau=" << fmt17(run.traj.tau) << "\n";
    cli_detail::print_step_table(run.traj);

    const EstimateReport rep = audit_run(sc, run.traj, cfg.p_list, cfg.audit_slack);
    cli_detail::print_audit_table(rep);

    const cli_detail::SpotCheck sp =
        cli_detail::vi_spot_check(g, sc, run.traj, make_force_fn(sc), cfg.vi, opt.seed, 16);
    std::cout << "spot-check samples=" << sp.samples << " min_pairing=" << fmt17(sp.min_pairing)
              << " status=" << (sp.pass ? "pass" : "FAIL") << "\n";
    std::cout << "totals sweeps=" << run.total_sweeps << "\n";

    cli_detail::write_trajectory_files(g, run.traj, dir);

    JsonWriter aw;
    aw.begin_object();
    aw.field("scenario", sc.name);
    aw.field("kind", "run-vi");
    append_estimate_records(aw, rep);
    aw.end_object();
    write_file(dir / "audit.json", std::move(aw).take() + "\n");

    JsonWriter mw;
    mw.begin_object();
    cli_detail::manifest_common(mw, "run-vi", cfg, opt, run.traj.tau, steps);
    mw.begin_object("totals");
    mw.field("sweeps", run.total_sweeps);
    mw.end_object();
    mw.begin_object("solver_checks");
    mw.field("max_energy_increase", run.max_energy_increase);
    mw.field("max_feasibility_excess", run.max_feasibility_excess);
    mw.field("max_inactive_residual", run.max_inactive_residual);
    mw.field("min_contact_mu", run.min_contact_mu);
    mw.field("lambda_l1", run.lambda_l1);
    mw.field("complementarity_l1", run.complementarity_l1);
    mw.end_object();
    mw.begin_object("spot_check");
    mw.field("seed", (long)opt.seed);
    mw.field("samples", sp.samples);
    mw.field("min_pairing", sp.min_pairing);
    mw.field("tolerance", sp.tolerance);
    mw.field("pass", sp.pass);
    mw.end_object();
    mw.field("audit_pass", rep.all_pass);
    mw.end_object();
    write_file(dir / "manifest.json", std::move(mw).take() + "\n");

    return (rep.all_pass && sp.pass) ? 0 : 3;
}

namespace cli_detail {

inline int run_epsilon_study(const RunConfig& cfg, const std::filesystem::path& dir) {
    const EpsilonStudyResult res = epsilon_study(cfg.scenario, cfg.pen, cfg.vi,
                                                 cfg.study.eps_list, cfg.p_list, cfg.audit_slack);
    std::ostringstream csv;
    csv << "epsilon,err_l2,violation_l1,complementarity_l1";
    for (int p : res.p_list) csv << ",k_l" << p << ",k_l" << p << "_bound";
    csv << ",bounds_pass\n";
    for (const EpsilonRow& r : res.rows) {
        csv << fmt17(r.epsilon) << ',' << fmt17(r.err_l2) << ',' << fmt17(r.violation_l1) << ','
            << fmt17(r.complementarity_l1);
        for (std::size_t i = 0; i < r.k_lp.size(); ++i)
            csv << ',' << fmt17(r.k_lp[i]) << ',' << fmt17(r.k_lp_bound[i]);
        csv << ',' << (r.bounds_pass ? "true" : "false") << "\n";
    }
    write_file(dir / "study.csv", csv.str());
    std::cout << csv.str();

    JsonWriter w;
    w.begin_object();
    w.field("command", "study");
    w.field("type", "epsilon");
    w.field("scenario", cfg.scenario.name);
    w.begin_array("p_list");
    for (int p : res.p_list) w.elem(p);
    w.end_array();
    w.begin_array("rows");
    for (const EpsilonRow& r : res.rows) {
        w.elem_object();
        w.field("epsilon", r.epsilon);
        w.field("err_l2", r.err_l2);
        w.field("violation_l1", r.violation_l1);
        w.field("complementarity_l1", r.complementarity_l1);
        w.begin_array("k_lp");
        for (std::size_t i = 0; i < r.k_lp.size(); ++i) {
            w.elem_object();
            w.field("p", res.p_list[i]);
            w.field("measured", r.k_lp[i]);
            w.field("bound", r.k_lp_bound[i]);
            w.end_object();
        }
        w.end_array();
        w.field("bounds_pass", r.bounds_pass);
        w.end_object();
    }
    w.end_array();
    w.begin_object("checks");
    w.field("err_monotone", res.err_monotone);
    w.field("complementarity_shrinks", res.complementarity_shrinks);
    w.field("bounds_pass", res.bounds_pass);
    w.end_object();
    w.field("pass", res.pass());
    w.end_object();
    write_file(dir / "study.json", std::move(w).take() + "\n");

    std::cout << "study: " << (res.pass() ? "PASS" : "FAIL") << "\n";
    return res.pass() ? 0 : 3;
}

inline int run_dependence_study(const RunConfig& cfg, const std::filesystem::path& dir) {
    const DependenceStudyResult res =
        dependence_study(cfg.scenario, cfg.pen, cfg.study.n_list, cfg.audit_slack);
    std::ostringstream csv;
    csv << "n,lhs_final,rhs_final,max_ratio,n_sq_lhs,pass\n";
    for (const DependenceRow& r : res.rows)
        csv << r.n << ',' << fmt17(r.lhs_final) << ',' << fmt17(r.rhs_final) << ','
            << fmt17(r.max_ratio) << ',' << fmt17(r.n_sq_lhs) << ','
            << (r.pass ? "true" : "false") << "\n";
    write_file(dir / "study.csv", csv.str());
    std::cout << csv.str();

    JsonWriter w;
    w.begin_object();
    w.field("command", "study");
    w.field("type", "dependence");
    w.field("scenario", cfg.scenario.name);
    w.begin_array("rows");
    for (const DependenceRow& r : res.rows) {
        w.elem_object();
        w.field("n", r.n);
        w.field("lhs_final", r.lhs_final);
        w.field("rhs_final", r.rhs_final);
        w.field("max_ratio", r.max_ratio);
        w.field("n_sq_lhs", r.n_sq_lhs);
        w.field("pass", r.pass);
        w.end_object();
    }
    w.end_array();
    w.field("scaling_spread", res.scaling_spread);
    w.begin_object("checks");
    w.field("inequality_pass", res.inequality_pass);
    w.field("scaling_pass", res.scaling_pass);
    w.end_object();
    w.field("pass", res.pass());
    w.end_object();
    write_file(dir / "study.json", std::move(w).take() + "\n");

    std::cout << "study: " << (res.pass() ? "PASS" : "FAIL") << "\n";
    return res.pass() ? 0 : 3;
}

inline int run_multiplier_study(const RunConfig& cfg, const std::filesystem::path& dir) {
    const MultiplierReport res = multiplier_check(cfg.scenario, cfg.pen, cfg.vi);
    std::ostringstream csv;
    csv << "step,t,inactive_max_diff,contact_l1,contact_measure,mixed_measure\n";
    for (const MultiplierRow& r : res.rows)
        csv << r.step << ',' << fmt17(r.t) << ',' << fmt17(r.inactive_max_diff) << ','
            << fmt17(r.contact_l1) << ',' << fmt17(r.contact_measure) << ','
            << fmt17(r.mixed_measure) << "\n";
    write_file(dir / "study.csv", csv.str());
    std::cout << csv.str();

    JsonWriter w;
    w.begin_object();
    w.field("command", "study");
    w.field("type", "multiplier");
    w.field("scenario", cfg.scenario.name);
    w.field("inactive_max_diff", res.inactive_max_diff);
    w.field("inactive_tol", MultiplierReport::inactive_tol);
    w.field("contact_l1", res.contact_l1);
    w.field("steps", (int)res.rows.size());
    w.field("pass", res.pass);
    w.end_object();
    write_file(dir / "study.json", std::move(w).take() + "\n");

    std::cout << "study: " << (res.pass ? "PASS" : "FAIL") << "\n";
    return res.pass ? 0 : 3;
}

} // namespace cli_detail

inline int cmd_study(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt.config_path);
    if (!cfg.has_study)
        throw ConfigError("the study command needs a 'study' section in the config");
    const std::filesystem::path dir = cli_detail::prepare_out_dir(opt.out_dir);
    switch (cfg.study.type) {
    case StudyType::epsilon: return cli_detail::run_epsilon_study(cfg, dir);
    case StudyType::dependence: return cli_detail::run_dependence_study(cfg, dir);
    case StudyType::multiplier: return cli_detail::run_multiplier_study(cfg, dir);
    }
    return 1;
}

} // namespace ballvi
