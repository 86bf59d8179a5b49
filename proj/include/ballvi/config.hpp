#pragma once

// JSON config loading. Parsing is strict: unknown keys are rejected with
// their full path, wrong types name the offending key, and every numeric
// range the solvers rely on is validated here so the library never sees an
// inconsistent setup. See README.md for the schema.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ballvi/errors.hpp"
#include "ballvi/expr.hpp"
#include "ballvi/scenario.hpp"
#include "ballvi/solver_pen.hpp"
#include "ballvi/solver_vi.hpp"

namespace ballvi {

enum class StudyType { epsilon, dependence, multiplier };

struct StudyConfig {
    StudyType type = StudyType::epsilon;
    std::vector<double> eps_list;
    std::vector<int> n_list;
};

struct RunConfig {
    Scenario scenario;
    PenSolveConfig pen;
    ViSolveConfig vi;
    std::vector<int> p_list{2, 4};
    double audit_slack = 0.02;
    bool has_study = false;
    StudyConfig study;
};

namespace config_detail {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown key '" + join(path, it.key()) + "'");
    }
}

inline const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline double get_double(const json& obj, const std::string& path, const char* key,
                         double fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError("'" + join(path, key) + "' must be a number");
    return v->get<double>();
}

inline double require_double(const json& obj, const std::string& path, const char* key) {
    const json* v = find(obj, key);
    if (!v) throw ConfigError("missing required key '" + join(path, key) + "'");
    if (!v->is_number()) throw ConfigError("'" + join(path, key) + "' must be a number");
    return v->get<double>();
}

inline int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError("'" + join(path, key) + "' must be an integer");
    return v->get<int>();
}

inline int require_int(const json& obj, const std::string& path, const char* key) {
    const json* v = find(obj, key);
    if (!v) throw ConfigError("missing required key '" + join(path, key) + "'");
    if (!v->is_number_integer()) throw ConfigError("'" + join(path, key) + "' must be an integer");
    return v->get<int>();
}

inline bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError("'" + join(path, key) + "' must be a boolean");
    return v->get<bool>();
}

inline std::string get_string(const json& obj, const std::string& path, const char* key,
                              const std::string& fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError("'" + join(path, key) + "' must be a string");
    return v->get<std::string>();
}

inline std::vector<Expr> parse_expr_list(const json& obj, const std::string& path,
                                         const char* key, bool required) {
    const json* v = find(obj, key);
    if (!v) {
        if (required) throw ConfigError("missing required key '" + join(path, key) + "'");
        return {};
    }
    if (!v->is_array() || v->empty())
        throw ConfigError("'" + join(path, key) + "' must be a nonempty array of strings");
    std::vector<Expr> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
        const json& e = (*v)[i];
        if (!e.is_string())
            throw ConfigError("'" + join(path, key) + "[" + std::to_string(i) +
                              "]' must be a string");
        try {
            out.push_back(parse_expr(e.get<std::string>()));
        } catch (const ExprError& err) {
            throw ConfigError("'" + join(path, key) + "[" + std::to_string(i) + "]': " +
                              err.what());
        }
    }
    return out;
}

} // namespace config_detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using namespace config_detail;
    if (!j.is_object()) throw ConfigError("config root must be an object");
    reject_unknown(j, "",
                   {"name", "grid", "components", "horizon", "force", "initial", "perturbation",
                    "penalty", "solver", "audit", "study"});

    RunConfig cfg;
    Scenario& sc = cfg.scenario;
    sc.name = get_string(j, "", "name", "config");

    const json* grid = find(j, "grid");
    if (!grid) throw ConfigError("missing required key 'grid'");
    if (!grid->is_object()) throw ConfigError("'grid' must be an object");
    reject_unknown(*grid, "grid", {"dim", "nx", "ny", "lx", "ly"});
    sc.dim = require_int(*grid, "grid", "dim");
    if (sc.dim != 1 && sc.dim != 2) throw ConfigError("'grid.dim' must be 1 or 2");
    sc.nx = require_int(*grid, "grid", "nx");
    sc.lx = get_double(*grid, "grid", "lx", 1.0);
    if (sc.dim == 2) {
        sc.ny = require_int(*grid, "grid", "ny");
        sc.ly = get_double(*grid, "grid", "ly", 1.0);
    } else {
        if (find(*grid, "ny") || find(*grid, "ly"))
            throw ConfigError("'grid.ny'/'grid.ly' only apply to dim 2");
        sc.ny = 1;
        sc.ly = 0.0;
    }
    if (sc.nx < 3 || (sc.dim == 2 && sc.ny < 3))
        throw ConfigError("'grid' needs at least 3 nodes per axis");
    if (!(sc.lx > 0.0) || (sc.dim == 2 && !(sc.ly > 0.0)))
        throw ConfigError("'grid' extents must be positive");

    sc.horizon = get_double(j, "", "horizon", 1.0);
    if (!(sc.horizon > 0.0)) throw ConfigError("'horizon' must be positive");

    sc.force = parse_expr_list(j, "", "force", true);
    sc.initial = parse_expr_list(j, "", "initial", true);
    sc.perturbation = parse_expr_list(j, "", "perturbation", false);

    sc.components = get_int(j, "", "components", (int)sc.force.size());
    if (sc.components < 1 || sc.components > 8)
        throw ConfigError("'components' must be between 1 and 8");
    if ((int)sc.force.size() != sc.components)
        throw ConfigError("'force' must list one expression per component");
    if ((int)sc.initial.size() != sc.components)
        throw ConfigError("'initial' must list one expression per component");
    if (!sc.perturbation.empty() && (int)sc.perturbation.size() != sc.components)
        throw ConfigError("'perturbation' must list one expression per component");

    const json* pen = find(j, "penalty");
    if (!pen) throw ConfigError("missing required key 'penalty'");
    if (!pen->is_object()) throw ConfigError("'penalty' must be an object");
    reject_unknown(*pen, "penalty", {"epsilon", "delta", "delta0"});
    sc.penalty.epsilon = require_double(*pen, "penalty", "epsilon");
    if (!(sc.penalty.epsilon > 0.0) || sc.penalty.epsilon > 1.0)
        throw ConfigError("'penalty.epsilon' must lie in (0, 1]");
    sc.penalty.delta = get_double(*pen, "penalty", "delta", 0.0);
    if (!(sc.penalty.delta >= 0.0)) throw ConfigError("'penalty.delta' must be nonnegative");
    sc.penalty.delta0 = get_double(*pen, "penalty", "delta0", 1.0);
    if (!(sc.penalty.delta0 >= sc.penalty.delta))
        throw ConfigError("'penalty.delta0' must be >= penalty.delta");

    if (const json* sol = find(j, "solver")) {
        if (!sol->is_object()) throw ConfigError("'solver' must be an object");
        reject_unknown(*sol, "solver",
                       {"tau", "fixed_point_tol", "cg_tol", "theta", "max_outer", "max_cg",
                        "use_jacobi", "pgs_tol", "max_sweeps", "contact_tol", "kkt_angle_tol",
                        "track_energy"});
        const double tau = get_double(*sol, "solver", "tau", 0.0);
        if (tau < 0.0 || (tau > 0.0 && tau > sc.horizon))
            throw ConfigError("'solver.tau' must lie in (0, horizon] (or 0 for the default)");
        cfg.pen.tau = tau;
        cfg.vi.tau = tau;
        cfg.pen.fixed_point_tol = get_double(*sol, "solver", "fixed_point_tol", 1e-8);
        cfg.pen.cg_tol = get_double(*sol, "solver", "cg_tol", 1e-10);
        cfg.pen.theta = get_double(*sol, "solver", "theta", 1.0);
        cfg.pen.max_outer = get_int(*sol, "solver", "max_outer", 200);
        cfg.pen.max_cg = get_int(*sol, "solver", "max_cg", 0);
        cfg.pen.use_jacobi = get_bool(*sol, "solver", "use_jacobi", true);
        cfg.vi.pgs_tol = get_double(*sol, "solver", "pgs_tol", 1e-10);
        cfg.vi.max_sweeps = get_int(*sol, "solver", "max_sweeps", 200000);
        cfg.vi.contact_tol = get_double(*sol, "solver", "contact_tol", 1e-6);
        cfg.vi.kkt_angle_tol = get_double(*sol, "solver", "kkt_angle_tol", 1e-3);
        cfg.vi.track_energy = get_bool(*sol, "solver", "track_energy", true);
        if (!(cfg.pen.fixed_point_tol > 0.0) || !(cfg.pen.cg_tol > 0.0) ||
            !(cfg.vi.pgs_tol > 0.0))
            throw ConfigError("solver tolerances must be positive");
        if (!(cfg.pen.theta > 0.0) || cfg.pen.theta > 1.0)
            throw ConfigError("'solver.theta' must lie in (0, 1]");
        if (cfg.pen.max_outer < 1 || cfg.vi.max_sweeps < 1)
            throw ConfigError("solver iteration budgets must be positive");
        if (!(cfg.vi.contact_tol > 0.0) || cfg.vi.contact_tol >= 1.0)
            throw ConfigError("'solver.contact_tol' must lie in (0, 1)");
        if (!(cfg.vi.kkt_angle_tol > 0.0))
            throw ConfigError("'solver.kkt_angle_tol' must be positive");
    }

    if (const json* audit = find(j, "audit")) {
        if (!audit->is_object()) throw ConfigError("'audit' must be an object");
        reject_unknown(*audit, "audit", {"p_list", "slack"});
        if (const json* pl = find(*audit, "p_list")) {
            if (!pl->is_array() || pl->empty())
                throw ConfigError("'audit.p_list' must be a nonempty array of integers");
            cfg.p_list.clear();
            for (const auto& e : *pl) {
                if (!e.is_number_integer() || e.get<int>() < 1)
                    throw ConfigError("'audit.p_list' entries must be integers >= 1");
                cfg.p_list.push_back(e.get<int>());
            }
        }
        cfg.audit_slack = get_double(*audit, "audit", "slack", 0.02);
        if (!(cfg.audit_slack >= 0.0)) throw ConfigError("'audit.slack' must be nonnegative");
    }

    if (const json* study = find(j, "study")) {
        if (!study->is_object()) throw ConfigError("'study' must be an object");
        reject_unknown(*study, "study", {"type", "eps_list", "n_list"});
        cfg.has_study = true;
        const std::string type = get_string(*study, "study", "type", "");
        if (type == "epsilon")
            cfg.study.type = StudyType::epsilon;
        else if (type == "dependence")
            cfg.study.type = StudyType::dependence;
        else if (type == "multiplier")
            cfg.study.type = StudyType::multiplier;
        else
            throw ConfigError("'study.type' must be one of epsilon, dependence, multiplier");

        if (const json* el = find(*study, "eps_list")) {
            if (!el->is_array() || el->empty())
                throw ConfigError("'study.eps_list' must be a nonempty array of numbers");
            for (const auto& e : *el) {
                if (!e.is_number()) throw ConfigError("'study.eps_list' entries must be numbers");
                cfg.study.eps_list.push_back(e.get<double>());
            }
            for (double e : cfg.study.eps_list)
                if (!(e > 0.0) || e > 1.0)
                    throw ConfigError("'study.eps_list' entries must lie in (0, 1]");
            for (std::size_t i = 1; i < cfg.study.eps_list.size(); ++i)
                if (!(cfg.study.eps_list[i] < cfg.study.eps_list[i - 1]))
                    throw ConfigError("'study.eps_list' must be strictly decreasing");
        }
        if (const json* nl = find(*study, "n_list")) {
            if (!nl->is_array() || nl->empty())
                throw ConfigError("'study.n_list' must be a nonempty array of integers");
            for (const auto& e : *nl) {
                if (!e.is_number_integer() || e.get<int>() < 1)
                    throw ConfigError("'study.n_list' entries must be positive integers");
                cfg.study.n_list.push_back(e.get<int>());
            }
        }
        if (cfg.study.type == StudyType::epsilon && cfg.study.eps_list.empty())
            throw ConfigError("'study.eps_list' is required for an epsilon study");
        if (cfg.study.type == StudyType::dependence) {
            if (cfg.study.n_list.empty())
                throw ConfigError("'study.n_list' is required for a dependence study");
            if (sc.perturbation.empty())
                throw ConfigError("a dependence study requires 'perturbation'");
        }
    }

    sc.check();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

} // namespace ballvi
