#pragma once

// Problem setup: grid geometry, penalty parameters, horizon, and the data
// functions f(x,t) and u0(x) given per component as expression strings.
// shipped_scenarios() returns the catalog used by the test suite and the
// bundled config files.

#include <functional>
#include <string>
#include <vector>

#include "ballvi/errors.hpp"
#include "ballvi/expr.hpp"
#include "ballvi/grid.hpp"
#include "ballvi/penalty.hpp"

namespace ballvi {

// Volume force supplied as a callback: fill `out` with f(., t).
using ForceFn = std::function<void(const Grid&, double, VectorField&)>;

struct Scenario {
    std::string name;

    int dim = 1;
    int nx = 129;
    int ny = 1;
    double lx = 1.0;
    double ly = 1.0;

    int components = 2;
    double horizon = 1.0;

    PenaltyParams penalty;

    std::vector<Expr> force;        // size == components
    std::vector<Expr> initial;      // size == components
    std::vector<Expr> perturbation; // empty, or size == components

    Grid make_grid() const {
        return dim == 1 ? Grid::make_1d(lx, nx) : Grid::make_2d(lx, ly, nx, ny);
    }

    void check() const {
        try {
            ballvi::validate(penalty);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("scenario '" + name + "': " + e.what());
        }
        if (components < 1) throw ConfigError("scenario '" + name + "': components must be >= 1");
        if (!(horizon > 0.0)) throw ConfigError("scenario '" + name + "': horizon must be > 0");
        if ((int)force.size() != components)
            throw ConfigError("scenario '" + name + "': force needs one expression per component");
        if ((int)initial.size() != components)
            throw ConfigError("scenario '" + name + "': initial needs one expression per component");
        if (!perturbation.empty() && (int)perturbation.size() != components)
            throw ConfigError("scenario '" + name +
                              "': perturbation needs one expression per component");
    }
};

inline void eval_expressions(const Grid& g, const std::vector<Expr>& exprs, double t,
                             VectorField& out) {
    const int n = (int)exprs.size();
    if (out.n != n || (int)out.v.size() != n * g.node_count()) out = VectorField(g, n);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int idx = g.index(i, j);
            double* p = out.node(idx);
            const double x = g.x(i);
            const double y = g.dim == 2 ? g.y(j) : 0.0;
            for (int c = 0; c < n; ++c) p[c] = exprs[c].eval(x, y, t);
        }
}

inline void eval_force(const Scenario& sc, const Grid& g, double t, VectorField& out) {
    eval_expressions(g, sc.force, t, out);
}

inline ForceFn make_force_fn(const Scenario& sc) {
    return [&sc](const Grid& g, double t, VectorField& out) { eval_force(sc, g, t, out); };
}

// Initial state. The continuous problem wants u0 feasible with zero trace, so
// tiny violations from rounding in the expressions are repaired: boundary
// values below 1e-12 snap to zero, interior magnitudes up to 1 + 1e-12 are
// projected onto the unit ball. Anything larger is a config error.
inline VectorField eval_initial(const Scenario& sc, const Grid& g) {
    VectorField u0(g, sc.components);
    eval_expressions(g, sc.initial, 0.0, u0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int idx = g.index(i, j);
            double* p = u0.node(idx);
            if (g.boundary(i, j)) {
                for (int c = 0; c < sc.components; ++c) {
                    if (std::abs(p[c]) > 1e-12)
                        throw ConfigError("scenario '" + sc.name +
                                          "': initial state must vanish on the boundary");
                    p[c] = 0.0;
                }
                continue;
            }
            const double mag = node_abs(u0, idx);
            if (mag > 1.0 + 1e-12)
                throw ConfigError("scenario '" + sc.name +
                                  "': initial state leaves the unit ball");
            if (mag > 1.0) {
                const double s = 1.0 / mag;
                for (int c = 0; c < sc.components; ++c) p[c] *= s;
            }
        }
    return u0;
}

namespace scenario_detail {

inline std::vector<Expr> exprs(std::initializer_list<const char*> sources) {
    std::vector<Expr> out;
    for (const char* s : sources) out.push_back(parse_expr(s));
    return out;
}

} // namespace scenario_detail

// Catalog of the scenarios exercised by the bundled configs and tests.
//   inactive-1d     constraint never active: the penalty, projection, and
//                   plain linear time stepping must all coincide.
//   saturating-1d   force strong enough to push a contact interval.
//   rotating-2d     rotating force direction, moderate saturation.
//   dependence-base moderate force plus a bounded perturbation profile for
//                   the data-dependence sweep.
//   saturating-2d   strong constant force, wide 2d contact set.
inline std::vector<Scenario> shipped_scenarios() {
    using scenario_detail::exprs;
    std::vector<Scenario> all;

    {
        Scenario sc;
        sc.name = "inactive-1d";
        sc.dim = 1;
        sc.nx = 129;
        sc.lx = 1.0;
        sc.components = 2;
        sc.horizon = 1.0;
        sc.penalty.delta = 0.1;
        sc.penalty.delta0 = 1.0;
        sc.force = exprs({"0.5", "0"});
        sc.initial = exprs({"0", "0"});
        all.push_back(std::move(sc));
    }
    {
        Scenario sc;
        sc.name = "saturating-1d";
        sc.dim = 1;
        sc.nx = 129;
        sc.lx = 1.0;
        sc.components = 2;
        sc.horizon = 1.0;
        sc.penalty.delta = 0.0;
        sc.penalty.delta0 = 1.0;
        sc.force = exprs({"9", "0"});
        sc.initial = exprs({"0", "0"});
        all.push_back(std::move(sc));
    }
    {
        Scenario sc;
        sc.name = "rotating-2d";
        sc.dim = 2;
        sc.nx = 65;
        sc.ny = 65;
        sc.lx = 1.0;
        sc.ly = 1.0;
        sc.components = 2;
        sc.horizon = 1.0;
        sc.penalty.delta = 0.05;
        sc.penalty.delta0 = 1.0;
        sc.force = exprs({"16*cos(6.283185307179586*t)", "16*sin(6.283185307179586*t)"});
        sc.initial = exprs({"0", "0"});
        all.push_back(std::move(sc));
    }
    {
        Scenario sc;
        sc.name = "dependence-base";
        sc.dim = 1;
        sc.nx = 129;
        sc.lx = 1.0;
        sc.components = 2;
        sc.horizon = 1.0;
        sc.penalty.delta = 0.1;
        sc.penalty.delta0 = 1.0;
        sc.force = exprs({"9", "0"});
        sc.initial = exprs({"0.6*sin(3.141592653589793*x)", "0"});
        sc.perturbation = exprs({"sin(6.283185307179586*x)", "0.5"});
        all.push_back(std::move(sc));
    }
    {
        Scenario sc;
        sc.name = "saturating-2d";
        sc.dim = 2;
        sc.nx = 65;
        sc.ny = 65;
        sc.lx = 1.0;
        sc.ly = 1.0;
        sc.components = 2;
        sc.horizon = 1.0;
        sc.penalty.delta = 0.0;
        sc.penalty.delta0 = 1.0;
        sc.force = exprs({"20", "0"});
        sc.initial = exprs({"0", "0"});
        all.push_back(std::move(sc));
    }
    return all;
}

inline const Scenario& find_scenario(const std::vector<Scenario>& all, const std::string& name) {
    for (const Scenario& sc : all)
        if (sc.name == name) return sc;
    throw ConfigError("unknown scenario '" + name + "'");
}

} // namespace ballvi
