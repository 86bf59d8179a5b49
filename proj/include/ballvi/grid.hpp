#pragma once

// Uniform tensor grids on (0,Lx) and (0,Lx)x(0,Ly) with homogeneous Dirichlet
// boundary, the nodal fields living on them, and the discrete calculus the
// solvers need: 3/5-point Laplacian, nodal quadrature (weight h^d, boundary
// weight 0), forward-difference gradient energy, space-time Lp norms with
// step weight tau, and the pointwise closed-ball projection.
//
// Conventions. Nodes are x_i = i*hx (and y_j = j*hy), index = j*nx + i.
// laplacian_apply returns -Delta_h u with value 0 at boundary nodes.
// The gradient energy sums over all edges, so that for fields vanishing on
// the boundary <(-Delta_h)u, u>_w == grad_norm_sq(u) exactly; the implicit
// Euler energy bookkeeping relies on that identity.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "ballvi/util.hpp"

namespace ballvi {

struct Grid {
    int dim = 1;
    int nx = 0;
    int ny = 1;
    double lx = 0.0;
    double ly = 0.0;
    double hx = 0.0;
    double hy = 0.0;

    static Grid make_1d(double lx, int nx) {
        if (nx < 3) throw std::invalid_argument("grid needs at least 3 nodes per axis");
        if (!(lx > 0.0)) throw std::invalid_argument("grid extent must be positive");
        Grid g;
        g.dim = 1;
        g.nx = nx;
        g.ny = 1;
        g.lx = lx;
        g.ly = 0.0;
        g.hx = lx / double(nx - 1);
        g.hy = 0.0;
        return g;
    }

    static Grid make_2d(double lx, double ly, int nx, int ny) {
        if (nx < 3 || ny < 3) throw std::invalid_argument("grid needs at least 3 nodes per axis");
        if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("grid extent must be positive");
        Grid g;
        g.dim = 2;
        g.nx = nx;
        g.ny = ny;
        g.lx = lx;
        g.ly = ly;
        g.hx = lx / double(nx - 1);
        g.hy = ly / double(ny - 1);
        return g;
    }

    int node_count() const { return nx * ny; }
    int index(int i, int j) const { return j * nx + i; }
    double x(int i) const { return double(i) * hx; }
    double y(int j) const { return double(j) * hy; }

    bool boundary(int i, int j) const {
        if (i == 0 || i == nx - 1) return true;
        return dim == 2 && (j == 0 || j == ny - 1);
    }

    // Quadrature weight: h^d at interior nodes, 0 on the boundary (fields of
    // interest vanish there).
    double cell() const { return dim == 1 ? hx : hx * hy; }
    double weight(int i, int j) const { return boundary(i, j) ? 0.0 : cell(); }

    double measure() const { return dim == 1 ? lx : lx * ly; }
};

struct ScalarField {
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid& g) : v(std::size_t(g.node_count()), 0.0) {}
    ScalarField(const Grid& g, double fill) : v(std::size_t(g.node_count()), fill) {}

    bool operator==(const ScalarField&) const = default;
};

// Node-major storage: v[node*n + c]. Keeping a node's components contiguous
// is what the per-node projection and the block Gauss-Seidel sweep want.
struct VectorField {
    int n = 0;
    std::vector<double> v;

    VectorField() = default;
    VectorField(const Grid& g, int components)
        : n(components), v(std::size_t(g.node_count()) * std::size_t(components), 0.0) {}

    double* node(int idx) { return v.data() + std::size_t(idx) * n; }
    const double* node(int idx) const { return v.data() + std::size_t(idx) * n; }

    bool operator==(const VectorField&) const = default;
};

inline double node_abs(const VectorField& u, int idx) {
    const double* p = u.node(idx);
    double s = 0.0;
    for (int c = 0; c < u.n; ++c) s += p[c] * p[c];
    return std::sqrt(s);
}

inline double node_abs_sq(const VectorField& u, int idx) {
    const double* p = u.node(idx);
    double s = 0.0;
    for (int c = 0; c < u.n; ++c) s += p[c] * p[c];
    return s;
}

// out = (-Delta_h) u, zero at boundary nodes. Neighbor values are read as
// stored, so for Dirichlet fields the boundary contributes nothing.
inline void laplacian_apply(const Grid& g, const VectorField& u, VectorField& out) {
    const int n = u.n;
    if (out.n != n || out.v.size() != u.v.size()) out = VectorField(g, n);
    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = g.dim == 2 ? 1.0 / (g.hy * g.hy) : 0.0;
    const double diag = 2.0 * ax + 2.0 * ay;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int idx = g.index(i, j);
            double* o = out.node(idx);
            if (g.boundary(i, j)) {
                for (int c = 0; c < n; ++c) o[c] = 0.0;
                continue;
            }
            const double* uc = u.node(idx);
            const double* uw = u.node(g.index(i - 1, j));
            const double* ue = u.node(g.index(i + 1, j));
            const double* us = g.dim == 2 ? u.node(g.index(i, j - 1)) : nullptr;
            const double* un = g.dim == 2 ? u.node(g.index(i, j + 1)) : nullptr;
            for (int c = 0; c < n; ++c) {
                double val = diag * uc[c] - ax * (uw[c] + ue[c]);
                if (g.dim == 2) val -= ay * (us[c] + un[c]);
                o[c] = val;
            }
        }
    }
}

inline VectorField laplacian_apply(const Grid& g, const VectorField& u) {
    VectorField out(g, u.n);
    laplacian_apply(g, u, out);
    return out;
}

// sum_x w(x) <a(x), b(x)>, sequential over nodes in index order.
inline double weighted_dot(const Grid& g, const VectorField& a, const VectorField& b) {
    double s = 0.0;
    const double w = g.cell();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (g.boundary(i, j)) continue;
            const int idx = g.index(i, j);
            const double* pa = a.node(idx);
            const double* pb = b.node(idx);
            double d = 0.0;
            for (int c = 0; c < a.n; ++c) d += pa[c] * pb[c];
            s += w * d;
        }
    return s;
}

inline double weighted_pow_sum(const Grid& g, const VectorField& u, double p) {
    double s = 0.0;
    const double w = g.cell();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (g.boundary(i, j)) continue;
            const double a = node_abs(u, g.index(i, j));
            s += w * (p == 2.0 ? a * a : std::pow(a, p));
        }
    return s;
}

inline double weighted_pow_sum(const Grid& g, const ScalarField& u, double p) {
    double s = 0.0;
    const double w = g.cell();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (g.boundary(i, j)) continue;
            const double a = std::fabs(u.v[g.index(i, j)]);
            s += w * (p == 2.0 ? a * a : std::pow(a, p));
        }
    return s;
}

inline double l2_norm(const Grid& g, const VectorField& u) {
    return std::sqrt(weighted_pow_sum(g, u, 2.0));
}

inline double max_node_abs(const VectorField& u, const Grid& g) {
    double m = 0.0;
    for (int idx = 0; idx < g.node_count(); ++idx) m = std::fmax(m, node_abs(u, idx));
    return m;
}

// Forward-difference gradient energy over all edges:
//   1d: sum_i hx ((u_{i+1}-u_i)/hx)^2
//   2d: sum hx hy [((u_{i+1,j}-u_{ij})/hx)^2 + ((u_{i,j+1}-u_{ij})/hy)^2]
inline double grad_norm_sq(const Grid& g, const VectorField& u) {
    double s = 0.0;
    const double w = g.cell();
    const double ax = 1.0 / (g.hx * g.hx);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            const double* a = u.node(g.index(i, j));
            const double* b = u.node(g.index(i + 1, j));
            double d = 0.0;
            for (int c = 0; c < u.n; ++c) {
                const double e = b[c] - a[c];
                d += e * e;
            }
            s += w * ax * d;
        }
    if (g.dim == 2) {
        const double ay = 1.0 / (g.hy * g.hy);
        for (int j = 0; j + 1 < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double* a = u.node(g.index(i, j));
                const double* b = u.node(g.index(i, j + 1));
                double d = 0.0;
                for (int c = 0; c < u.n; ++c) {
                    const double e = b[c] - a[c];
                    d += e * e;
                }
                s += w * ay * d;
            }
    }
    return s;
}

// Left-endpoint time quadrature with step tau over the given snapshots.
// Callers pick the snapshot window; the solvers pass steps 1..M so the sum
// matches the implicit Euler bookkeeping.
inline double lp_norm_spacetime(const Grid& g, std::span<const VectorField> snaps, double tau,
                                double p) {
    double s = 0.0;
    for (const VectorField& f : snaps) s += tau * weighted_pow_sum(g, f, p);
    return std::pow(s, 1.0 / p);
}

inline double lp_norm_spacetime(const Grid& g, std::span<const ScalarField> snaps, double tau,
                                double p) {
    double s = 0.0;
    for (const ScalarField& f : snaps) s += tau * weighted_pow_sum(g, f, p);
    return std::pow(s, 1.0 / p);
}

inline double linf_l2_norm(const Grid& g, std::span<const VectorField> snaps) {
    double m = 0.0;
    for (const VectorField& f : snaps) m = std::fmax(m, weighted_pow_sum(g, f, 2.0));
    return std::sqrt(m);
}

// 1/sqrt(lambda_1) for the box, lambda_1 = pi^2 sum_i 1/L_i^2.
inline double poincare_constant(const Grid& g) {
    const double pi = std::numbers::pi;
    double lam = pi * pi / (g.lx * g.lx);
    if (g.dim == 2) lam += pi * pi / (g.ly * g.ly);
    return 1.0 / std::sqrt(lam);
}

// Pointwise projection onto the closed unit ball: v -> v / max(1, |v|).
inline void project_ball(VectorField& u) {
    const int nodes = int(u.v.size() / std::size_t(u.n));
    for (int idx = 0; idx < nodes; ++idx) {
        double* p = u.node(idx);
        double s = 0.0;
        for (int c = 0; c < u.n; ++c) s += p[c] * p[c];
        if (s > 1.0) {
            const double inv = 1.0 / std::sqrt(s);
            for (int c = 0; c < u.n; ++c) p[c] *= inv;
        }
    }
}

// CSV snapshot: header then one row per node, x[,y],comp_0,...,comp_{N-1},
// nodes in index order, floats with 17 significant digits.
inline void write_csv(const Grid& g, const VectorField& u, std::ostream& os) {
    os << "x";
    if (g.dim == 2) os << ",y";
    for (int c = 0; c < u.n; ++c) os << ",comp_" << c;
    os << "\n";
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            os << fmt17(g.x(i));
            if (g.dim == 2) os << ',' << fmt17(g.y(j));
            const double* p = u.node(g.index(i, j));
            for (int c = 0; c < u.n; ++c) os << ',' << fmt17(p[c]);
            os << "\n";
        }
}

inline void write_csv(const Grid& g, const ScalarField& u, std::ostream& os) {
    os << "x";
    if (g.dim == 2) os << ",y";
    os << ",comp_0\n";
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            os << fmt17(g.x(i));
            if (g.dim == 2) os << ',' << fmt17(g.y(j));
            os << ',' << fmt17(u.v[g.index(i, j)]) << "\n";
        }
}

} // namespace ballvi
