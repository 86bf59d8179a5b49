#pragma once

// Matrix-free conjugate gradients for the shifted operators
//   A v = (1/tau + c(x)) v - Delta_h v,      c >= 0 nodewise,
// which are symmetric positive definite on the interior unknowns. Boundary
// rows are the identity pinned to zero. Components couple only through the
// scalar products, so one CG run solves all of them at once. Reductions are
// sequential in index order to keep runs bit-reproducible.

#include <cmath>
#include <cstdint>

#include "ballvi/grid.hpp"

namespace ballvi {

struct ShiftedOperator {
    const Grid* grid = nullptr;
    double tau = 1.0;
    const ScalarField* shift = nullptr; // c(x) >= 0

    // Optional symmetric rank-one nodal term w(x) (d(x).v) d(x), w >= 0,
    // which keeps the operator positive definite. The kernel linearization
    // needs it because the second order term couples components as w u u^T
    // rather than through a scalar shift. Nodes with w == 0 take exactly the
    // same arithmetic path as when the term is absent.
    const ScalarField* radial_weight = nullptr;
    const VectorField* radial = nullptr;

    void apply(const VectorField& in, VectorField& out) const {
        const Grid& g = *grid;
        laplacian_apply(g, in, out);
        const double inv_tau = 1.0 / tau;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const int idx = g.index(i, j);
                if (g.boundary(i, j)) continue; // laplacian already wrote zeros
                const double a = inv_tau + shift->v[idx];
                const double* src = in.node(idx);
                double* dst = out.node(idx);
                const double w = radial_weight ? radial_weight->v[idx] : 0.0;
                if (w != 0.0) {
                    const double* dir = radial->node(idx);
                    double t = 0.0;
                    for (int c = 0; c < in.n; ++c) t += dir[c] * src[c];
                    t *= w;
                    for (int c = 0; c < in.n; ++c) dst[c] += a * src[c] + t * dir[c];
                } else {
                    for (int c = 0; c < in.n; ++c) dst[c] += a * src[c];
                }
            }
    }

    double diagonal(int i, int j) const {
        const Grid& g = *grid;
        double d = 1.0 / tau + shift->v[g.index(i, j)] + 2.0 / (g.hx * g.hx);
        if (g.dim == 2) d += 2.0 / (g.hy * g.hy);
        return d;
    }

    double diagonal(int i, int j, int c) const {
        double d = diagonal(i, j);
        if (radial_weight) {
            const int idx = grid->index(i, j);
            const double w = radial_weight->v[idx];
            if (w != 0.0) {
                const double dc = radial->node(idx)[c];
                d += w * dc * dc;
            }
        }
        return d;
    }
};

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = true;
};

namespace linsolve_detail {

inline double dot_interior(const Grid& g, const VectorField& a, const VectorField& b) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (g.boundary(i, j)) continue;
            const int idx = g.index(i, j);
            const double* pa = a.node(idx);
            const double* pb = b.node(idx);
            for (int c = 0; c < a.n; ++c) s += pa[c] * pb[c];
        }
    return s;
}

inline void zero_boundary(const Grid& g, VectorField& u) {
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!g.boundary(i, j)) continue;
            double* p = u.node(g.index(i, j));
            for (int c = 0; c < u.n; ++c) p[c] = 0.0;
        }
}

} // namespace linsolve_detail

// Preconditioned CG, stopping on ||r|| <= tol ||b||. x is the initial guess
// on entry and the solution on exit; rhs values at boundary nodes are
// ignored. max_iter == 0 picks 10x the unknown count.
inline CgResult cg_solve(const ShiftedOperator& op, const VectorField& rhs, VectorField& x,
                         double tol, int max_iter = 0, bool jacobi = false) {
    using namespace linsolve_detail;
    const Grid& g = *op.grid;
    const int n = rhs.n;

    CgResult res;
    const double b_norm = std::sqrt(dot_interior(g, rhs, rhs));
    if (b_norm == 0.0) {
        x = VectorField(g, n);
        return res;
    }
    if (max_iter <= 0) {
        int interior = (g.nx - 2) * (g.dim == 2 ? g.ny - 2 : 1);
        max_iter = 10 * interior * n + 50;
    }

    zero_boundary(g, x);
    VectorField r(g, n), p(g, n), ap(g, n), z(g, n);
    op.apply(x, ap);
    for (std::size_t q = 0; q < r.v.size(); ++q) r.v[q] = rhs.v[q] - ap.v[q];
    zero_boundary(g, r);

    auto precondition = [&](const VectorField& in, VectorField& out) {
        if (!jacobi) {
            out = in;
            return;
        }
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const int idx = g.index(i, j);
                const double* src = in.node(idx);
                double* dst = out.node(idx);
                if (g.boundary(i, j)) {
                    for (int c = 0; c < n; ++c) dst[c] = 0.0;
                    continue;
                }
                if (op.radial_weight && op.radial_weight->v[idx] != 0.0) {
                    for (int c = 0; c < n; ++c) dst[c] = src[c] / op.diagonal(i, j, c);
                } else {
                    const double inv = 1.0 / op.diagonal(i, j);
                    for (int c = 0; c < n; ++c) dst[c] = inv * src[c];
                }
            }
    };

    precondition(r, z);
    p = z;
    double rz = dot_interior(g, r, z);
    double r_norm = std::sqrt(dot_interior(g, r, r));

    for (int it = 0; it < max_iter; ++it) {
        if (r_norm <= tol * b_norm) {
            res.iterations = it;
            res.relative_residual = r_norm / b_norm;
            return res;
        }
        op.apply(p, ap);
        const double pap = dot_interior(g, p, ap);
        if (!(pap > 0.0)) break; // loss of positivity: bail out with diagnostics
        const double alpha = rz / pap;
        for (std::size_t q = 0; q < x.v.size(); ++q) x.v[q] += alpha * p.v[q];
        for (std::size_t q = 0; q < r.v.size(); ++q) r.v[q] -= alpha * ap.v[q];
        zero_boundary(g, r);
        precondition(r, z);
        const double rz_next = dot_interior(g, r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t q = 0; q < p.v.size(); ++q) p.v[q] = z.v[q] + beta * p.v[q];
        r_norm = std::sqrt(dot_interior(g, r, r));
        res.iterations = it + 1;
    }
    res.relative_residual = r_norm / b_norm;
    res.converged = r_norm <= tol * b_norm;
    return res;
}

} // namespace ballvi
