#pragma once

// Exponential penalty kernel and its primitives.
//
//   k(s) = delta                          for s <= 0
//          delta + (e^{s/eps} - 1)        for s >  0
//
// k is continuous at 0, nondecreasing, and bounded below by delta. The zero
// map Phi(u) = k(|u|^2 - 1) u is monotone because r -> k(r^2 - 1) r is
// nondecreasing on r >= 0. The exponent is capped (default e^700) so the
// kernel saturates instead of overflowing; the primitives extend linearly
// past the cap to stay consistent with the saturated kernel.

#include <cmath>
#include <stdexcept>

#include "ballvi/grid.hpp"
#include "ballvi/util.hpp"

namespace ballvi {

struct PenaltyParams {
    double epsilon = 1e-2; // penalty sharpness, > 0
    double delta = 0.0;    // multiplier floor, >= 0
    double delta0 = 1.0;   // cap used by the estimate audit, >= delta
    double exp_cap = 700.0;
};

inline void validate(const PenaltyParams& p) {
    if (!(p.epsilon > 0.0)) throw std::invalid_argument("penalty epsilon must be positive");
    if (!(p.delta >= 0.0)) throw std::invalid_argument("penalty delta must be nonnegative");
    if (!(p.delta0 >= p.delta)) throw std::invalid_argument("penalty delta0 must be >= delta");
}

inline double k_eval(double s, const PenaltyParams& p) {
    if (s <= 0.0) return p.delta;
    const double a = s / p.epsilon;
    return p.delta + std::expm1(a < p.exp_cap ? a : p.exp_cap);
}

// dk/ds; 0 on the nonpositive branch and past the cap.
inline double k_derivative(double s, const PenaltyParams& p) {
    if (s <= 0.0) return 0.0;
    const double a = s / p.epsilon;
    if (a >= p.exp_cap) return 0.0;
    return std::exp(a) / p.epsilon;
}

// Primitive of k itself: psi2(s) = integral_0^s k. Closed form on both
// branches, linear extension past the exponent cap. This is the potential
// whose gradient in u is Phi, used by the penalized step's line search.
inline double psi_primitive2(double s, const PenaltyParams& p) {
    if (s <= 0.0) return p.delta * s;
    const double smax = p.exp_cap * p.epsilon;
    const double sb = s < smax ? s : smax;
    double val = p.delta * sb + p.epsilon * std::expm1(sb / p.epsilon) - sb;
    if (s > smax) val += k_eval(smax, p) * (s - smax);
    return val;
}

namespace penalty_detail {

// Adaptive Simpson with absolute/relative control; integrand values are
// clamped so saturated-kernel powers stay finite.
inline double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adapt(F&& f, double a, double fa, double b, double fb, double m, double fm, double whole,
             double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(F&& f, double a, double b, double rel_tol) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = simpson(a, fa, b, fb, fm);
    const double tol = rel_tol * std::fmax(std::fabs(whole), 1e-300);
    return adapt(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

} // namespace penalty_detail

// psi(s; power) = integral_0^s k(sigma)^(power-1) dsigma.
//   power == 1          : s
//   s <= 0              : delta^(power-1) * s
//   power == 2, s > 0   : closed form
//   power >= 3, s > 0   : adaptive quadrature, relative tolerance 1e-10
inline double psi_eval(double s, const PenaltyParams& p, int power) {
    if (power < 1) throw std::invalid_argument("psi power must be >= 1");
    if (power == 1) return s;
    if (s <= 0.0) return pow_int(p.delta, power - 1) * s;
    if (power == 2) return psi_primitive2(s, p);
    auto f = [&](double sigma) {
        double val = 1.0;
        const double k = k_eval(sigma, p);
        for (int i = 0; i < power - 1; ++i) {
            val *= k;
            if (val > 1e300) return 1e300;
        }
        return val;
    };
    return penalty_detail::integrate(f, 0.0, s, 1e-10);
}

// Phi(u) = k(|u|^2 - 1) u, nodewise.
inline void phi_apply(const Grid& g, const VectorField& u, const PenaltyParams& p,
                      VectorField& out) {
    if (out.n != u.n || out.v.size() != u.v.size()) out = VectorField(g, u.n);
    const int nodes = g.node_count();
    for (int idx = 0; idx < nodes; ++idx) {
        const double k = k_eval(node_abs_sq(u, idx) - 1.0, p);
        const double* src = u.node(idx);
        double* dst = out.node(idx);
        for (int c = 0; c < u.n; ++c) dst[c] = k * src[c];
    }
}

inline VectorField phi_apply(const Grid& g, const VectorField& u, const PenaltyParams& p) {
    VectorField out(g, u.n);
    phi_apply(g, u, p, out);
    return out;
}

} // namespace ballvi
