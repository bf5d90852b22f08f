#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "uhopt/error.hpp"

namespace uhopt {

struct Bracket {
    double lo;
    double hi;
    double f_lo;
    double f_hi;
};

struct RootResult {
    double x;
    double fx;
    int iterations;
};

// Regula falsi with the Illinois modification, guarded by a bisection step
// whenever an interpolated step fails to halve the bracket. Requires a sign
// change on [lo, hi]; stops when the bracket collapses to adjacent doubles,
// when |f| <= f_tol, or when f hits zero.
template <class F>
RootResult solve_bracketed(F&& f, Bracket b, double f_tol = 0.0, int max_iter = 400) {
    if (b.f_lo == 0.0) return {b.lo, 0.0, 0};
    if (b.f_hi == 0.0) return {b.hi, 0.0, 0};
    if ((b.f_lo > 0.0) == (b.f_hi > 0.0))
        fail(ErrorCode::no_bracket, "root: no sign change on bracket");

    int side = 0;
    double ref_span = b.hi - b.lo;
    int since_ref = 0;
    for (int it = 1; it <= max_iter; ++it) {
        const double span = b.hi - b.lo;
        if (span <= 0.5 * ref_span) {
            ref_span = span;
            since_ref = 0;
        }
        double x = (b.lo * b.f_hi - b.hi * b.f_lo) / (b.f_hi - b.f_lo);
        if (!(x > b.lo && x < b.hi) || ++since_ref > 3) {
            x = b.lo + 0.5 * span;
            ref_span = span;
            since_ref = 0;
        }
        if (!(x > b.lo && x < b.hi)) {
            const bool pick_lo = std::abs(b.f_lo) < std::abs(b.f_hi);
            return {pick_lo ? b.lo : b.hi, pick_lo ? b.f_lo : b.f_hi, it};
        }
        const double fx = f(x);
        if (fx == 0.0 || std::abs(fx) <= f_tol) return {x, fx, it};
        if ((fx > 0.0) == (b.f_lo > 0.0)) {
            b.lo = x;
            b.f_lo = fx;
            if (side == -1) b.f_hi *= 0.5;
            side = -1;
        } else {
            b.hi = x;
            b.f_hi = fx;
            if (side == 1) b.f_lo *= 0.5;
            side = 1;
        }
    }
    fail(ErrorCode::not_converged, "root: iteration limit reached");
}

// Walks outward from x0 in steps that double until f changes sign. For a
// function known to be monotone this always finds the root if one exists
// within max_steps doublings.
template <class F>
Bracket bracket_outward(F&& f, double x0, double step, int max_steps = 200) {
    double f0 = f(x0);
    if (f0 == 0.0) return {x0, x0, 0.0, 0.0};
    double x1 = x0 + step;
    double f1 = f(x1);
    if ((f0 > 0.0) == (f1 > 0.0) && std::abs(f1) > std::abs(f0)) {
        step = -step;
        x1 = x0 + step;
        f1 = f(x1);
    }
    for (int k = 0; k < max_steps; ++k) {
        if (f1 == 0.0 || (f0 > 0.0) != (f1 > 0.0)) {
            return x0 < x1 ? Bracket{x0, x1, f0, f1} : Bracket{x1, x0, f1, f0};
        }
        x0 = x1;
        f0 = f1;
        step *= 2.0;
        x1 = x0 + step;
        f1 = f(x1);
    }
    fail(ErrorCode::no_bracket, "root: could not bracket a sign change");
}

}  // namespace uhopt
