#pragma once

// Scalar root bracketing and minimization used by the timing solvers.

#include "errors.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

namespace noisegate::numerics {

/// Bisection on [lo, hi] for f(t) = 0 with f(lo), f(hi) of opposite sign (zero allowed).
///
/// Returns the final bracket; terminates when hi - lo <= rel_tol * max(|lo|, |hi|, abs_floor).
template <class F>
std::pair<double, double> bisect(F&& f, double lo, double hi, double rel_tol,
                                 double abs_floor = std::numeric_limits<double>::min()) {
    double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo * f_hi > 0.0) throw numerical_failure("bisect: root not bracketed");
    if (f_lo == 0.0) return {lo, lo};
    if (f_hi == 0.0) return {hi, hi};
    for (int it = 0; it < 400; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return {mid, mid};
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        const double scale = std::max({std::abs(lo), std::abs(hi), abs_floor});
        if (hi - lo <= rel_tol * scale) break;
    }
    return {lo, hi};
}

struct Minimum {
    double x;
    double f;
};

/// Golden-section search for a minimum of a unimodal f on [a, b].
template <class F>
Minimum golden_section(F&& f, double a, double b, double rel_tol = 1e-10) {
    constexpr double inv_phi = 0.6180339887498948482;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < 500; ++it) {
        if (std::abs(b - a) <= rel_tol * std::max(std::abs(a) + std::abs(b), 1e-300)) break;
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

/// Dense grid scan followed by golden-section refinement around the best node.
template <class F>
Minimum grid_golden_minimize(F&& f, double a, double b, std::size_t n_grid = 2001,
                             double rel_tol = 1e-12) {
    std::size_t best = 0;
    double best_f = std::numeric_limits<double>::infinity();
    const double h = (b - a) / static_cast<double>(n_grid - 1);
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double v = f(a + h * static_cast<double>(i));
        if (v < best_f) {
            best_f = v;
            best = i;
        }
    }
    const double lo = a + h * static_cast<double>(best == 0 ? 0 : best - 1);
    const double hi = a + h * static_cast<double>(std::min(best + 1, n_grid - 1));
    auto m = golden_section(f, lo, hi, rel_tol);
    if (best_f < m.f) return {a + h * static_cast<double>(best), best_f};
    return m;
}

} // namespace noisegate::numerics
