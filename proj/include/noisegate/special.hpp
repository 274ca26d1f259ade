#pragma once

// Error-function family used by the MFPT integrands.
//
// The integrands e^{x^2}(1 -/+ erf x) overflow/underflow long before the
// integrals themselves do, so everything is routed through the scaled
// complementary error function erfcx(x) = e^{x^2} erfc(x).

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace noisegate::special {

inline double erf(double x) { return std::erf(x); }
inline double erfc(double x) { return std::erfc(x); }

namespace detail {

// e^{x^2} with x^2 split into hi + lo so the rounding of x*x does not leak
// into the result (relative error ~ x^2 * eps otherwise).
inline double exp_x2(double x) {
    const double hi = x * x;
    const double lo = std::fma(x, x, -hi);
    return std::exp(hi) * (1.0 + lo);
}

// Continued fraction for erfcx, x large and positive (modified Lentz).
//   erfcx(x) = (1/sqrt(pi)) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
inline double erfcx_cf(double x) {
    constexpr double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double a = 0.5 * k;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::numbers::inv_sqrtpi / f;
}

} // namespace detail

/// Scaled complementary error function e^{x^2} erfc(x).
///
/// Relative error stays near machine precision on the whole real line; for
/// x < about -26.6 the true value exceeds DBL_MAX and +inf is returned.
inline double erfcx(double x) {
    if (std::isnan(x)) return x;
    if (x < 0.0) {
        if (x < -26.7) return std::numeric_limits<double>::infinity();
        return 2.0 * detail::exp_x2(x) - erfcx(-x);
    }
    if (x < 25.0) return detail::exp_x2(x) * std::erfc(x);
    return detail::erfcx_cf(x);
}

/// Standard normal CDF Phi(x) = (1 + erf(x/sqrt 2)) / 2, computed through erfc
/// so that the lower tail keeps full relative precision.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// Upper tail 1 - Phi(x).
inline double normal_sf(double x) {
    return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

/// Lower-tail quantile: returns x with Phi(x) = q, q in (0, 1).
inline double normal_quantile(double q) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

/// Upper-tail quantile: returns x with 1 - Phi(x) = q, q in (0, 1).
inline double normal_upper_quantile(double q) {
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

} // namespace noisegate::special
