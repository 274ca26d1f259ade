#pragma once

// Mean first-passage times of the OU noise averaged over a truncated
// stationary start, as double integrals in reduced units y = xi / sqrt(2 sigma^2).
//
// Delayed switch (start below b, absorbing at b, reflecting at -inf):
//
//   T1 = (tau / N) int_{-inf}^{b} dz int_{z}^{b} dx  e^{-z^2 + x^2} (1 + erf x)
//
// Bit flip (start above b, absorbing at c < b, reflecting at +inf):
//
//   T2 = (tau / N2) int_{b}^{+inf} dz int_{c}^{z} dx  e^{-z^2 + x^2} (1 - erf x),
//   N2 = (1 - erf b) / 2.
//
// Both inner integrands are erfcx(-/+x); the infinite outer limit is replaced by
// b -/+ truncation_width and an a-posteriori tail bound is checked.

#include "errors.hpp"
#include "special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace noisegate {

/// How the T1 double integral is normalized.
///
/// as_derived: N = (1 + erf b)/2, the mass of the start distribution (xi_0 < b_e).
/// as_printed: N = (1 - erf b)/2, the literal prefactor of the published formula.
enum class Normalization { as_derived, as_printed };

inline std::string_view to_string(Normalization n) {
    return n == Normalization::as_derived ? "as-derived" : "as-printed";
}

inline Normalization parse_normalization(std::string_view s) {
    if (s == "as-derived") return Normalization::as_derived;
    if (s == "as-printed") return Normalization::as_printed;
    throw invalid_input("unknown normalization mode '" + std::string(s) + "'");
}

struct ReducedBoundaries {
    double b_e_bar;
    std::optional<double> c_e_bar;

    /// Margins in volts -> reduced units.
    static ReducedBoundaries from_margins(double b_e, std::optional<double> c_e, double sigma) {
        if (!(sigma > 0.0)) throw invalid_input("sigma must be > 0");
        const double scale = 1.0 / (std::numbers::sqrt2 * sigma);
        ReducedBoundaries r{b_e * scale, std::nullopt};
        if (c_e) r.c_e_bar = *c_e * scale;
        return r;
    }

    void validate() const {
        if (!std::isfinite(b_e_bar)) throw invalid_input("b_e_bar must be finite");
        if (c_e_bar) {
            if (!std::isfinite(*c_e_bar)) throw invalid_input("c_e_bar must be finite");
            if (!(*c_e_bar < b_e_bar))
                throw invalid_input("c_e_bar must lie strictly below b_e_bar");
        }
    }
};

struct QuadratureConfig {
    double rel_tol = 1e-8;
    double truncation_width = 8.0;
    Normalization normalization = Normalization::as_derived;

    void validate() const {
        if (!(rel_tol > 0.0 && rel_tol < 1e-3))
            throw invalid_input("rel_tol must lie in (0, 1e-3)");
        if (!(truncation_width >= 6.0)) throw invalid_input("truncation_width must be >= 6");
    }
};

/// A reduced MFPT (T / tau) together with its error budget.
struct MfptEstimate {
    double value = 0.0;         ///< T / tau
    double rel_error = 0.0;     ///< quadrature error estimate, relative
    double tail_bound = 0.0;    ///< bound on the truncated tail, relative
    double width_used = 0.0;    ///< truncation width after any widening
};

/// P_1a = Phi(b_e / sigma) = (1 + erf(b_e / sqrt(2 sigma^2))) / 2.
inline double phi_below(double b_e, double sigma) {
    if (!(sigma > 0.0)) throw invalid_input("sigma must be > 0");
    if (std::isnan(b_e)) throw invalid_input("b_e is NaN");
    return special::normal_cdf(b_e / sigma);
}

namespace detail {

inline constexpr unsigned gk_max_depth = 20;
inline constexpr int max_widenings = 3;

template <class F>
double gk_integrate(F&& f, double a, double b, double tol, double& err) {
    using Gk = boost::math::quadrature::gauss_kronrod<double, 21>;
    double l1 = 0.0;
    const double v = Gk::integrate(f, a, b, gk_max_depth, tol, &err, &l1);
    return v;
}

// Normalizing masses in reduced units.
inline double mass_below(double b) { return 0.5 * special::erfc(-b); }
inline double mass_above(double b) { return 0.5 * special::erfc(b); }

inline double t1_normalizer(double b, Normalization n) {
    return n == Normalization::as_derived ? mass_below(b) : mass_above(b);
}

inline void check_result(const char* name, const MfptEstimate& est, double rel_tol) {
    if (!std::isfinite(est.value) || !(est.value > 0.0))
        throw quadrature_failure(std::string(name) + " produced a non-positive or non-finite value",
                                 est.rel_error);
    if (est.rel_error + est.tail_bound > rel_tol)
        throw quadrature_failure(std::string(name) + " did not converge to rel_tol",
                                 est.rel_error + est.tail_bound);
}

// Inner integral of the T1 form: g(z) = int_z^b erfcx(-x) dx.
inline double t1_inner(double z, double b, double tol, double& err) {
    if (z >= b) {
        err = 0.0;
        return 0.0;
    }
    return gk_integrate([](double x) { return special::erfcx(-x); }, z, b, tol, err);
}

// Inner integral of the T2 form: h(z) = int_c^z erfcx(x) dx.
inline double t2_inner(double z, double c, double tol, double& err) {
    if (z <= c) {
        err = 0.0;
        return 0.0;
    }
    return gk_integrate([](double x) { return special::erfcx(x); }, c, z, tol, err);
}

} // namespace detail

/// T1 / tau by nested adaptive quadrature of the double integral.
inline MfptEstimate mfpt_t1_reduced(const ReducedBoundaries& bounds, const QuadratureConfig& cfg = {}) {
    bounds.validate();
    cfg.validate();
    const double b = bounds.b_e_bar;
    const double inner_tol = cfg.rel_tol * 1e-2;

    for (int attempt = 0; attempt <= detail::max_widenings; ++attempt) {
        const double width = cfg.truncation_width * std::ldexp(1.0, attempt);
        const double lo = b - width;

        double inner_err_max = 0.0;
        auto outer = [&](double z) {
            double err = 0.0;
            const double g = detail::t1_inner(z, b, inner_tol, err);
            if (g > 0.0) inner_err_max = std::max(inner_err_max, err / g);
            return std::exp(-z * z) * g;
        };
        double outer_err = 0.0;
        const double integral = detail::gk_integrate(outer, lo, b, cfg.rel_tol * 0.1, outer_err);

        // Tail over (-inf, lo): g grows at most like log|z|/sqrt(pi) beyond lo.
        double dummy = 0.0;
        const double g_lo = detail::t1_inner(lo, b, inner_tol, dummy);
        const double tail = 0.5 / std::numbers::inv_sqrtpi * special::erfc(-lo) * (g_lo + 1.0);

        MfptEstimate est;
        est.value = integral / detail::t1_normalizer(b, cfg.normalization);
        est.rel_error = std::abs(outer_err / integral) + inner_err_max;
        est.tail_bound = tail / integral;
        est.width_used = width;
        if (est.tail_bound <= 0.1 * cfg.rel_tol || attempt == detail::max_widenings) {
            detail::check_result("mfpt_t1", est, cfg.rel_tol);
            return est;
        }
    }
    throw quadrature_failure("mfpt_t1: unreachable", 1.0);
}

inline double mfpt_t1(const ReducedBoundaries& bounds, double tau, const QuadratureConfig& cfg = {}) {
    if (!(tau > 0.0)) throw invalid_input("tau must be > 0");
    return tau * mfpt_t1_reduced(bounds, cfg).value;
}

/// T1 / tau through the order-swapped single integral
///   (1/N) (sqrt(pi)/2) int_{-inf}^{b} erfcx(-x) erfc(-x) dx.
inline MfptEstimate reduce_t1_reduced(const ReducedBoundaries& bounds, const QuadratureConfig& cfg = {}) {
    bounds.validate();
    cfg.validate();
    const double b = bounds.b_e_bar;

    for (int attempt = 0; attempt <= detail::max_widenings; ++attempt) {
        const double width = cfg.truncation_width * std::ldexp(1.0, attempt);
        const double lo = b - width;
        auto f = [](double x) { return special::erfcx(-x) * special::erfc(-x); };
        double err = 0.0;
        const double integral = detail::gk_integrate(f, lo, b, cfg.rel_tol * 0.1, err);

        // integrand <= erfcx(-lo) erfc(-x) on (-inf, lo); int erfc(t) dt over [a, inf) <= e^{-a^2}/sqrt(pi)
        const double tail = lo < 0.0 ? special::erfcx(-lo) * std::exp(-lo * lo) * std::numbers::inv_sqrtpi
                                     : special::erfcx(-lo) * 2.0 * width;

        MfptEstimate est;
        const double scale = 0.5 / std::numbers::inv_sqrtpi;
        est.value = scale * integral / detail::t1_normalizer(b, cfg.normalization);
        est.rel_error = std::abs(err / integral);
        est.tail_bound = tail / integral;
        est.width_used = width;
        if (est.tail_bound <= 0.1 * cfg.rel_tol || attempt == detail::max_widenings) {
            detail::check_result("reduce_t1", est, cfg.rel_tol);
            return est;
        }
    }
    throw quadrature_failure("reduce_t1: unreachable", 1.0);
}

inline double reduce_t1(const ReducedBoundaries& bounds, double tau, const QuadratureConfig& cfg = {}) {
    if (!(tau > 0.0)) throw invalid_input("tau must be > 0");
    return tau * reduce_t1_reduced(bounds, cfg).value;
}

/// T2 / tau by nested adaptive quadrature of the double integral.
inline MfptEstimate mfpt_t2_reduced(const ReducedBoundaries& bounds, const QuadratureConfig& cfg = {}) {
    bounds.validate();
    cfg.validate();
    if (!bounds.c_e_bar) throw invalid_input("mfpt_t2 requires c_e_bar");
    const double b = bounds.b_e_bar;
    const double c = *bounds.c_e_bar;
    const double inner_tol = cfg.rel_tol * 1e-2;

    for (int attempt = 0; attempt <= detail::max_widenings; ++attempt) {
        const double width = cfg.truncation_width * std::ldexp(1.0, attempt);
        const double hi = b + width;

        double inner_err_max = 0.0;
        auto outer = [&](double z) {
            double err = 0.0;
            const double h = detail::t2_inner(z, c, inner_tol, err);
            if (h > 0.0) inner_err_max = std::max(inner_err_max, err / h);
            return std::exp(-z * z) * h;
        };
        double outer_err = 0.0;
        const double integral = detail::gk_integrate(outer, b, hi, cfg.rel_tol * 0.1, outer_err);

        double dummy = 0.0;
        const double h_hi = detail::t2_inner(hi, c, inner_tol, dummy);
        const double tail = 0.5 / std::numbers::inv_sqrtpi * special::erfc(hi) * (h_hi + 1.0);

        MfptEstimate est;
        est.value = integral / detail::mass_above(b);
        est.rel_error = std::abs(outer_err / integral) + inner_err_max;
        est.tail_bound = tail / integral;
        est.width_used = width;
        if (est.tail_bound <= 0.1 * cfg.rel_tol || attempt == detail::max_widenings) {
            detail::check_result("mfpt_t2", est, cfg.rel_tol);
            return est;
        }
    }
    throw quadrature_failure("mfpt_t2: unreachable", 1.0);
}

inline double mfpt_t2(const ReducedBoundaries& bounds, double tau, const QuadratureConfig& cfg = {}) {
    if (!(tau > 0.0)) throw invalid_input("tau must be > 0");
    return tau * mfpt_t2_reduced(bounds, cfg).value;
}

/// T2 / tau through the order-swapped form
///   (1/N2)(sqrt(pi)/2) [ erfc(b) int_c^b erfcx(x) dx + int_b^inf erfcx(x) erfc(x) dx ].
inline MfptEstimate reduce_t2_reduced(const ReducedBoundaries& bounds, const QuadratureConfig& cfg = {}) {
    bounds.validate();
    cfg.validate();
    if (!bounds.c_e_bar) throw invalid_input("reduce_t2 requires c_e_bar");
    const double b = bounds.b_e_bar;
    const double c = *bounds.c_e_bar;
    const double hi = b + cfg.truncation_width * 4.0;

    double err_a = 0.0;
    double err_b = 0.0;
    const double part_a =
        detail::gk_integrate([](double x) { return special::erfcx(x); }, c, b, cfg.rel_tol * 0.1, err_a);
    const double part_b = detail::gk_integrate(
        [](double x) { return special::erfcx(x) * special::erfc(x); }, b, hi, cfg.rel_tol * 0.1, err_b);
    const double total = special::erfc(b) * part_a + part_b;

    MfptEstimate est;
    est.value = 0.5 / std::numbers::inv_sqrtpi * total / detail::mass_above(b);
    est.rel_error = (special::erfc(b) * err_a + err_b) / total;
    est.tail_bound = special::erfcx(std::max(hi, 0.0)) * std::exp(-hi * hi) / total;
    est.width_used = hi - b;
    detail::check_result("reduce_t2", est, cfg.rel_tol);
    return est;
}

} // namespace noisegate
