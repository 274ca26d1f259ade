#pragma once

// Time-dependent error probabilities of a noisy threshold gate and the read
// windows derived from them.
//
//   P1(t) = Phi exp(-(t - t0)/T1)        delayed switch
//   P2(t) = 1 - exp(-(t - t0)/T2)        bit flip
//   Pe(t) = P1(t) + P2(t)                reported unclipped

#include "errors.hpp"
#include "mfpt_quadrature.hpp"
#include "noise_process.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace noisegate {

struct GateConfig {
    double b_u; ///< upper switching threshold [V]
    double b_d; ///< lower switching threshold [V]
    double i_u; ///< applied input level [V]

    void validate() const {
        if (!std::isfinite(b_u) || !std::isfinite(b_d) || !std::isfinite(i_u))
            throw invalid_config("gate levels must be finite");
        if (!(b_d < b_u))
            throw invalid_config("lower threshold b_d must be below upper threshold b_u");
    }
};

enum class Regime { supra, sub };

inline std::string_view to_string(Regime r) { return r == Regime::supra ? "supra" : "sub"; }

struct Margins {
    double b_e; ///< b_u - i_u [V]
    double c_e; ///< b_d - i_u [V]
    Regime regime;
};

inline Margins derive_margins(const GateConfig& g) {
    g.validate();
    const double b_e = g.b_u - g.i_u;
    if (b_e == 0.0) throw degenerate_margin("drive level equals the switching threshold (b_e = 0)");
    return {b_e, g.b_d - g.i_u, b_e < 0.0 ? Regime::supra : Regime::sub};
}

struct ErrorModelParams {
    double phi;      ///< probability the drive has not reached the threshold at t0
    double t1;       ///< delayed-switch MFPT [s]
    double t2;       ///< bit-flip MFPT [s]
    double t0 = 0.0; ///< reference switch time [s]

    void validate() const {
        // phi = 1 is admitted: it is the degenerate constant-Pe case.
        if (!(phi > 0.0 && phi <= 1.0)) throw invalid_input("phi must lie in (0, 1]");
        if (!(t1 > 0.0) || !std::isfinite(t1)) throw invalid_input("T1 must be finite and > 0");
        if (!(t2 > 0.0) || !std::isfinite(t2)) throw invalid_input("T2 must be finite and > 0");
        if (!std::isfinite(t0)) throw invalid_input("t0 must be finite");
    }
};

namespace detail {

inline double elapsed(double t, const ErrorModelParams& p) {
    p.validate();
    if (std::isnan(t) || t < p.t0) throw invalid_input("time must be >= t0");
    return t - p.t0;
}

inline void check_eps(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw invalid_input("epsilon must lie in (0, 1)");
}

} // namespace detail

inline double p_delayed(double t, const ErrorModelParams& p) {
    return p.phi * std::exp(-detail::elapsed(t, p) / p.t1);
}

inline double p_bitflip(double t, const ErrorModelParams& p) {
    return -std::expm1(-detail::elapsed(t, p) / p.t2);
}

inline double p_total(double t, const ErrorModelParams& p) {
    const double s = detail::elapsed(t, p);
    return p.phi * std::exp(-s / p.t1) - std::expm1(-s / p.t2);
}

/// Time after t0 beyond which P1 <= eps; zero once eps >= Phi.
inline double wait_time(double eps, const ErrorModelParams& p) {
    detail::check_eps(eps);
    p.validate();
    return std::max(0.0, p.t1 * std::log(p.phi / eps));
}

/// Time after t0 up to which P2 <= eps.
inline double hurry_time(double eps, const ErrorModelParams& p) {
    detail::check_eps(eps);
    p.validate();
    return -p.t2 * std::log1p(-eps);
}

enum class MinimumKind { interior, boundary, degenerate };

struct MinErrorPoint {
    double t_m;
    double eps_m;
    MinimumKind kind;
};

/// Relative agreement required between the closed-form minimum and the numerical one.
inline constexpr double min_point_check_tol = 1e-6;

/// Minimum of Pe over t >= t0.
///
/// Interior stationary point t_m - t0 = ln(Phi T2/T1) / (1/T1 - 1/T2) when Phi T2/T1 > 1,
/// else the minimum sits at t0. The closed form is always re-derived numerically.
inline MinErrorPoint min_error_point(const ErrorModelParams& p) {
    p.validate();
    const double ratio = p.phi * p.t2 / p.t1;

    if (p.t1 == p.t2 && ratio == 1.0) return {p.t0, 1.0, MinimumKind::degenerate};

    MinErrorPoint closed;
    if (ratio > 1.0 && p.t1 != p.t2) {
        const double s = std::log(ratio) / (1.0 / p.t1 - 1.0 / p.t2);
        closed = {p.t0 + s, 0.0, MinimumKind::interior};
        closed.eps_m = p_total(closed.t_m, p);
    } else {
        closed = {p.t0, p.phi, MinimumKind::boundary};
    }

    // Cross-check on a bracket wide enough to hold any interior minimum.
    const double span = 50.0 * std::max(p.t1, p.t2);
    const auto num = numerics::grid_golden_minimize(
        [&](double s) { return p_total(p.t0 + s, p); }, 0.0, span);
    const double scale = std::max(closed.t_m - p.t0, p.t1);
    const bool located = std::abs((num.x + p.t0) - closed.t_m) <= min_point_check_tol * scale;
    if (num.f < closed.eps_m * (1.0 - 1e-9))
        throw numerical_failure("numerical minimizer found Pe below the closed-form minimum");
    // A flat minimum can leave the location loose while the values still coincide.
    if (!located && std::abs(num.f - closed.eps_m) > 1e-12 * closed.eps_m)
        throw numerical_failure("closed-form minimum disagrees with numerical minimizer");
    return closed;
}

struct IdleWindow {
    double t_is;
    double t_ie;

    double width() const noexcept { return t_ie - t_is; }
};

inline constexpr double window_rel_tol = 1e-9;

/// Read window [t_is, t_ie] on which Pe <= eps; empty when eps <= eps_m.
inline std::optional<IdleWindow> idle_window(double eps, const ErrorModelParams& p) {
    detail::check_eps(eps);
    const auto m = min_error_point(p);
    if (eps <= m.eps_m) return std::nullopt;

    auto excess = [&](double t) { return p_total(t, p) - eps; };

    double t_is = p.t0;
    if (excess(p.t0) > 0.0) {
        const auto [lo, hi] = numerics::bisect(excess, p.t0, m.t_m, window_rel_tol, p.t1);
        t_is = hi; // Pe <= eps side
    }
    const auto upper = numerics::bisect(excess, m.t_m, m.t_m + 50.0 * p.t2, window_rel_tol, p.t2);
    return IdleWindow{t_is, upper.first};
}

struct TimingSolution {
    double t_w;
    double t_h;
    double t_m;
    double eps_m;
    MinimumKind kind;
    std::optional<IdleWindow> window;
};

/// All timing quantities for an acceptable error eps. t_w and t_h are durations after t0;
/// t_m and the window are absolute times.
inline TimingSolution solve_timing(double eps, const ErrorModelParams& p) {
    const auto m = min_error_point(p);
    return {wait_time(eps, p), hurry_time(eps, p), m.t_m, m.eps_m, m.kind, idle_window(eps, p)};
}

/// Phi, T1 and T2 for a gate driven by stationary OU noise. Works for either regime;
/// the bit-flip time is evaluated with the same machinery in both.
inline ErrorModelParams model_params(const GateConfig& g, const NoiseSpec& noise,
                                     const QuadratureConfig& cfg = {}) {
    noise.validate();
    const auto m = derive_margins(g);
    const auto reduced = ReducedBoundaries::from_margins(m.b_e, m.c_e, noise.sigma);
    ErrorModelParams p;
    p.phi = phi_below(m.b_e, noise.sigma);
    p.t1 = mfpt_t1(reduced, noise.tau, cfg);
    p.t2 = mfpt_t2(reduced, noise.tau, cfg);
    p.t0 = 0.0;
    p.validate();
    return p;
}

/// Supra-threshold drive (i_u > b_u).
inline ErrorModelParams supra_threshold_model(const GateConfig& g, const NoiseSpec& noise,
                                              const QuadratureConfig& cfg = {}) {
    if (derive_margins(g).regime != Regime::supra)
        throw wrong_regime("supra-threshold model needs i_u > b_u");
    return model_params(g, noise, cfg);
}

/// Sub-threshold drive (i_us < b_u): switching only happens with noise assistance.
inline ErrorModelParams sub_threshold_model(const GateConfig& g, const NoiseSpec& noise,
                                            const QuadratureConfig& cfg = {}) {
    if (derive_margins(g).regime != Regime::sub)
        throw wrong_regime("sub-threshold model needs i_us < b_u");
    return model_params(g, noise, cfg);
}

} // namespace noisegate
