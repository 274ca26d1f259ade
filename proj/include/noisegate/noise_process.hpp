#pragma once

// Stationary, exponentially correlated Gaussian noise (Ornstein-Uhlenbeck).
//
//   <xi(t) xi(t + s)> = sigma^2 exp(-|s| / tau)
//
// Stepping uses the exact transition density, so the N(0, sigma^2) marginal is
// preserved for any step size:
//
//   xi(t + dt) = xi(t) e^{-dt/tau} + sigma sqrt(1 - e^{-2 dt/tau}) w,   w ~ N(0, 1)

#include "errors.hpp"
#include "random.hpp"
#include "special.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <string>

namespace noisegate {

struct NoiseSpec {
    double sigma; ///< standard deviation [V]
    double tau;   ///< correlation time [s]

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw invalid_input("noise sigma must be finite and > 0, got " + std::to_string(sigma));
        if (!(tau > 0.0) || !std::isfinite(tau))
            throw invalid_input("noise tau must be finite and > 0, got " + std::to_string(tau));
    }
};

struct NoiseState {
    double value = 0.0; ///< xi(t) [V]
    double time = 0.0;  ///< t [s]
};

/// Precomputed one-step transition coefficients for a fixed dt.
struct OuStepper {
    double decay; ///< e^{-dt/tau}
    double gain;  ///< sigma sqrt(1 - decay^2)
    double dt;

    OuStepper(const NoiseSpec& spec, double step) : dt(step) {
        spec.validate();
        if (!(step >= 0.0) || !std::isfinite(step))
            throw invalid_input("time step must be finite and >= 0");
        decay = std::exp(-step / spec.tau);
        // -expm1(-2x) keeps precision when dt << tau
        gain = spec.sigma * std::sqrt(-std::expm1(-2.0 * step / spec.tau));
    }

    double advance(double value, double unit_normal) const noexcept {
        return value * decay + gain * unit_normal;
    }

    /// Variance of the Gaussian increment over one step.
    double step_variance() const noexcept { return gain * gain; }
};

inline NoiseState ou_step(const NoiseState& state, double dt, const NoiseSpec& spec,
                          double unit_normal) {
    if (!std::isfinite(state.value) || !std::isfinite(state.time))
        throw invalid_input("noise state must be finite");
    const OuStepper stepper(spec, dt);
    return {stepper.advance(state.value, unit_normal), state.time + dt};
}

template <class Rng>
double standard_normal(Rng& rng) {
    return boost::random::normal_distribution<double>{}(rng);
}

template <class Rng>
double sample_stationary(const NoiseSpec& spec, Rng& rng) {
    return spec.sigma * standard_normal(rng);
}

enum class Side { below, above };

/// Below this acceptance probability rejection sampling is replaced by inverse-CDF sampling.
inline constexpr double rejection_floor = 1e-3;
/// Truncation regions lighter than this are refused.
inline constexpr double truncation_floor = 1e-12;

/// Draw from N(0, sigma^2) conditioned on value < bound (Side::below) or value >= bound
/// (Side::above).
template <class Rng>
double sample_truncated_stationary(const NoiseSpec& spec, double bound, Side side, Rng& rng) {
    spec.validate();
    if (!std::isfinite(bound)) throw invalid_input("truncation bound must be finite");

    const double z = bound / spec.sigma;
    const double mass = side == Side::below ? special::normal_cdf(z) : special::normal_sf(z);
    if (mass < truncation_floor)
        throw degenerate_truncation("truncation region has probability " + std::to_string(mass));

    if (mass >= rejection_floor) {
        for (;;) {
            const double x = sample_stationary(spec, rng);
            if (side == Side::below ? x < bound : x >= bound) return x;
        }
    }

    // Deep tail: invert the CDF restricted to the region.
    const double u = uniform_open(rng);
    double x = side == Side::below ? spec.sigma * special::normal_quantile(u * mass)
                                   : spec.sigma * special::normal_upper_quantile(u * mass);
    // Guard the strict inequality against rounding at the bound.
    if (side == Side::below && x >= bound) x = std::nextafter(bound, -INFINITY);
    if (side == Side::above && x < bound) x = bound;
    return x;
}

} // namespace noisegate
