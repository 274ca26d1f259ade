#pragma once

// Monte Carlo first-passage times of the OU noise: the independent oracle for the
// quadrature MFPTs and for the exponential survival assumption behind P1 and P2.
//
// Each path owns the RNG stream make_stream(seed, path_index), so an ensemble is
// bit-identical for any worker count.

#include "errors.hpp"
#include "noise_process.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace noisegate {

/// How a crossing between two exact samples is detected.
///
/// sampled: only the samples are compared against the boundary.
/// bridge:  additionally, a path that stays on the safe side at both samples is
///          declared crossed with the Brownian-bridge probability
///          exp(-2 d0 d1 / v), d0, d1 the sample distances to the boundary and v
///          the one-step variance.
enum class CrossingDetection { sampled, bridge };

struct McConfig {
    std::size_t n_paths = 100000;
    double dt = 0.0;       ///< [s]
    std::uint64_t seed = 1;
    double max_time = 0.0; ///< censoring horizon [s]
    unsigned workers = 1;
    CrossingDetection detection = CrossingDetection::bridge;

    void validate(const NoiseSpec& noise) const {
        if (n_paths < 1) throw invalid_input("n_paths must be >= 1");
        if (!(dt > 0.0) || dt > noise.tau / 50.0 * (1.0 + 1e-12))
            throw invalid_input("dt must satisfy 0 < dt <= tau/50");
        if (!(max_time >= 100.0 * dt * (1.0 - 1e-12)))
            throw invalid_input("max_time must be >= 100 dt");
        if (workers < 1) throw invalid_input("workers must be >= 1");
    }
};

/// Censoring horizon: 100 x the expected MFPT when known, else 10^4 tau.
inline double default_max_time(const NoiseSpec& noise, std::optional<double> mfpt_estimate = {}) {
    return mfpt_estimate ? 100.0 * *mfpt_estimate : 1e4 * noise.tau;
}

inline constexpr double censoring_warning_fraction = 0.1;

struct FptEnsemble {
    std::vector<double> samples; ///< uncensored first-passage times [s], in path order
    std::size_t censored_count = 0;
    double mean = 0.0;
    double std_err = 0.0;

    std::size_t total() const noexcept { return samples.size() + censored_count; }

    double censored_fraction() const noexcept {
        return total() == 0 ? 0.0 : static_cast<double>(censored_count) / static_cast<double>(total());
    }

    bool censoring_warning() const noexcept {
        return censored_fraction() > censoring_warning_fraction;
    }
};

namespace detail {

// One path; returns the crossing time or a negative value when censored.
template <class Crossed>
double run_path(double start, const OuStepper& stepper, std::size_t max_steps, Crossed&& crossed,
                Xoshiro256& rng) {
    double x = start;
    for (std::size_t k = 1; k <= max_steps; ++k) {
        const double next = stepper.advance(x, standard_normal(rng));
        if (crossed(x, next, rng)) return (static_cast<double>(k) - 0.5) * stepper.dt;
        x = next;
    }
    return -1.0;
}

// Bridge crossing is only sampled when it can matter (probability > e^-40).
inline constexpr double bridge_cutoff = 20.0;

template <class PathFn>
FptEnsemble run_ensemble(const McConfig& mc, PathFn&& path) {
    std::vector<double> times(mc.n_paths);
    const unsigned workers = std::min<unsigned>(mc.workers, static_cast<unsigned>(mc.n_paths));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = make_stream(mc.seed, i);
            times[i] = path(rng);
        }
    };
    if (workers <= 1) {
        work(0, mc.n_paths);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (mc.n_paths + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(mc.n_paths, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }

    FptEnsemble ens;
    ens.samples.reserve(times.size());
    for (double t : times) {
        if (t < 0.0)
            ++ens.censored_count;
        else
            ens.samples.push_back(t);
    }
    const auto n = ens.samples.size();
    if (n > 0) {
        ens.mean = std::accumulate(ens.samples.begin(), ens.samples.end(), 0.0) / static_cast<double>(n);
        if (n > 1) {
            double ss = 0.0;
            for (double t : ens.samples) ss += (t - ens.mean) * (t - ens.mean);
            ens.std_err = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
        }
    }
    return ens;
}

} // namespace detail

/// First passage from a start below b_e (stationary, truncated) up to b_e.
inline FptEnsemble simulate_delayed_fpt(const NoiseSpec& noise, double b_e, const McConfig& mc) {
    noise.validate();
    mc.validate(noise);
    if (!std::isfinite(b_e)) throw invalid_input("b_e must be finite");
    const OuStepper stepper(noise, mc.dt);
    const double var = stepper.step_variance();
    const bool bridge = mc.detection == CrossingDetection::bridge;
    const auto max_steps = static_cast<std::size_t>(std::floor(mc.max_time / mc.dt));

    auto crossed = [&](double x0, double x1, Xoshiro256& rng) {
        if (x1 >= b_e) return true;
        if (!bridge) return false;
        const double gap = 2.0 * (b_e - x0) * (b_e - x1) / var;
        return gap < detail::bridge_cutoff && rng.uniform_open() < std::exp(-gap);
    };
    return detail::run_ensemble(mc, [&](Xoshiro256& rng) {
        const double start = sample_truncated_stationary(noise, b_e, Side::below, rng);
        return detail::run_path(start, stepper, max_steps, crossed, rng);
    });
}

/// First passage from a start at or above b_e (stationary, truncated) down to c_e.
inline FptEnsemble simulate_bitflip_fpt(const NoiseSpec& noise, double b_e, double c_e,
                                        const McConfig& mc) {
    noise.validate();
    mc.validate(noise);
    if (!std::isfinite(b_e) || !std::isfinite(c_e)) throw invalid_input("margins must be finite");
    if (!(c_e < b_e)) throw invalid_input("c_e must lie below b_e");
    const OuStepper stepper(noise, mc.dt);
    const double var = stepper.step_variance();
    const bool bridge = mc.detection == CrossingDetection::bridge;
    const auto max_steps = static_cast<std::size_t>(std::floor(mc.max_time / mc.dt));

    auto crossed = [&](double x0, double x1, Xoshiro256& rng) {
        if (x1 <= c_e) return true;
        if (!bridge) return false;
        const double gap = 2.0 * (x0 - c_e) * (x1 - c_e) / var;
        return gap < detail::bridge_cutoff && rng.uniform_open() < std::exp(-gap);
    };
    return detail::run_ensemble(mc, [&](Xoshiro256& rng) {
        const double start = sample_truncated_stationary(noise, b_e, Side::above, rng);
        return detail::run_path(start, stepper, max_steps, crossed, rng);
    });
}

struct SurvivalPoint {
    double t;
    double surviving;   ///< empirical fraction with first passage later than t
    double exponential; ///< e^{-t/mean}
    double std_err;     ///< binomial standard error of `surviving`
};

/// Empirical survival on `grid`; censored paths count as surviving.
inline std::vector<SurvivalPoint> survival_curve(const FptEnsemble& ens, const std::vector<double>& grid) {
    if (ens.samples.empty()) throw invalid_input("survival_curve needs a non-empty ensemble");
    std::vector<double> sorted = ens.samples;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(ens.total());

    std::vector<SurvivalPoint> out;
    out.reserve(grid.size());
    for (double t : grid) {
        const auto crossed = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
        const double s = (n - static_cast<double>(crossed)) / n;
        out.push_back({t, s, std::exp(-t / ens.mean), std::sqrt(s * (1.0 - s) / n)});
    }
    return out;
}

/// Smallest t with Phi * S(t) <= eps: the Monte Carlo counterpart of the wait time.
/// Returns nullopt when the quantile falls among censored paths.
inline std::optional<double> empirical_wait_time(const FptEnsemble& ens, double phi, double eps) {
    if (ens.samples.empty()) throw invalid_input("empirical_wait_time needs a non-empty ensemble");
    if (!(eps > 0.0 && eps < 1.0)) throw invalid_input("epsilon must lie in (0, 1)");
    if (eps >= phi) return 0.0;
    const auto n = ens.total();
    // at most `allowed` paths may still survive
    const auto allowed = static_cast<std::size_t>(std::floor(eps / phi * static_cast<double>(n)));
    if (allowed < ens.censored_count) return std::nullopt;
    std::vector<double> sorted = ens.samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t index = n - allowed - 1;
    return sorted[index];
}

/// Asymptotic Kolmogorov survival function P(K > lambda).
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // P(K <= l) = sqrt(2 pi)/l sum_k exp(-(2k-1)^2 pi^2 / (8 l^2))
        constexpr double pi = 3.14159265358979323846;
        const double w = pi * pi / (8.0 * lambda * lambda);
        double s = 0.0;
        for (int k = 1; k <= 6; ++k) s += std::exp(-(2 * k - 1) * (2 * k - 1) * w);
        return 1.0 - std::sqrt(2.0 * pi) / lambda * s;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 == 1 ? term : -term);
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

inline constexpr std::size_t ks_min_samples = 100;

struct KsResult {
    double statistic;
    double p_value;
    std::size_t n;
    double fitted_mean;
    bool mean_estimated; ///< true when the mean came from the same samples
    std::string note;
};

/// One-sample KS distance of `samples` from Exp(mean).
inline KsResult ks_exponential(const std::vector<double>& samples, std::optional<double> mean = {}) {
    if (samples.size() < ks_min_samples)
        throw invalid_input("ks_exponential needs at least " + std::to_string(ks_min_samples) + " samples");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    const double m = mean ? *mean : std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    if (!(m > 0.0)) throw invalid_input("exponential mean must be > 0");

    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = -std::expm1(-sorted[i] / m);
        const double i_d = static_cast<double>(i);
        d = std::max({d, (i_d + 1.0) / n - f, f - i_d / n});
    }
    const double sqrt_n = std::sqrt(n);
    const double p = kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);

    KsResult r{d, p, sorted.size(), m, !mean, {}};
    if (!mean)
        r.note = "mean fitted from the sample; asymptotic Kolmogorov p-value is conservative "
                 "(Lilliefors)";
    return r;
}

/// KS test of the uncensored first-passage times of an ensemble.
inline KsResult ks_exponential(const FptEnsemble& ens) { return ks_exponential(ens.samples); }

} // namespace noisegate
