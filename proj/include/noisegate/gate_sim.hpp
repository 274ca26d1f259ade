#pragma once

// Waveform-level NOT gate with hysteresis thresholds b_d < b_u.
//
// Output goes HIGH -> LOW when the input reaches b_u from below and LOW -> HIGH
// when it falls to b_d. With a rising drive edge, the first HIGH -> LOW edge is
// classified as nominal or delayed, and any later LOW -> HIGH edge while the
// drive stays high is a bit flip.

#include "error_model.hpp"
#include "errors.hpp"
#include "noise_process.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace noisegate {

struct Waveform {
    double dt = 0.0;
    std::vector<double> values;
    double t_start = 0.0;

    double time(std::size_t k) const noexcept { return t_start + dt * static_cast<double>(k); }

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw invalid_input("waveform dt must be > 0");
        if (values.empty()) throw invalid_input("waveform must be non-empty");
        if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); }))
            throw invalid_input("waveform values must be finite");
    }
};

enum class EdgeKind { high_to_low, low_to_high };
enum class EdgeClass { nominal, delayed_switch, bit_flip };

inline std::string_view to_string(EdgeKind k) {
    return k == EdgeKind::high_to_low ? "high_to_low" : "low_to_high";
}

inline std::string_view to_string(EdgeClass c) {
    switch (c) {
    case EdgeClass::nominal: return "nominal";
    case EdgeClass::delayed_switch: return "delayed_switch";
    case EdgeClass::bit_flip: return "bit_flip";
    }
    return "nominal";
}

struct SwitchEvent {
    double time;
    EdgeKind kind;
    EdgeClass classification;
};

/// Piecewise-linear step from level_low to level_high starting at t_edge.
inline Waveform synth_step_input(double level_low, double level_high, double t_edge, double rise_time,
                                 double duration, double dt) {
    if (!(dt > 0.0)) throw invalid_input("dt must be > 0");
    if (!(rise_time >= 0.0) || !(t_edge >= 0.0)) throw invalid_input("edge timing must be >= 0");
    if (!(duration > t_edge)) throw invalid_input("duration must exceed t_edge");
    if (!std::isfinite(level_low) || !std::isfinite(level_high))
        throw invalid_input("levels must be finite");

    const auto n = static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
    Waveform w{dt, std::vector<double>(n), 0.0};
    // grid times within dt/1e6 of an edge count as on it
    const double slack = 1e-6 * dt;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = w.time(k);
        if (t < t_edge - slack)
            w.values[k] = level_low;
        else if (t >= t_edge + rise_time - slack)
            w.values[k] = level_high;
        else
            w.values[k] = level_low + (level_high - level_low) * (t - t_edge) / rise_time;
    }
    return w;
}

/// w plus an OU trajectory sampled on w's grid, started from the stationary law.
/// Stream 0 of `seed` drives the noise.
inline Waveform add_noise(const Waveform& w, const NoiseSpec& noise, std::uint64_t seed) {
    w.validate();
    noise.validate();
    auto rng = make_stream(seed, 0);
    const OuStepper stepper(noise, w.dt);
    Waveform out = w;
    double xi = sample_stationary(noise, rng);
    out.values[0] += xi;
    for (std::size_t k = 1; k < out.values.size(); ++k) {
        xi = stepper.advance(xi, standard_normal(rng));
        out.values[k] += xi;
    }
    return out;
}

struct DriveEdge {
    double t_edge;
    double rise_time;
};

/// Sub-sample crossing detection between samples (see CrossingDetection::bridge).
struct BridgeDetection {
    double step_variance; ///< variance of the noise increment over one sample [V^2]
    std::uint64_t seed;   ///< stream 1 of this seed drives the crossing draws
};

struct InverterOptions {
    double rail_low = 0.0;
    double rail_high = 5.0;
    double propagation_delay = 0.0; ///< pure shift of output edges [s]
    std::optional<DriveEdge> edge;
    std::optional<BridgeDetection> bridge;
};

struct InverterRun {
    Waveform output;
    std::vector<SwitchEvent> events;
};

inline InverterRun run_inverter(const Waveform& input, const GateConfig& g, const InverterOptions& opts = {}) {
    input.validate();
    g.validate();
    if (!(opts.propagation_delay >= 0.0)) throw invalid_config("propagation delay must be >= 0");
    if (opts.bridge && !(opts.bridge->step_variance >= 0.0))
        throw invalid_config("bridge step variance must be >= 0");

    const auto n = input.values.size();
    const auto& in = input.values;
    const double dt = input.dt;
    const auto shift = static_cast<std::size_t>(std::llround(opts.propagation_delay / dt));

    std::optional<Xoshiro256> rng;
    double var = 0.0;
    if (opts.bridge && opts.bridge->step_variance > 0.0) {
        rng = make_stream(opts.bridge->seed, 1);
        var = opts.bridge->step_variance;
    }
    auto bridge_crossed = [&](double d0, double d1) {
        if (!rng) return false;
        const double gap = 2.0 * d0 * d1 / var;
        return gap < 20.0 && rng->uniform_open() < std::exp(-gap);
    };

    const double nominal_limit = opts.edge ? opts.edge->t_edge + opts.edge->rise_time + 2.0 * dt : 0.0;
    bool switched_after_edge = false;

    bool high = in[0] < g.b_u;
    std::vector<char> state(n);
    state[0] = high;
    std::vector<SwitchEvent> events;

    for (std::size_t k = 1; k < n; ++k) {
        const double t = input.time(k);
        if (high) {
            if (in[k] >= g.b_u || bridge_crossed(g.b_u - in[k - 1], g.b_u - in[k])) {
                high = false;
                EdgeClass cls = EdgeClass::nominal;
                if (opts.edge && t >= opts.edge->t_edge - 1e-6 * dt && !switched_after_edge) {
                    switched_after_edge = true;
                    if (t > nominal_limit) cls = EdgeClass::delayed_switch;
                }
                events.push_back({t + static_cast<double>(shift) * dt, EdgeKind::high_to_low, cls});
            }
        } else {
            if (in[k] <= g.b_d || bridge_crossed(in[k - 1] - g.b_d, in[k] - g.b_d)) {
                high = true;
                const EdgeClass cls = switched_after_edge ? EdgeClass::bit_flip : EdgeClass::nominal;
                events.push_back({t + static_cast<double>(shift) * dt, EdgeKind::low_to_high, cls});
            }
        }
        state[k] = high;
    }

    Waveform out{dt, std::vector<double>(n), input.t_start};
    for (std::size_t k = 0; k < n; ++k) {
        const bool s = k >= shift ? state[k - shift] : state[0];
        out.values[k] = s ? opts.rail_high : opts.rail_low;
    }
    return {std::move(out), std::move(events)};
}

// ---------------------------------------------------------------------------
// Seeded ensembles of noisy step responses.

struct GateEnsembleConfig {
    std::size_t n_runs = 10000;
    std::uint64_t seed = 1;
    double level_low = 0.0;
    double t_edge = 0.0;
    double rise_time = 0.0;
    double duration = 0.0; ///< [s]
    double dt = 0.0;       ///< [s]
    bool bridge = true;
};

struct GateRunSummary {
    std::optional<double> switch_time;  ///< first HIGH -> LOW at or after the edge
    std::optional<double> bitflip_time; ///< first bit flip after that switch
    double end_time;
};

/// Seed of run i; shared by its noise and crossing streams.
inline std::uint64_t run_seed(std::uint64_t seed, std::size_t run) {
    auto s = make_stream(seed, run);
    return s();
}

inline std::vector<GateRunSummary> simulate_gate_ensemble(const GateConfig& g, const NoiseSpec& noise,
                                                          const GateEnsembleConfig& cfg,
                                                          const InverterOptions& base = {}) {
    g.validate();
    noise.validate();
    if (cfg.n_runs < 1) throw invalid_input("n_runs must be >= 1");
    const auto clean = synth_step_input(cfg.level_low, g.i_u, cfg.t_edge, cfg.rise_time, cfg.duration, cfg.dt);
    const OuStepper stepper(noise, cfg.dt);

    std::vector<GateRunSummary> runs;
    runs.reserve(cfg.n_runs);
    for (std::size_t i = 0; i < cfg.n_runs; ++i) {
        const auto seed = run_seed(cfg.seed, i);
        InverterOptions opts = base;
        opts.edge = DriveEdge{cfg.t_edge, cfg.rise_time};
        if (cfg.bridge) opts.bridge = BridgeDetection{stepper.step_variance(), seed};
        const auto run = run_inverter(add_noise(clean, noise, seed), g, opts);

        GateRunSummary s{std::nullopt, std::nullopt, clean.time(clean.values.size() - 1)};
        for (const auto& e : run.events) {
            if (!s.switch_time && e.kind == EdgeKind::high_to_low &&
                e.time >= cfg.t_edge - 1e-6 * cfg.dt) {
                s.switch_time = e.time;
            } else if (s.switch_time && e.classification == EdgeClass::bit_flip) {
                s.bitflip_time = e.time;
                break;
            }
        }
        runs.push_back(s);
    }
    return runs;
}

struct CdfPoint {
    double t;        ///< time since the switch [s]
    double fraction; ///< runs flipped by t among runs observed at least t past their switch
    std::size_t n;   ///< denominator
};

/// Empirical CDF of the bit-flip delay (bit flip time minus switch time).
inline std::vector<CdfPoint> bitflip_cdf(const std::vector<GateRunSummary>& runs, const std::vector<double>& times) {
    std::vector<CdfPoint> out;
    for (double t : times) {
        std::size_t n = 0;
        std::size_t flipped = 0;
        for (const auto& r : runs) {
            if (!r.switch_time || r.end_time - *r.switch_time < t) continue;
            ++n;
            if (r.bitflip_time && *r.bitflip_time - *r.switch_time <= t) ++flipped;
        }
        out.push_back({t, n == 0 ? 0.0 : static_cast<double>(flipped) / static_cast<double>(n), n});
    }
    return out;
}

} // namespace noisegate
