#pragma once

// Command-line front end: option parsing and the mfpt, curve, sweep, validate
// and trace subcommands. Everything here is callable in-process; main() only
// forwards argv.
//
// Exit status: 0 ok, 1 a validation check failed, 2 configuration error,
// 3 inconclusive statistics, 4 numerical failure.

#include <noisegate/error_model.hpp>
#include <noisegate/errors.hpp>
#include <noisegate/fpt_mc.hpp>
#include <noisegate/gate_sim.hpp>
#include <noisegate/mfpt_quadrature.hpp>
#include <noisegate/noise_process.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace noisegate::cli {

using json = nlohmann::ordered_json;

enum exit_code : int { ok = 0, check_failed = 1, config_error = 2, inconclusive = 3, numerical_error = 4 };

enum class Format { csv, json };

struct RunConfig {
    double sigma = 1.0;
    double tau = 1e-9;
    std::optional<double> b_u;
    std::optional<double> b_d;
    std::optional<double> i_u;
    std::string preset = "default";
    double eps = 0.3;
    double tmax_over_tau = 40.0;
    std::size_t points = 401;
    std::size_t paths = 100000;
    double dt_over_tau = 1.0 / 200.0;
    std::uint64_t seed = 1;
    unsigned workers = 0; ///< 0 = hardware concurrency
    std::string out;      ///< empty = stdout
    Format format = Format::csv;
    Normalization normalization = Normalization::as_derived;

    // command specific
    std::string what = "both";                                   // mfpt: t1 | t2 | both
    std::vector<double> ratios{1.0, 2.0, 5.0, 10.0, 20.0, 50.0}; // sweep: sigma/|b_e|
    std::vector<double> eps_list{1e-1, 1e-3, 1e-5, 1e-7};         // sweep
    bool mc = false;                                             // sweep: add Monte Carlo column
    std::size_t ks_samples = 10000;                              // validate
    double edge_over_tau = 2.0;                                  // trace
    double rise_over_tau = 0.0;                                  // trace

    NoiseSpec noise() const { return {sigma, tau}; }
    double dt() const { return dt_over_tau * tau; }
    QuadratureConfig quadrature() const {
        QuadratureConfig q;
        q.normalization = normalization;
        return q;
    }
    unsigned worker_count() const {
        return workers > 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
    }

    void validate(bool allow_zero_sigma = false) const {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw invalid_config("--tau must be > 0");
        if (allow_zero_sigma ? !(sigma >= 0.0) : !(sigma > 0.0)) throw invalid_config("--sigma must be > 0");
        if (!std::isfinite(sigma)) throw invalid_config("--sigma must be finite");
        if (!(eps > 0.0 && eps < 1.0)) throw invalid_config("--eps must lie in (0, 1)");
        if (points < 2) throw invalid_config("--points must be >= 2");
        if (!(tmax_over_tau > 0.0)) throw invalid_config("--tmax-over-tau must be > 0");
        if (!(dt_over_tau > 0.0 && dt_over_tau <= 1.0 / 50.0))
            throw invalid_config("--dt-over-tau must lie in (0, 1/50]");
    }

    /// Thresholds after applying the preset; b_d only when `need_b_d`.
    GateConfig gate(bool need_b_d) const {
        std::optional<double> bu = b_u;
        std::optional<double> bd = b_d;
        std::optional<double> iu = i_u;
        if (preset == "default") {
            bu = bu.value_or(4.0);
            bd = bd.value_or(2.0);
            iu = iu.value_or(4.2);
        }
        if (!bu || !iu) throw invalid_config("--bu and --iu are required without a preset");
        if (need_b_d && !bd) throw invalid_config("--bd is required for the bit-flip time");
        // without b_d only b_e = b_u - i_u is used; any lower threshold satisfies the gate invariants
        GateConfig g{*bu, bd.value_or(*bu - 1.0), *iu};
        g.validate();
        return g;
    }
};

// ---------------------------------------------------------------------------
// Output helpers

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return {buf, r.ptr};
}

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

/// Writes to the file at `path`, or to `fallback` when the path is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
    if (path.empty()) {
        write(fallback);
        return;
    }
    std::ofstream f(path);
    if (!f) throw invalid_config("cannot open output file " + path);
    f.imbue(std::locale::classic());
    write(f);
    if (!f) throw invalid_config("failed writing " + path);
}

inline std::string with_extension(const std::string& path, const std::string& ext) {
    return std::filesystem::path(path).replace_extension(ext).string();
}

inline std::string with_suffix(const std::string& stem, const std::string& suffix) {
    const std::filesystem::path p(stem.empty() ? "trace" : stem);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// ---------------------------------------------------------------------------
// mfpt

inline json mfpt_report(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.what != "t1" && cfg.what != "t2" && cfg.what != "both")
        throw invalid_config("--what must be t1, t2 or both");
    const bool want_t2 = cfg.what != "t1";
    const auto g = cfg.gate(want_t2);
    const auto m = derive_margins(g);
    const std::optional<double> c_e = want_t2 ? std::optional(m.c_e) : std::nullopt;
    const auto rb = ReducedBoundaries::from_margins(m.b_e, c_e, cfg.sigma);
    const auto q = cfg.quadrature();

    json r;
    r["regime"] = std::string(to_string(m.regime));
    r["b_e"] = m.b_e;
    r["c_e"] = opt_json(c_e);
    r["b_e_bar"] = rb.b_e_bar;
    r["c_e_bar"] = opt_json(rb.c_e_bar);
    r["phi"] = phi_below(m.b_e, cfg.sigma);
    r["normalization_mode"] = std::string(to_string(cfg.normalization));
    r["tau_s"] = cfg.tau;
    if (cfg.what != "t2") {
        const auto t1 = mfpt_t1_reduced(rb, q);
        r["t1_over_tau"] = t1.value;
        r["t1_s"] = t1.value * cfg.tau;
        r["t1_rel_error"] = t1.rel_error;
        r["t1_tail_bound"] = t1.tail_bound;
    }
    if (want_t2) {
        const auto t2 = mfpt_t2_reduced(rb, q);
        r["t2_over_tau"] = t2.value;
        r["t2_s"] = t2.value * cfg.tau;
        r["t2_rel_error"] = t2.rel_error;
        r["t2_tail_bound"] = t2.tail_bound;
    }
    return r;
}

inline void write_flat_csv(std::ostream& os, const json& r) {
    bool first = true;
    for (const auto& [k, v] : r.items()) {
        os << (first ? "" : ",") << k;
        first = false;
    }
    os << '\n';
    first = true;
    for (const auto& [k, v] : r.items()) {
        os << (first ? "" : ",");
        first = false;
        if (v.is_number())
            os << num(v.get<double>());
        else if (v.is_string())
            os << v.get<std::string>();
    }
    os << '\n';
}

inline int cmd_mfpt(const RunConfig& cfg, std::ostream& out) {
    const auto r = mfpt_report(cfg);
    emit(cfg.out, out, [&](std::ostream& os) {
        if (cfg.format == Format::json)
            os << r.dump(2) << '\n';
        else
            write_flat_csv(os, r);
    });
    return ok;
}

// ---------------------------------------------------------------------------
// curve

inline json timing_json(const TimingSolution& s, const ErrorModelParams& p, double eps, double tau) {
    json j;
    j["eps"] = eps;
    j["phi"] = p.phi;
    j["t1_over_tau"] = p.t1 / tau;
    j["t2_over_tau"] = p.t2 / tau;
    j["t_w_over_tau"] = s.t_w / tau;
    j["t_h_over_tau"] = s.t_h / tau;
    j["t_m_over_tau"] = s.t_m / tau;
    j["eps_m"] = s.eps_m;
    j["minimum"] = s.kind == MinimumKind::interior ? "interior"
                   : s.kind == MinimumKind::boundary ? "boundary"
                                                     : "degenerate";
    if (s.window) {
        j["window"] = {{"t_is_over_tau", s.window->t_is / tau}, {"t_ie_over_tau", s.window->t_ie / tau}};
    } else {
        j["window"] = nullptr;
    }
    json sec;
    sec["tau"] = tau;
    sec["t1"] = p.t1;
    sec["t2"] = p.t2;
    sec["t_w"] = s.t_w;
    sec["t_h"] = s.t_h;
    sec["t_m"] = s.t_m;
    sec["window"] = s.window ? json{{"t_is", s.window->t_is}, {"t_ie", s.window->t_ie}} : json(nullptr);
    j["seconds"] = sec;
    return j;
}

struct CurveData {
    std::vector<double> t_over_tau, p1, p2, pe;
    json sidecar;
};

inline CurveData curve_data(const RunConfig& cfg) {
    cfg.validate();
    const auto g = cfg.gate(true);
    const auto p = model_params(g, cfg.noise(), cfg.quadrature());
    CurveData d;
    for (std::size_t i = 0; i < cfg.points; ++i) {
        const double x = cfg.tmax_over_tau * static_cast<double>(i) / static_cast<double>(cfg.points - 1);
        const double t = x * cfg.tau;
        d.t_over_tau.push_back(x);
        d.p1.push_back(p_delayed(t, p));
        d.p2.push_back(p_bitflip(t, p));
        d.pe.push_back(d.p1.back() + d.p2.back());
    }
    d.sidecar = timing_json(solve_timing(cfg.eps, p), p, cfg.eps, cfg.tau);
    d.sidecar["normalization_mode"] = std::string(to_string(cfg.normalization));
    d.sidecar["gate"] = {{"b_u", g.b_u}, {"b_d", g.b_d}, {"i_u", g.i_u}};
    d.sidecar["noise"] = {{"sigma", cfg.sigma}, {"tau", cfg.tau}};
    return d;
}

inline int cmd_curve(const RunConfig& cfg, std::ostream& out) {
    const auto d = curve_data(cfg);
    if (cfg.format == Format::json) {
        json j = d.sidecar;
        j["t_over_tau"] = d.t_over_tau;
        j["p1"] = d.p1;
        j["p2"] = d.p2;
        j["pe"] = d.pe;
        emit(cfg.out, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
        return ok;
    }
    emit(cfg.out, out, [&](std::ostream& os) {
        os << "t_over_tau,p1,p2,pe\n";
        for (std::size_t i = 0; i < d.t_over_tau.size(); ++i)
            os << num(d.t_over_tau[i]) << ',' << num(d.p1[i]) << ',' << num(d.p2[i]) << ',' << num(d.pe[i]) << '\n';
    });
    if (!cfg.out.empty())
        emit(with_extension(cfg.out, ".json"), out, [&](std::ostream& os) { os << d.sidecar.dump(2) << '\n'; });
    return ok;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    double sigma_over_be;
    double eps;
    double t_w_over_tau;
    std::optional<double> t_w_mc_over_tau;
};

/// Surviving paths needed at the quantile before a Monte Carlo wait time is reported.
inline constexpr double sweep_min_tail_paths = 100.0;

inline std::vector<SweepRow> sweep_rows(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.ratios.empty()) throw invalid_config("--ratios must be non-empty");
    if (cfg.eps_list.empty()) throw invalid_config("--eps-list must be non-empty");
    for (double e : cfg.eps_list)
        if (!(e > 0.0 && e < 1.0)) throw invalid_config("--eps-list entries must lie in (0, 1)");
    for (double r : cfg.ratios)
        if (!(r > 0.0) || !std::isfinite(r)) throw invalid_config("--ratios entries must be > 0");

    const auto g = cfg.gate(false);
    const auto m = derive_margins(g);
    std::vector<SweepRow> rows;
    for (double ratio : cfg.ratios) {
        const NoiseSpec noise{ratio * std::abs(m.b_e), cfg.tau};
        const auto rb = ReducedBoundaries::from_margins(m.b_e, std::nullopt, noise.sigma);
        const double phi = phi_below(m.b_e, noise.sigma);
        const double t1 = mfpt_t1(rb, cfg.tau, cfg.quadrature());

        std::optional<FptEnsemble> ens;
        if (cfg.mc) {
            McConfig mc;
            mc.n_paths = cfg.paths;
            mc.dt = cfg.dt();
            mc.seed = cfg.seed;
            mc.max_time = default_max_time(noise, t1);
            mc.workers = cfg.worker_count();
            ens = simulate_delayed_fpt(noise, m.b_e, mc);
        }
        for (double eps : cfg.eps_list) {
            // t_w = T1 ln(phi / eps), zero once phi itself is acceptable
            SweepRow row{ratio, eps, phi > eps ? t1 * std::log(phi / eps) / cfg.tau : 0.0, std::nullopt};
            if (ens && eps / phi * static_cast<double>(ens->total()) >= sweep_min_tail_paths) {
                if (const auto tw = empirical_wait_time(*ens, phi, eps)) row.t_w_mc_over_tau = *tw / cfg.tau;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
    const auto rows = sweep_rows(cfg);
    emit(cfg.out, out, [&](std::ostream& os) {
        if (cfg.format == Format::json) {
            json arr = json::array();
            for (const auto& r : rows) {
                json j{{"sigma_over_be", r.sigma_over_be}, {"eps", r.eps}, {"t_w_over_tau", r.t_w_over_tau}};
                if (cfg.mc) j["t_w_mc_over_tau"] = opt_json(r.t_w_mc_over_tau);
                arr.push_back(j);
            }
            os << arr.dump(2) << '\n';
            return;
        }
        os << "sigma_over_be,eps,t_w_over_tau" << (cfg.mc ? ",t_w_mc_over_tau" : "") << '\n';
        for (const auto& r : rows) {
            os << num(r.sigma_over_be) << ',' << num(r.eps) << ',' << num(r.t_w_over_tau);
            if (cfg.mc) os << ',' << (r.t_w_mc_over_tau ? num(*r.t_w_mc_over_tau) : "");
            os << '\n';
        }
    });
    return ok;
}

// ---------------------------------------------------------------------------
// validate

enum class CheckStatus { pass, fail, inconclusive, info };

inline std::string_view to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::inconclusive: return "INCONCLUSIVE";
    case CheckStatus::info: return "INFO";
    }
    return "INFO";
}

struct Check {
    std::string name;
    CheckStatus status;
    double measured;
    double reference;
    double tolerance; ///< allowed |measured - reference|, or the p-value floor for KS checks
    std::string detail;
};

/// Agreement of a Monte Carlo mean with a reference within max(2 %, 3 SE).
inline Check mean_check(std::string name, const FptEnsemble& ens, double reference) {
    const double tol = std::max(0.02 * reference, 3.0 * ens.std_err);
    Check c{std::move(name), CheckStatus::pass, ens.mean, reference, tol, {}};
    const double dev = ens.mean - reference;
    c.detail = "deviation " + num(dev / reference * 100.0) + " % (" + num(dev / ens.std_err) + " SE), " +
               std::to_string(ens.samples.size()) + " paths";
    if (ens.censoring_warning()) {
        c.status = CheckStatus::inconclusive;
        c.detail += ", censored fraction " + num(ens.censored_fraction());
    } else if (std::abs(dev) > tol) {
        c.status = CheckStatus::fail;
    }
    return c;
}

inline constexpr double ks_p_floor = 1e-3;

inline Check ks_check(std::string name, const FptEnsemble& ens, std::size_t max_samples) {
    if (ens.samples.size() < ks_min_samples)
        return {std::move(name), CheckStatus::inconclusive, 0.0, 0.0, ks_p_floor, "too few uncensored samples"};
    const std::vector<double> sample(ens.samples.begin(),
                                     ens.samples.begin() + static_cast<std::ptrdiff_t>(
                                                               std::min(max_samples, ens.samples.size())));
    const auto ks = ks_exponential(sample);
    Check c{std::move(name), ks.p_value > ks_p_floor ? CheckStatus::pass : CheckStatus::fail, ks.p_value,
            ks_p_floor, ks_p_floor, {}};
    c.detail = "D = " + num(ks.statistic) + ", n = " + std::to_string(ks.n) + ", fitted mean " +
               num(ks.fitted_mean) + " s; " + ks.note;
    return c;
}

/// Which T1 normalization the Monte Carlo mean supports.
inline Check normalization_check(const FptEnsemble& ens, const ReducedBoundaries& rb, double tau) {
    QuadratureConfig derived;
    QuadratureConfig printed;
    printed.normalization = Normalization::as_printed;
    const double td = mfpt_t1(rb, tau, derived);
    const double tp = mfpt_t1(rb, tau, printed);
    const double tol = std::max(0.02 * td, 3.0 * ens.std_err);
    const bool d_ok = std::abs(ens.mean - td) <= std::max(0.02 * td, 3.0 * ens.std_err);
    const bool p_ok = std::abs(ens.mean - tp) <= std::max(0.02 * tp, 3.0 * ens.std_err);
    std::string verdict = d_ok && !p_ok   ? "as-derived"
                          : p_ok && !d_ok ? "as-printed"
                          : d_ok && p_ok  ? "both (boundary too close to 0 to separate)"
                                          : "neither";
    return {"normalization", CheckStatus::info, ens.mean, td, tol,
            "MC supports " + verdict + "; as-derived " + num((ens.mean / td - 1.0) * 100.0) + " %, as-printed " +
                num((ens.mean / tp - 1.0) * 100.0) + " %"};
}

struct ValidationReport {
    std::vector<Check> checks;
    int exit_status = ok;
};

inline ValidationReport run_validation(const RunConfig& cfg) {
    cfg.validate();
    ValidationReport rep;
    if (cfg.paths < ks_min_samples) {
        rep.checks.push_back({"sample_size", CheckStatus::inconclusive, static_cast<double>(cfg.paths),
                              static_cast<double>(ks_min_samples), 0.0,
                              "insufficient samples: --paths must be at least " + std::to_string(ks_min_samples)});
        rep.exit_status = inconclusive;
        return rep;
    }
    const auto g = cfg.gate(true);
    const auto m = derive_margins(g);
    const auto noise = cfg.noise();
    const auto rb = ReducedBoundaries::from_margins(m.b_e, m.c_e, cfg.sigma);
    const double t1 = mfpt_t1(rb, cfg.tau, cfg.quadrature());
    const double t2 = mfpt_t2(rb, cfg.tau, cfg.quadrature());

    McConfig mc;
    mc.n_paths = cfg.paths;
    mc.dt = cfg.dt();
    mc.seed = cfg.seed;
    mc.workers = cfg.worker_count();
    mc.max_time = default_max_time(noise, std::max(t1, mfpt_t1(rb, cfg.tau)));
    const auto delayed = simulate_delayed_fpt(noise, m.b_e, mc);
    mc.max_time = default_max_time(noise, t2);
    const auto bitflip = simulate_bitflip_fpt(noise, m.b_e, m.c_e, mc);

    rep.checks.push_back(mean_check("t1_oracle", delayed, t1));
    rep.checks.push_back(normalization_check(delayed, rb, cfg.tau));
    rep.checks.push_back(mean_check("t2_oracle", bitflip, t2));
    rep.checks.push_back(ks_check("ks_delayed", delayed, cfg.ks_samples));
    rep.checks.push_back(ks_check("ks_bitflip", bitflip, cfg.ks_samples));

    bool failed = false;
    bool unsure = false;
    for (const auto& c : rep.checks) {
        failed |= c.status == CheckStatus::fail;
        unsure |= c.status == CheckStatus::inconclusive;
    }
    rep.exit_status = failed ? check_failed : unsure ? inconclusive : ok;
    return rep;
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& out) {
    const auto rep = run_validation(cfg);
    emit(cfg.out, out, [&](std::ostream& os) {
        if (cfg.format == Format::json) {
            json arr = json::array();
            for (const auto& c : rep.checks)
                arr.push_back({{"name", c.name},
                               {"status", std::string(to_string(c.status))},
                               {"measured", c.measured},
                               {"reference", c.reference},
                               {"tolerance", c.tolerance},
                               {"detail", c.detail}});
            os << json{{"checks", arr}, {"exit_status", rep.exit_status}}.dump(2) << '\n';
            return;
        }
        for (const auto& c : rep.checks)
            os << to_string(c.status) << ' ' << c.name << ": measured " << num(c.measured) << ", reference "
               << num(c.reference) << ", tolerance " << num(c.tolerance) << "; " << c.detail << '\n';
    });
    return rep.exit_status;
}

// ---------------------------------------------------------------------------
// trace

struct TraceRun {
    Waveform input;
    InverterRun result;
};

struct TraceData {
    TraceRun clean;
    TraceRun noisy;
};

inline TraceData trace_data(const RunConfig& cfg) {
    cfg.validate(true);
    if (!(cfg.edge_over_tau >= 0.0) || !(cfg.rise_over_tau >= 0.0))
        throw invalid_config("--edge-over-tau and --rise-over-tau must be >= 0");
    if (!(cfg.tmax_over_tau > cfg.edge_over_tau + cfg.rise_over_tau))
        throw invalid_config("--tmax-over-tau must exceed the edge");
    const auto g = cfg.gate(true);
    const double dt = cfg.dt();
    const double t_edge = cfg.edge_over_tau * cfg.tau;
    const double rise = cfg.rise_over_tau * cfg.tau;
    const auto clean = synth_step_input(0.0, g.i_u, t_edge, rise, cfg.tmax_over_tau * cfg.tau, dt);

    InverterOptions opts;
    opts.edge = DriveEdge{t_edge, rise};
    TraceData d{{clean, run_inverter(clean, g, opts)}, {clean, {}}};
    if (cfg.sigma > 0.0) {
        const auto noise = cfg.noise();
        d.noisy.input = add_noise(clean, noise, cfg.seed);
        opts.bridge = BridgeDetection{OuStepper(noise, dt).step_variance(), cfg.seed};
    }
    d.noisy.result = run_inverter(d.noisy.input, g, opts);
    return d;
}

inline json events_json(const std::vector<SwitchEvent>& events) {
    json arr = json::array();
    for (const auto& e : events)
        arr.push_back({{"time_s", e.time},
                       {"kind", std::string(to_string(e.kind))},
                       {"classification", std::string(to_string(e.classification))}});
    return arr;
}

inline void write_trace_csv(std::ostream& os, const TraceRun& r) {
    os << "time_s,input_v,output_v\n";
    for (std::size_t k = 0; k < r.input.values.size(); ++k)
        os << num(r.input.time(k)) << ',' << num(r.input.values[k]) << ',' << num(r.result.output.values[k]) << '\n';
}

inline int cmd_trace(const RunConfig& cfg, std::ostream& out) {
    const auto d = trace_data(cfg);
    const json events{{"seed", cfg.seed},
                      {"clean", events_json(d.clean.result.events)},
                      {"noisy", events_json(d.noisy.result.events)}};
    if (cfg.format == Format::json) {
        auto run_json = [](const TraceRun& r) {
            std::vector<double> t(r.input.values.size());
            for (std::size_t k = 0; k < t.size(); ++k) t[k] = r.input.time(k);
            return json{{"time_s", t},
                        {"input_v", r.input.values},
                        {"output_v", r.result.output.values},
                        {"events", events_json(r.result.events)}};
        };
        const json j{{"seed", cfg.seed}, {"clean", run_json(d.clean)}, {"noisy", run_json(d.noisy)}};
        emit(cfg.out.empty() ? std::string{} : with_extension(cfg.out, ".json"), out,
             [&](std::ostream& os) { os << j.dump(2) << '\n'; });
        return ok;
    }
    emit(with_suffix(cfg.out, "_clean.csv"), out, [&](std::ostream& os) { write_trace_csv(os, d.clean); });
    emit(with_suffix(cfg.out, "_noisy.csv"), out, [&](std::ostream& os) { write_trace_csv(os, d.noisy); });
    emit(with_suffix(cfg.out, "_events.json"), out, [&](std::ostream& os) { os << events.dump(2) << '\n'; });
    return ok;
}

// ---------------------------------------------------------------------------
// Entry point

inline constexpr const char* seed_env = "NOISEGATE_SEED";

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Noise-limited switching model for threshold logic gates"};
    app.name("noisegate");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "flat key=value file; flags override it");

    RunConfig cfg;
    std::string format = "csv";
    std::string normalization = "as-derived";
    app.add_option("--sigma", cfg.sigma, "noise standard deviation [V]")->capture_default_str();
    app.add_option("--tau", cfg.tau, "noise correlation time [s]")->capture_default_str();
    app.add_option("--bu", cfg.b_u, "upper switching threshold [V]");
    app.add_option("--bd", cfg.b_d, "lower switching threshold [V]");
    app.add_option("--iu", cfg.i_u, "high input level [V]");
    app.add_option("--preset", cfg.preset, "fill unset thresholds: default (b_u 4.0, b_d 2.0, i_u 4.2 V) or none")
        ->check(CLI::IsMember({"default", "none"}))
        ->capture_default_str();
    app.add_option("--eps", cfg.eps, "target error probability")->capture_default_str();
    app.add_option("--tmax-over-tau", cfg.tmax_over_tau, "time span in units of tau")->capture_default_str();
    app.add_option("--points", cfg.points, "time grid points")->capture_default_str();
    app.add_option("--paths", cfg.paths, "Monte Carlo paths")->capture_default_str();
    app.add_option("--dt-over-tau", cfg.dt_over_tau, "simulation step in units of tau")->capture_default_str();
    app.add_option("--seed", cfg.seed, "random seed")->envname(seed_env)->capture_default_str();
    app.add_option("--workers", cfg.workers, "Monte Carlo threads (0 = all cores)")->capture_default_str();
    app.add_option("--out", cfg.out, "output path (stdout when empty); trace uses it as a file stem");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--normalization", normalization, "T1 normalization")
        ->check(CLI::IsMember({"as-derived", "as-printed"}))
        ->capture_default_str();
    app.add_option("--what", cfg.what, "mfpt: t1, t2 or both")->capture_default_str();
    app.add_option("--ratios", cfg.ratios, "sweep: sigma/|b_e| grid")->delimiter(',');
    app.add_option("--eps-list", cfg.eps_list, "sweep: error probabilities")->delimiter(',');
    app.add_flag("--mc", cfg.mc, "sweep: add a Monte Carlo wait-time column");
    app.add_option("--ks-samples", cfg.ks_samples, "validate: samples used by the KS tests")->capture_default_str();
    app.add_option("--edge-over-tau", cfg.edge_over_tau, "trace: input edge time")->capture_default_str();
    app.add_option("--rise-over-tau", cfg.rise_over_tau, "trace: input rise time")->capture_default_str();

    auto* mfpt = app.add_subcommand("mfpt", "mean first-passage times T1 and T2");
    auto* curve = app.add_subcommand("curve", "P1, P2 and P_e on a time grid, with the timing solution");
    auto* sweep = app.add_subcommand("sweep", "wait time versus sigma/|b_e| for several error probabilities");
    auto* validate = app.add_subcommand("validate", "Monte Carlo checks of the quadrature and the exponential model");
    auto* trace = app.add_subcommand("trace", "clean and noisy inverter step responses");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }

    try {
        cfg.format = format == "json" ? Format::json : Format::csv;
        cfg.normalization = parse_normalization(normalization);
        if (mfpt->parsed()) return cmd_mfpt(cfg, out);
        if (curve->parsed()) return cmd_curve(cfg, out);
        if (sweep->parsed()) return cmd_sweep(cfg, out);
        if (validate->parsed()) return cmd_validate(cfg, out);
        if (trace->parsed()) return cmd_trace(cfg, out);
    } catch (const quadrature_failure& e) {
        err << "numerical failure: " << e.what() << " (achieved " << num(e.achieved_rel_error()) << ")\n";
        return numerical_error;
    } catch (const numerical_failure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_error;
    } catch (const error& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }
    return config_error;
}

} // namespace noisegate::cli
