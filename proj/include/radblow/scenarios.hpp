#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "radblow/config.hpp"
#include "radblow/coupled_solver.hpp"
#include "radblow/initial_data.hpp"
#include "radblow/output.hpp"
#include "radblow/scalar_solver.hpp"
#include "radblow/version.hpp"

//
// Scenario drivers. Each scenario produces ResultRows (one fixed CSV schema
// across all scenarios), per-run history CSVs, optional snapshots, and a
// manifest. Rows carry a flag naming the first violated mirrored property,
// empty when everything held.
//

namespace radblow {

struct ResultRow {
    std::string scenario;
    int row_id = 0;
    double chi = 0.0;
    int dim = 0;
    double radius = 0.0;
    int cells = 0;
    double peak = std::nan("");   // M
    double mass = std::nan("");   // m
    double eps = std::nan("");
    double dt = std::nan("");     // temporal-study step size
    std::string outcome;
    double T_detect = std::nan("");
    double extrapolated_T = std::nan("");
    double ode_bound = std::nan("");
    double k_min = std::nan("");
    double T1 = std::nan("");
    double T0 = std::nan("");
    double min_gap = std::nan("");
    double residual = std::nan("");
    double error = std::nan("");
    double order = std::nan("");
    double max_linf = std::nan("");
    double max_lp = std::nan("");
    std::string flag;
    double wall_seconds = 0.0;  // manifest log only, never serialized to CSV
};

inline const char* results_csv_header() {
    return "scenario,row,chi,n,R,N,M,m,eps,dt,outcome,T_detect,extrapolated_T,ode_bound,"
           "k_min,T1,T0,min_gap,residual,error,order,max_linf,max_lp,flag";
}

inline std::string to_csv_line(const ResultRow& r) {
    std::string s;
    s += r.scenario;
    s += "," + std::to_string(r.row_id);
    s += "," + csv_double(r.chi);
    s += "," + std::to_string(r.dim);
    s += "," + csv_double(r.radius);
    s += "," + std::to_string(r.cells);
    for (double v : {r.peak, r.mass, r.eps, r.dt}) s += "," + csv_double(v);
    s += "," + r.outcome;
    for (double v : {r.T_detect, r.extrapolated_T, r.ode_bound, r.k_min, r.T1, r.T0, r.min_gap,
                     r.residual, r.error, r.order, r.max_linf, r.max_lp})
        s += "," + csv_double(v);
    s += "," + r.flag;
    return s;
}

struct ScenarioResult {
    std::vector<ResultRow> rows;
    bool aborted = false;
    std::string error;
    std::string out_dir;
};

namespace detail {

template <typename F>
void parallel_runs(int workers, int jobs, F&& body) {
    workers = std::min(workers, jobs);
    if (workers <= 1) {
        for (int i = 0; i < jobs; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= jobs) return;
                try {
                    body(i);
                } catch (...) {
                    std::scoped_lock lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::string scalar_history_csv(const std::vector<ScalarHistorySample>& hist) {
    std::string s = "t,linf,lp,k,j_margin,min_w\n";
    for (const auto& h : hist) {
        s += csv_double(h.t);
        for (double v : {h.linf, h.lp, h.k, h.j_margin, h.min_w}) s += "," + csv_double(v);
        s += "\n";
    }
    return s;
}

inline std::string coupled_history_csv(const std::vector<CoupledHistorySample>& hist) {
    std::string s = "t,lp_u,linf_u,min_v,linf_v,mass_drift,residual\n";
    for (const auto& h : hist) {
        s += csv_double(h.t);
        for (double v : {h.lp_u, h.linf_u, h.min_v, h.linf_v, h.mass_drift, h.residual})
            s += "," + csv_double(v);
        s += "\n";
    }
    return s;
}

inline std::string comparison_history_csv(const std::vector<ComparisonSample>& hist) {
    std::string s = "t,k,normalized_gap\n";
    for (const auto& h : hist)
        s += csv_double(h.t) + "," + csv_double(h.k) + "," + csv_double(h.normalized_gap) + "\n";
    return s;
}

inline double fit_loglog_slope(const std::vector<std::pair<double, double>>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        const double lx = std::log(x), ly = std::log(std::max(y, 1e-300));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double n = static_cast<double>(pts.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct Manufactured {
    double radius;
    int dim;
    double chi;
    double lambda_coeff;

    double value(double r, double t) const {
        return std::exp(-t) * (1.0 + std::cos(M_PI * r / radius)) + 2.0;
    }
    double source(double r, double t) const {
        const double a = M_PI / radius;
        const double wt = -std::exp(-t) * (1.0 + std::cos(a * r));
        const double lap = std::exp(-t) * (-a * a * std::cos(a * r) - (dim - 1) * a * std::sin(a * r) / r);
        return wt - lap - lambda_coeff * std::pow(value(r, t), chi + 1.0);
    }
    Profile sample(const GridPtr& g, double t) const {
        Profile p(g);
        for (int i = 0; i < g->cells; ++i) p[i] = value(g->centers[static_cast<size_t>(i)], t);
        return p;
    }
};

inline double outer_max_error(const Profile& got, const Profile& exact) {
    const int N = got.size();
    const int start = N / 10;  // outer 90%: the center ring keeps the midpoint-geometry defect
    double e = 0.0;
    for (int i = start; i < N; ++i) e = std::max(e, std::abs(got[i] - exact[i]));
    return e;
}

inline ResultRow base_row(const ScenarioConfig& cfg, int id) {
    ResultRow r;
    r.scenario = to_string(cfg.scenario);
    r.row_id = id;
    r.chi = cfg.chi;
    r.dim = cfg.dim;
    r.radius = cfg.radius;
    r.cells = cfg.cells;
    return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario (a): blow-up sweep over the peak parameter M
// ---------------------------------------------------------------------------

inline std::vector<ResultRow> run_limit_blowup_sweep(const ScenarioConfig& cfg, OutputWriter& out,
                                                     std::vector<std::string>& log) {
    const GridPtr grid = make_grid(cfg.dim, cfg.radius, cfg.cells);
    const int n = static_cast<int>(cfg.peak_list.size());
    std::vector<ResultRow> rows(static_cast<size_t>(n));
    std::vector<std::string> histories(static_cast<size_t>(n));

    detail::parallel_runs(cfg.workers, n, [&](int i) {
        const auto t0 = std::chrono::steady_clock::now();
        const double M = cfg.peak_list[static_cast<size_t>(i)];
        InitialDataParams params{cfg.chi, cfg.dim, cfg.radius, M};
        const W0Construction c = construct_w0(grid, params);
        const double lambda = c.consts.lambda;
        const double q = cfg.j_q > 0.0 ? cfg.j_q : default_j_exponent(cfg.chi, cfg.dim);
        const double eta = cfg.j_eta > 0.0 ? cfg.j_eta : default_j_eta(lambda, c.consts.mu, cfg.chi, q);

        ScalarMonitors mon;
        mon.lp_exponent = cfg.effective_p_norm();
        mon.track_j = true;
        mon.j_eta = eta;
        mon.j_q = q;
        mon.stride = cfg.history_stride;

        ScalarState s{c.w0, 0.0, ScalarMode::nonlocal, cfg.chi, cfg.mass};
        const BlowupReport rep = run(std::move(s), cfg.step_control(), mon);
        const T1Detection t1 = detect_T1(rep, lambda);

        ResultRow r = detail::base_row(cfg, i);
        r.peak = M;
        r.mass = cfg.mass;
        r.outcome = to_string(rep.outcome);
        r.T_detect = rep.T_detect;
        if (rep.extrapolated_T) r.extrapolated_T = *rep.extrapolated_T;
        r.ode_bound = ode_minorant_blowup_time(c.peak_value, lambda, cfg.chi);
        r.k_min = 1e300;
        for (const auto& h : rep.history) r.k_min = std::min(r.k_min, h.k);
        r.T0 = t1.T0;
        if (t1.t1) r.T1 = *t1.t1;
        r.max_linf = 0.0;
        r.max_lp = 0.0;
        for (const auto& h : rep.history) {
            r.max_linf = std::max(r.max_linf, h.linf);
            r.max_lp = std::max(r.max_lp, h.lp);
        }

        // The gain window is judged on the pre-terminal part of the run: once
        // the blown-up peak cell dominates the chi-integral quadrature (the
        // final ~1e-6 fraction of the horizon) the discrete k collapses even
        // though the continuum integral stays bounded, so that stretch carries
        // no information about the window.
        bool window_ok = true;
        const double window_end = std::min(std::pow(cfg.mass, -2.0), 0.9 * rep.T_detect);
        for (const auto& h : rep.history)
            if (h.t <= window_end && h.k < 2.0 * lambda) window_ok = false;
        if (rep.history.front().k < 2.0 * lambda)
            r.flag = "window_failed_at_t0";
        else if (!window_ok)
            r.flag = "window_failed";
        else if (rep.outcome != RunOutcome::blew_up)
            r.flag = "no_blowup";
        else if (rep.T_detect > 1.1 * r.ode_bound)
            r.flag = "ode_minorant_bound";
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows[static_cast<size_t>(i)] = std::move(r);
        histories[static_cast<size_t>(i)] = detail::scalar_history_csv(rep.history);
    });

    // larger peaks must blow up earlier
    for (int i = 1; i < n; ++i) {
        auto& cur = rows[static_cast<size_t>(i)];
        const auto& prev = rows[static_cast<size_t>(i - 1)];
        if (cur.flag.empty() && prev.flag.empty() && cur.peak > prev.peak && !(cur.T_detect < prev.T_detect))
            cur.flag = "monotone_T_detect";
    }

    for (int i = 0; i < n; ++i) {
        out.write_file("history_row" + std::to_string(i) + ".csv", histories[static_cast<size_t>(i)]);
        log.push_back("row " + std::to_string(i) + ": " +
                      csv_double(rows[static_cast<size_t>(i)].wall_seconds) + " s");
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Scenario (b): synchronized comparison with the local-power minorant
// ---------------------------------------------------------------------------

inline std::vector<ResultRow> run_comparison_check(const ScenarioConfig& cfg, OutputWriter& out,
                                                   std::vector<std::string>& log) {
    const GridPtr grid = make_grid(cfg.dim, cfg.radius, cfg.cells);
    InitialDataParams params{cfg.chi, cfg.dim, cfg.radius, cfg.peak};
    const W0Construction c = construct_w0(grid, params);

    const auto t0 = std::chrono::steady_clock::now();
    const ComparisonReport rep = run_comparison(c.w0, cfg.mass, cfg.chi, c.consts.lambda,
                                                cfg.step_control(), cfg.history_stride);

    ResultRow r = detail::base_row(cfg, 0);
    r.peak = cfg.peak;
    r.mass = cfg.mass;
    r.outcome = to_string(rep.outcome);
    r.T_detect = rep.t_reached;
    r.min_gap = rep.min_normalized_gap;
    r.k_min = 1e300;
    for (const auto& h : rep.history) r.k_min = std::min(r.k_min, h.k);
    if (rep.min_normalized_gap < -1e-6) r.flag = "comparison_gap";
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    out.write_file("history_row0.csv", detail::comparison_history_csv(rep.history));
    log.push_back("row 0: " + csv_double(r.wall_seconds) + " s");
    return {r};
}

// ---------------------------------------------------------------------------
// Scenario (c): coupled runs over the eps ladder
// ---------------------------------------------------------------------------

inline std::vector<ResultRow> run_singular_limit_ladder(const ScenarioConfig& cfg, OutputWriter& out,
                                                        std::vector<std::string>& log) {
    const GridPtr grid = make_grid(cfg.dim, cfg.radius, cfg.cells);
    InitialDataParams params{cfg.chi, cfg.dim, cfg.radius, cfg.peak};
    const W0Construction c = construct_w0(grid, params);

    std::vector<double> ladder = cfg.eps_list;
    std::sort(ladder.begin(), ladder.end(), std::greater<>());  // toward eps -> 0

    Profile u0(grid);
    const double volume = integrate(Profile(grid, 1.0));
    if (cfg.u0_kind == "uniform") {
        for (auto& v : u0.values) v = cfg.mass / volume;
    } else {
        const double gain = cfg.mass / integrate(c.w0, cfg.chi);
        for (int i = 0; i < grid->cells; ++i) u0[i] = gain * std::pow(c.w0[i], cfg.chi);
    }

    const int n = static_cast<int>(ladder.size());
    std::vector<ResultRow> rows(static_cast<size_t>(n));
    std::vector<std::string> histories(static_cast<size_t>(n));
    const double p = cfg.effective_p_norm();

    detail::parallel_runs(cfg.workers, n, [&](int i) {
        const auto t0 = std::chrono::steady_clock::now();
        CoupledMonitors mon;
        mon.stride = cfg.history_stride;
        mon.sample_time = cfg.sample_time;
        const CoupledRunReport rep =
            run_coupled(u0, c.w0, ladder[static_cast<size_t>(i)], cfg.chi, cfg.step_control(), p, mon);

        ResultRow r = detail::base_row(cfg, i);
        r.peak = cfg.peak;
        r.mass = cfg.mass;
        r.eps = ladder[static_cast<size_t>(i)];
        r.outcome = to_string(rep.outcome);
        r.T_detect = rep.T_detect;
        r.residual = rep.residual_at_sample;
        r.max_linf = 0.0;
        r.max_lp = 0.0;
        for (const auto& h : rep.history) {
            r.max_linf = std::max(r.max_linf, h.linf_u);
            r.max_lp = std::max(r.max_lp, h.lp_u);
        }
        if (rep.max_mass_drift > 1e-9) r.flag = "mass_conservation";
        else if (rep.min_floor_ratio < 1.0 - 1e-6) r.flag = "v_lower_bound";
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows[static_cast<size_t>(i)] = std::move(r);
        histories[static_cast<size_t>(i)] = detail::coupled_history_csv(rep.history);
    });

    for (int i = 1; i < n; ++i) {
        auto& cur = rows[static_cast<size_t>(i)];
        const auto& prev = rows[static_cast<size_t>(i - 1)];
        if (!cur.flag.empty() || !prev.flag.empty()) continue;
        if (cur.max_lp < prev.max_lp) cur.flag = "ladder_sup_norm";
        else if (std::isfinite(cur.residual) && std::isfinite(prev.residual) &&
                 !(cur.residual < prev.residual))
            cur.flag = "ladder_residual";
    }

    for (int i = 0; i < n; ++i) {
        out.write_file("history_row" + std::to_string(i) + ".csv", histories[static_cast<size_t>(i)]);
        log.push_back("row " + std::to_string(i) + ": " +
                      csv_double(rows[static_cast<size_t>(i)].wall_seconds) + " s");
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Scenario (d): empirical bracket for the mass threshold
// ---------------------------------------------------------------------------

// Probe: does the k >= 2 lambda window survive until T0 = min(m^-2, horizon)?
inline bool mass_window_holds(const W0Construction& c, double chi, double m,
                              const StepControl& ctrl, ResultRow* row_out = nullptr) {
    ScalarMonitors mon;
    mon.stride = 1;
    ScalarState s{c.w0, 0.0, ScalarMode::nonlocal, chi, m};
    const BlowupReport rep = run(std::move(s), ctrl, mon);
    const T1Detection t1 = detect_T1(rep, c.consts.lambda);
    if (row_out) {
        row_out->mass = m;
        row_out->outcome = to_string(rep.outcome);
        row_out->T_detect = rep.T_detect;
        row_out->T0 = t1.T0;
        if (t1.t1) row_out->T1 = *t1.t1;
        row_out->k_min = 1e300;
        for (const auto& h : rep.history)
            if (h.t <= t1.T0) row_out->k_min = std::min(row_out->k_min, h.k);
    }
    return !t1.t1.has_value();
}

inline std::vector<ResultRow> run_mass_threshold_scan(const ScenarioConfig& cfg, OutputWriter&,
                                                      std::vector<std::string>& log) {
    const GridPtr grid = make_grid(cfg.dim, cfg.radius, cfg.cells);
    InitialDataParams params{cfg.chi, cfg.dim, cfg.radius, cfg.peak};
    const W0Construction c = construct_w0(grid, params);

    double lo = cfg.mass_list[0], hi = cfg.mass_list[1];
    std::vector<ResultRow> rows;
    int id = 0;
    auto probe = [&](double m) {
        ResultRow r = detail::base_row(cfg, id++);
        r.peak = cfg.peak;
        const bool ok = mass_window_holds(c, cfg.chi, m, cfg.step_control(), &r);
        r.flag = ok ? "window_held" : "window_failed";
        rows.push_back(r);
        return ok;
    };

    const bool ok_lo = probe(lo);
    const bool ok_hi = probe(hi);
    if (ok_lo || !ok_hi) {
        ResultRow r = detail::base_row(cfg, id++);
        r.flag = "bad_bracket";
        rows.push_back(r);
        log.push_back("bracket invalid: expected window to fail at lo and hold at hi");
        return rows;
    }
    for (int it = 0; it < cfg.scan_iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid)) hi = mid; else lo = mid;
    }
    ResultRow lo_row = detail::base_row(cfg, id++);
    lo_row.peak = cfg.peak;
    lo_row.mass = lo;
    lo_row.flag = "bracket_lo";
    rows.push_back(lo_row);
    ResultRow hi_row = detail::base_row(cfg, id++);
    hi_row.peak = cfg.peak;
    hi_row.mass = hi;
    hi_row.flag = "bracket_hi";
    rows.push_back(hi_row);
    log.push_back("empirical mass threshold bracket: [" + csv_double(lo) + ", " + csv_double(hi) + "]");
    return rows;
}

// ---------------------------------------------------------------------------
// Scenario (e): manufactured-solution convergence study
// ---------------------------------------------------------------------------

inline std::vector<ResultRow> run_convergence_study(const ScenarioConfig& cfg, OutputWriter&,
                                                    std::vector<std::string>& log) {
    std::vector<ResultRow> rows;
    int id = 0;
    const double T = 0.2;

    auto spatial_part = [&](const char* label, double lambda_coeff, double band_lo, double band_hi) {
        detail::Manufactured mf{cfg.radius, cfg.dim, cfg.chi, lambda_coeff};
        std::vector<std::pair<double, double>> pts;
        for (int N : {64, 128, 256, 512}) {
            const GridPtr g = make_grid(cfg.dim, cfg.radius, N);
            StepControl ctrl = cfg.step_control();
            ctrl.rel_tol = 1e-9;
            ctrl.T_end = T;
            ScalarMonitors mon;
            mon.stride = 1;
            mon.source = [&mf](double r, double t) { return mf.source(r, t); };
            Profile final_w = mf.sample(g, 0.0);
            mon.on_record = [&](const ScalarState& st) { final_w = st.w; };
            ScalarState s{final_w, 0.0, ScalarMode::local_power, cfg.chi, lambda_coeff};
            (void)run(std::move(s), ctrl, mon);
            const double err = detail::outer_max_error(final_w, mf.sample(g, T));
            pts.emplace_back(g->h, err);
            ResultRow r = detail::base_row(cfg, id++);
            r.cells = N;
            r.outcome = label;
            r.error = err;
            rows.push_back(r);
        }
        const double slope = detail::fit_loglog_slope(pts);
        ResultRow r = detail::base_row(cfg, id++);
        r.outcome = std::string(label) + "_order";
        r.order = slope;
        if (!(slope >= band_lo && slope <= band_hi)) r.flag = "spatial_order";
        rows.push_back(r);
        log.push_back(std::string(label) + " observed order: " + csv_double(slope));
    };

    spatial_part("spatial", 0.2, 1.7, 2.3);
    spatial_part("diffusion_only", 0.0, 1.7, 2.3);

    // temporal: fixed-dt base scheme against a fine fixed-dt reference
    {
        const int N = 256;
        const double lambda_coeff = 0.2;
        detail::Manufactured mf{cfg.radius, cfg.dim, cfg.chi, lambda_coeff};
        const GridPtr g = make_grid(cfg.dim, cfg.radius, N);
        SourceFn src = [&mf](double r, double t) { return mf.source(r, t); };
        ScalarState ref{mf.sample(g, 0.0), 0.0, ScalarMode::local_power, cfg.chi, lambda_coeff};
        const long ref_steps = 5120;
        ref = integrate_fixed(std::move(ref), T / ref_steps, ref_steps, src);

        std::vector<std::pair<double, double>> pts;
        for (long M : {20L, 40L, 80L, 160L}) {
            ScalarState s{mf.sample(g, 0.0), 0.0, ScalarMode::local_power, cfg.chi, lambda_coeff};
            s = integrate_fixed(std::move(s), T / M, M, src);
            double err = 0.0;
            for (int i = 0; i < N; ++i) err = std::max(err, std::abs(s.w[i] - ref.w[i]));
            pts.emplace_back(T / M, err);
            ResultRow r = detail::base_row(cfg, id++);
            r.cells = N;
            r.dt = T / M;
            r.outcome = "temporal";
            r.error = err;
            rows.push_back(r);
        }
        const double slope = detail::fit_loglog_slope(pts);
        ResultRow r = detail::base_row(cfg, id++);
        r.outcome = "temporal_order";
        r.order = slope;
        if (!(slope >= 1.7)) r.flag = "temporal_order";
        rows.push_back(r);
        log.push_back("temporal observed order: " + csv_double(slope));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Scenario (f): one run with full history and snapshots
// ---------------------------------------------------------------------------

inline std::vector<ResultRow> run_single(const ScenarioConfig& cfg, OutputWriter& out,
                                         std::vector<std::string>& log) {
    const GridPtr grid = make_grid(cfg.dim, cfg.radius, cfg.cells);
    ResultRow r = detail::base_row(cfg, 0);
    r.peak = cfg.peak;
    r.mass = cfg.mass;
    const auto t0 = std::chrono::steady_clock::now();

    int snapshot_idx = 0;
    long records = 0;
    auto want_snapshot = [&]() {
        if (cfg.snapshot_stride <= 0) return false;
        return records % cfg.snapshot_stride == 0;
    };

    if (cfg.equation == "coupled") {
        InitialDataParams params{cfg.chi, cfg.dim, cfg.radius, cfg.peak};
        const W0Construction c = construct_w0(grid, params);
        Profile u0(grid);
        const double volume = integrate(Profile(grid, 1.0));
        if (cfg.u0_kind == "uniform")
            for (auto& v : u0.values) v = cfg.mass / volume;
        else {
            const double gain = cfg.mass / integrate(c.w0, cfg.chi);
            for (int i = 0; i < grid->cells; ++i) u0[i] = gain * std::pow(c.w0[i], cfg.chi);
        }
        CoupledMonitors mon;
        mon.stride = cfg.history_stride;
        mon.on_record = [&](const CoupledState& s) {
            if (want_snapshot()) {
                write_snapshot(out, "snap_u_" + std::to_string(snapshot_idx), s.u, s.t, "u",
                               {{"eps", csv_double(s.eps)}, {"chi", csv_double(s.chi)}});
                write_snapshot(out, "snap_v_" + std::to_string(snapshot_idx), s.v, s.t, "v",
                               {{"eps", csv_double(s.eps)}, {"chi", csv_double(s.chi)}});
                ++snapshot_idx;
            }
            ++records;
        };
        const double eps = cfg.eps_list.empty() ? 0.1 : cfg.eps_list.front();
        const CoupledRunReport rep =
            run_coupled(u0, c.w0, eps, cfg.chi, cfg.step_control(), cfg.effective_p_norm(), mon);
        r.eps = eps;
        r.outcome = to_string(rep.outcome);
        r.T_detect = rep.T_detect;
        r.max_linf = 0.0;
        r.max_lp = 0.0;
        for (const auto& h : rep.history) {
            r.max_linf = std::max(r.max_linf, h.linf_u);
            r.max_lp = std::max(r.max_lp, h.lp_u);
        }
        if (rep.max_mass_drift > 1e-9) r.flag = "mass_conservation";
        else if (rep.min_floor_ratio < 1.0 - 1e-6) r.flag = "v_lower_bound";
        out.write_file("history_row0.csv", detail::coupled_history_csv(rep.history));
    } else {
        ScalarMode mode = ScalarMode::nonlocal;
        double coeff = cfg.mass;
        if (cfg.equation == "local_power") {
            mode = ScalarMode::local_power;
            coeff = cfg.lambda_coeff;
        } else if (cfg.equation == "v_form") {
            mode = ScalarMode::v_form;
        }
        InitialDataParams params{cfg.chi, cfg.dim, cfg.radius, cfg.peak};
        const W0Construction c = construct_w0(grid, params);
        const double q = cfg.j_q > 0.0 ? cfg.j_q : default_j_exponent(cfg.chi, cfg.dim);
        const double eta =
            cfg.j_eta > 0.0 ? cfg.j_eta : default_j_eta(c.consts.lambda, c.consts.mu, cfg.chi, q);
        ScalarMonitors mon;
        mon.lp_exponent = cfg.effective_p_norm();
        mon.track_j = (mode != ScalarMode::local_power);
        mon.j_eta = eta;
        mon.j_q = q;
        mon.stride = cfg.history_stride;
        mon.on_record = [&](const ScalarState& s) {
            if (want_snapshot()) {
                write_snapshot(out, "snap_w_" + std::to_string(snapshot_idx), s.w, s.t,
                               cfg.equation, {{"chi", csv_double(s.chi)}, {"coeff", csv_double(s.coeff)}});
                ++snapshot_idx;
            }
            ++records;
        };
        ScalarState s{c.w0, 0.0, mode, cfg.chi, coeff};
        const BlowupReport rep = run(std::move(s), cfg.step_control(), mon);
        r.outcome = to_string(rep.outcome);
        r.T_detect = rep.T_detect;
        if (rep.extrapolated_T) r.extrapolated_T = *rep.extrapolated_T;
        r.ode_bound = ode_minorant_blowup_time(c.peak_value, c.consts.lambda, cfg.chi);
        if (mode != ScalarMode::local_power) {
            const T1Detection t1 = detect_T1(rep, c.consts.lambda);
            r.T0 = t1.T0;
            if (t1.t1) r.T1 = *t1.t1;
            r.k_min = 1e300;
            for (const auto& h : rep.history) r.k_min = std::min(r.k_min, h.k);
        }
        r.max_linf = 0.0;
        r.max_lp = 0.0;
        for (const auto& h : rep.history) {
            r.max_linf = std::max(r.max_linf, h.linf);
            r.max_lp = std::max(r.max_lp, h.lp);
        }
        out.write_file("history_row0.csv", detail::scalar_history_csv(rep.history));
    }

    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.push_back("row 0: " + csv_double(r.wall_seconds) + " s");
    return {r};
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

// Persist the result table and the manifest (history files and snapshots are
// written by the scenarios as they go). Aborted scenarios flush what they
// have under the .incomplete suffix.
inline void emit_results(OutputWriter& out, const std::vector<ResultRow>& rows,
                         const ScenarioConfig& cfg, const std::vector<std::string>& log,
                         bool aborted) {
    std::string csv = results_csv_header();
    csv += "\n";
    for (const auto& r : rows) csv += to_csv_line(r) + "\n";
    out.write_file(aborted ? "results.csv.incomplete" : "results.csv", csv);
    out.write_file(aborted ? "manifest.txt.incomplete" : "manifest.txt",
                   build_manifest(kVersion, serialize_config(cfg), out.checksums(), log, aborted));
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    validate_config(cfg);
    OutputWriter out(cfg.output_dir);
    std::vector<std::string> log;
    ScenarioResult result;
    result.out_dir = out.dir().string();

    try {
        switch (cfg.scenario) {
            case Scenario::limit_blowup_sweep: result.rows = run_limit_blowup_sweep(cfg, out, log); break;
            case Scenario::comparison_check: result.rows = run_comparison_check(cfg, out, log); break;
            case Scenario::singular_limit_ladder: result.rows = run_singular_limit_ladder(cfg, out, log); break;
            case Scenario::mass_threshold_scan: result.rows = run_mass_threshold_scan(cfg, out, log); break;
            case Scenario::convergence_study: result.rows = run_convergence_study(cfg, out, log); break;
            case Scenario::single_run: result.rows = run_single(cfg, out, log); break;
        }
    } catch (const std::exception& e) {
        result.aborted = true;
        result.error = e.what();
        log.push_back(std::string("aborted: ") + e.what());
    }

    emit_results(out, result.rows, cfg, log, result.aborted);
    return result;
}

}  // namespace radblow
