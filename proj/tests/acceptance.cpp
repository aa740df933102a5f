// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Run from anywhere; outputs go under a temp directory that is removed at exit.

#include <chrono>
#include <cstdarg>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "radblow/config.hpp"
#include "radblow/coupled_solver.hpp"
#include "radblow/grid.hpp"
#include "radblow/initial_data.hpp"
#include "radblow/scalar_solver.hpp"
#include "radblow/scenarios.hpp"

using namespace radblow;
namespace fs = std::filesystem;

namespace {

int failures = 0;
fs::path work_dir;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int id, const char* label, bool pass, const std::string& detail, double secs) {
    std::printf("[%s] criterion %2d: %s (%s, %.1f s)\n", pass ? "PASS" : "FAIL", id, label,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- criterion 1: exact-ODE blow-up oracle --------------------------------

void criterion_1() {
    Timer timer;
    auto g = make_grid(3, 1.0, 512);
    StepControl ctrl;
    ctrl.T_end = 1.0;
    const BlowupReport rep = run({Profile(g, 1.0), 0.0, ScalarMode::local_power, 2.0, 24.0}, ctrl);
    const double exact = 1.0 / 48.0;
    const double secs = timer.seconds();
    bool pass = rep.outcome == RunOutcome::blew_up && rep.extrapolated_T.has_value();
    double rel = 1.0;
    if (pass) {
        rel = std::abs(*rep.extrapolated_T - exact) / exact;
        pass = rel <= 0.02 && secs < 10.0;
    }
    report(1, "exact-ODE blow-up oracle", pass,
           fmt("T_extrap rel err %.2e vs 1/48, budget 10 s", rel), secs);
}

// --- criterion 2: exponential oracle ---------------------------------------

void criterion_2() {
    Timer timer;
    auto g = make_grid(3, 1.0, 512);
    StepControl ctrl;
    ctrl.T_end = 1.0;
    ctrl.rel_tol = 1e-6;
    Profile last(g, 1.0);
    ScalarMonitors mon;
    mon.stride = 1;
    mon.on_record = [&](const ScalarState& s) { last = s.w; };
    const BlowupReport rep = run({Profile(g, 1.0), 0.0, ScalarMode::nonlocal, 2.0, 1.0}, ctrl, mon);
    const double exact = std::exp(3.0 / (4.0 * M_PI));
    const double rel = std::abs(linf_norm(last) - exact) / exact;
    const double secs = timer.seconds();
    const bool pass = rep.outcome == RunOutcome::reached_T_end && rel <= 10.0 * ctrl.rel_tol && secs < 10.0;
    report(2, "exponential oracle", pass, fmt("w(1) rel err %.2e vs e^{3/(4pi)}, cap 1e-5", rel), secs);
}

// --- criterion 3: initial-data verifier ------------------------------------

void criterion_3() {
    Timer timer;
    bool pass = true;
    std::string detail = "all checks passed";
    int escalated = 0;

    for (double chi : {1.0, 2.0, 4.0}) {
        ConstructionConstants ref{};
        bool have_ref = false;
        for (double M : {4.0, 16.0, 64.0}) {
            const InitialDataParams p{chi, 3, 1.0, M};
            int N = 2048;  // escalate until >= 8 cell centers sit inside the cap
            while (N < 65536 && std::ceil(p.delta() * N - 0.5) < 8.0) N *= 2;
            if (N != 2048) ++escalated;
            auto g = make_grid(3, 1.0, N);
            W0Construction c = construct_w0(g, p);

            const auto rep = verify_w0(c.w0, p, c.consts);
            if (!rep.all_passed()) {
                pass = false;
                for (const auto& chk : rep.checks)
                    if (!chk.pass)
                        detail = fmt("chi=%g M=%g N=%d: %s failed (margin %.2e)", chi, M, N,
                                     chk.name.c_str(), chk.margin);
            }

            // C^2 matching at delta (closed forms, relative 1e-10)
            const double a = p.alpha(), d = p.delta();
            const BridgeProfile W(chi, 1.0);
            const double A3 = a * (a + 3.0) / 2.0, A2 = a * (a + 2.0) / 3.0;
            const double base = std::pow(d, -a);
            const double capv = w0_cap_value(p, d);
            const double capd = base / d * (-2.0 * A3 + 3.0 * A2);
            const double capdd = base / (d * d) * (-2.0 * A3 + 6.0 * A2);
            const bool match = std::abs(capv - W.value(d)) <= 1e-10 * std::abs(W.value(d)) &&
                               std::abs(capd - W.deriv(d)) <= 1e-10 * std::abs(W.deriv(d)) &&
                               std::abs(capdd - W.second_deriv(d)) <= 1e-10 * std::abs(W.second_deriv(d));
            if (!match) {
                pass = false;
                detail = fmt("chi=%g M=%g: C2 matching at delta exceeded 1e-10", chi, M);
            }

            if (!have_ref) {
                ref = c.consts;
                have_ref = true;
            } else if (std::memcmp(&ref, &c.consts, sizeof ref) != 0) {
                pass = false;
                detail = fmt("chi=%g: constants are not M-independent", chi);
            }
        }
    }
    if (pass)
        detail = fmt("9 combos, 6 checks each, constants M-uniform; %d grids escalated to resolve delta",
                     escalated);
    report(3, "initial-data verifier", pass, detail, timer.seconds());
}

// --- criterion 4: comparison principle --------------------------------------

void criterion_4() {
    Timer timer;
    auto g = make_grid(3, 1.0, 1024);
    const auto c = construct_w0(g, {2.0, 3, 1.0, 8.0});
    StepControl ctrl;
    ctrl.T_end = 1.0;
    const ComparisonReport rep = run_comparison(c.w0, 600.0, 2.0, c.consts.lambda, ctrl);
    const double secs = timer.seconds();
    const bool pass = rep.outcome == RunOutcome::blew_up && rep.min_normalized_gap >= -1e-6 && secs < 120.0;
    report(4, "comparison principle", pass,
           fmt("min (w - z)/||w|| = %.2e over %ld synchronized steps, budget 2 min",
               rep.min_normalized_gap, rep.steps),
           secs);
}

// --- criterion 5: ODE-minorant bound over the M sweep ------------------------

void criterion_5() {
    Timer timer;
    // empirical bracket for the mass threshold at modest resolution
    const auto cscan = construct_w0(make_grid(3, 1.0, 512), {2.0, 3, 1.0, 8.0});
    StepControl ctrl;
    ctrl.T_end = 1.0;
    double lo = 10.0, hi = 600.0;
    for (int it = 0; it < 8; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass_window_holds(cscan, 2.0, mid, ctrl)) hi = mid; else lo = mid;
    }
    const double m_run = 1.25 * hi;  // safely inside the bracketed T1 = T0 regime

    auto g = make_grid(3, 1.0, 1024);
    bool pass = true;
    std::string detail;
    double prev_T = 1e300;
    for (double M : {8.0, 16.0, 32.0, 64.0}) {
        const auto c = construct_w0(g, {2.0, 3, 1.0, M});
        ScalarState s{c.w0, 0.0, ScalarMode::nonlocal, 2.0, m_run};
        const BlowupReport rep = run(std::move(s), ctrl);
        // gain window on the pre-terminal stretch; the blown-up peak cell
        // saturates the discrete chi-integral in the final instants
        const double window_end = std::min(std::pow(m_run, -2.0), 0.9 * rep.T_detect);
        bool window_ok = true;
        for (const auto& h : rep.history)
            if (h.t <= window_end && h.k < 2.0 * c.consts.lambda) window_ok = false;
        const double bound = ode_minorant_blowup_time(c.peak_value, c.consts.lambda, 2.0);
        if (rep.outcome != RunOutcome::blew_up || !window_ok ||
            rep.T_detect > 1.1 * bound || !(rep.T_detect < prev_T)) {
            pass = false;
            detail = fmt("M=%g: outcome=%s T=%.3e bound=%.3e window_ok=%d", M,
                         to_string(rep.outcome), rep.T_detect, bound, window_ok ? 1 : 0);
            break;
        }
        prev_T = rep.T_detect;
    }
    if (pass)
        detail = fmt("m = %.1f (bracket hi %.1f x 1.25); T_detect <= 1.1 bound and strictly decreasing",
                     m_run, hi);
    report(5, "ODE-minorant bound over the peak sweep", pass, detail, timer.seconds());
}

// --- criteria 6-8: coupled runs ----------------------------------------------

struct CoupledSuite {
    std::vector<CoupledRunReport> reports;  // ladder + oracles
    std::vector<ResultRow> ladder_rows;
    double ladder_seconds = 0.0;
    bool ladder_ok = false;
    std::string ladder_detail;
};

CoupledSuite run_coupled_suite() {
    CoupledSuite suite;
    Timer timer;

    ScenarioConfig cfg;
    cfg.scenario = Scenario::singular_limit_ladder;
    cfg.chi = 2.0;
    cfg.dim = 3;
    cfg.radius = 1.0;
    cfg.cells = 1024;
    cfg.T_end = 0.2;
    cfg.sample_time = 0.2;
    cfg.peak = 4.0;
    cfg.mass = 1.0;
    cfg.eps_list = {0.1, 0.05, 0.025, 0.0125};
    cfg.workers = 4;
    cfg.output_dir = (work_dir / "ladder").string();
    const ScenarioResult res = run_scenario(cfg);
    suite.ladder_rows = res.rows;
    suite.ladder_seconds = timer.seconds();
    suite.ladder_ok = !res.aborted;
    if (res.aborted) suite.ladder_detail = res.error;

    // direct oracle runs feed the mass/floor criteria as well
    auto g = make_grid(3, 1.0, 512);
    StepControl ctrl;
    ctrl.T_end = 0.5;
    suite.reports.push_back(run_coupled(Profile(g, 2.0), Profile(g, 1.0), 0.5, 2.0, ctrl, 2.5));
    suite.reports.push_back(run_coupled(Profile(g, 0.0), Profile(g, 1.0), 0.25, 2.0, ctrl, 2.5));
    const auto c = construct_w0(g, {2.0, 3, 1.0, 4.0});
    Profile u0(g);
    const double gain = 1.0 / integrate(c.w0, 2.0);
    for (int i = 0; i < g->cells; ++i) u0[i] = gain * c.w0[i] * c.w0[i];
    suite.reports.push_back(run_coupled(u0, c.w0, 0.05, 2.0, ctrl, 2.5));
    return suite;
}

void criterion_6(const CoupledSuite& suite) {
    Timer timer;
    double worst = 0.0;
    for (const auto& r : suite.reports) worst = std::max(worst, r.max_mass_drift);
    bool pass = worst <= 1e-9 && suite.ladder_ok;
    for (const auto& row : suite.ladder_rows)
        if (row.flag == "mass_conservation") pass = false;
    report(6, "mass conservation in every coupled run", pass,
           fmt("worst relative drift %.2e (ladder runs flag-checked), cap 1e-9", worst),
           timer.seconds());
}

void criterion_7(const CoupledSuite& suite) {
    Timer timer;
    double worst = 1e300;
    for (const auto& r : suite.reports) worst = std::min(worst, r.min_floor_ratio);
    bool pass = worst >= 1.0 - 1e-6 && suite.ladder_ok;
    for (const auto& row : suite.ladder_rows)
        if (row.flag == "v_lower_bound") pass = false;
    report(7, "v lower bound in every coupled run", pass,
           fmt("worst min v / (e^{-t} min v0) = %.9f, floor 1 - 1e-6", worst), timer.seconds());
}

void criterion_8(const CoupledSuite& suite) {
    bool pass = suite.ladder_ok && suite.ladder_rows.size() == 4 && suite.ladder_seconds < 900.0;
    std::string detail = suite.ladder_detail;
    double prev_sup = 0.0, prev_res = 1e300;
    if (pass) {
        for (const auto& row : suite.ladder_rows) {
            if (!row.flag.empty()) {
                pass = false;
                detail = "row eps=" + csv_double(row.eps) + " flagged " + row.flag;
                break;
            }
            if (!(row.max_lp >= prev_sup) || !(row.residual < prev_res)) {
                pass = false;
                detail = "trend broke at eps=" + csv_double(row.eps);
                break;
            }
            prev_sup = row.max_lp;
            prev_res = row.residual;
        }
    }
    if (pass)
        detail = fmt("sup||u||_2.5 rose %.4f -> %.4f, residual fell %.2e -> %.2e, budget 15 min",
                     suite.ladder_rows.front().max_lp, suite.ladder_rows.back().max_lp,
                     suite.ladder_rows.front().residual, suite.ladder_rows.back().residual);
    report(8, "singular-limit ladder trends", pass, detail, suite.ladder_seconds);
}

// --- criterion 9: scheme convergence -----------------------------------------

void criterion_9() {
    Timer timer;
    ScenarioConfig cfg;
    cfg.scenario = Scenario::convergence_study;
    cfg.output_dir = (work_dir / "conv").string();
    const ScenarioResult res = run_scenario(cfg);
    bool pass = !res.aborted;
    double spatial = 0.0, temporal = 0.0, diffusion = 0.0;
    for (const auto& row : res.rows) {
        if (!row.flag.empty()) pass = false;
        if (row.outcome == "spatial_order") spatial = row.order;
        if (row.outcome == "temporal_order") temporal = row.order;
        if (row.outcome == "diffusion_only_order") diffusion = row.order;
    }
    pass = pass && std::abs(spatial - 2.0) <= 0.3 && std::abs(diffusion - 2.0) <= 0.3 && temporal >= 1.7;
    report(9, "scheme convergence orders", pass,
           fmt("spatial %.2f, diffusion-only %.2f (2.0 +/- 0.3), temporal %.2f (>= 1.7)", spatial,
               diffusion, temporal),
           timer.seconds());
}

// --- criterion 10: reaction homogeneity --------------------------------------

void criterion_10() {
    Timer timer;
    auto g = make_grid(3, 1.0, 256);
    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> amp(0.0, 2.0), cdist(1e-3, 1e3);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Profile w(g);
        for (auto& v : w.values) v = 1.0 + amp(rng);
        const double c = cdist(rng);
        Profile wc = w;
        for (auto& v : wc.values) v *= c;
        const Profile r1 = reaction_term(w, ScalarMode::nonlocal, 2.0, 3.0);
        const Profile rc = reaction_term(wc, ScalarMode::nonlocal, 2.0, 3.0);
        for (int i = 0; i < g->cells; ++i)
            worst = std::max(worst, std::abs(rc[i] - c * r1[i]) / (c * std::abs(r1[i])));
    }
    const bool pass = worst <= 1e-12;
    report(10, "degree-1 homogeneity of the nonlocal reaction", pass,
           fmt("worst relative deviation %.2e over 100 random (c, w) pairs", worst), timer.seconds());
}

// --- criterion 11: determinism ------------------------------------------------

void criterion_11() {
    Timer timer;
    ScenarioConfig cfg;
    cfg.scenario = Scenario::limit_blowup_sweep;
    cfg.cells = 512;
    cfg.peak_list = {8.0, 16.0};
    cfg.mass = 600.0;
    cfg.T_end = 1.0;

    std::vector<std::string> results, histories;
    for (int rep = 0; rep < 3; ++rep) {
        const fs::path dir = work_dir / ("det" + std::to_string(rep));
        cfg.output_dir = dir.string();
        cfg.workers = (rep == 2) ? 4 : 1;  // the parallel pass must agree byte-for-byte
        const ScenarioResult res = run_scenario(cfg);
        if (res.aborted) {
            report(11, "determinism", false, "scenario aborted: " + res.error, timer.seconds());
            return;
        }
        results.push_back(slurp(dir / "results.csv"));
        histories.push_back(slurp(dir / "history_row0.csv") + slurp(dir / "history_row1.csv"));
    }
    const bool pass = results[0] == results[1] && results[0] == results[2] &&
                      histories[0] == histories[1] && histories[0] == histories[2];
    report(11, "deterministic byte-identical CSVs", pass,
           fmt("3 runs (serial x2, 4 workers x1), %zu result bytes", results[0].size()),
           timer.seconds());
}

}  // namespace

int main() {
    work_dir = fs::temp_directory_path() / "radblow_acceptance";
    fs::remove_all(work_dir);
    fs::create_directories(work_dir);

    std::printf("radblow acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    const CoupledSuite suite = run_coupled_suite();
    criterion_6(suite);
    criterion_7(suite);
    criterion_8(suite);
    criterion_9();
    criterion_10();
    criterion_11();

    fs::remove_all(work_dir);
    std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "OK", failures);
    return failures;
}
