#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "radblow/config.hpp"
#include "radblow/initial_data.hpp"
#include "radblow/scenarios.hpp"
#include "radblow/version.hpp"

namespace {

// The simulation pipeline is deterministic by construction: no random number
// generator is linked anywhere in the library or this tool.
constexpr bool kNoRngLinked = true;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& output_dir, int workers,
            bool quiet, bool seedless) {
    if (seedless) {
        static_assert(kNoRngLinked);
        if (!quiet) std::cout << "seedless: no RNG linked; outputs are a function of the config only\n";
    }
    radblow::ScenarioConfig cfg = radblow::parse_config(read_file(config_path));
    // output dir priority: --output-dir, then the config key, then RADBLOW_OUTPUT_DIR
    if (!output_dir.empty()) {
        cfg.output_dir = output_dir;
    } else if (!cfg.output_dir_explicit) {
        if (const char* env = std::getenv("RADBLOW_OUTPUT_DIR")) cfg.output_dir = env;
    }
    if (workers > 0) cfg.workers = workers;

    const radblow::ScenarioResult res = radblow::run_scenario(cfg);
    int flagged = 0;
    for (const auto& r : res.rows)
        if (!r.flag.empty() && r.flag != "bracket_lo" && r.flag != "bracket_hi" &&
            r.flag != "window_held" && r.flag != "window_failed")
            ++flagged;

    if (!quiet) {
        std::cout << "scenario " << to_string(cfg.scenario) << ": " << res.rows.size()
                  << " rows -> " << res.out_dir << "\n";
        for (const auto& r : res.rows) {
            std::cout << "  row " << r.row_id << ": " << r.outcome;
            if (!std::isnan(r.T_detect)) std::cout << "  T=" << radblow::csv_double(r.T_detect);
            if (!r.flag.empty()) std::cout << "  [" << r.flag << "]";
            std::cout << "\n";
        }
        if (res.aborted) std::cout << "aborted: " << res.error << "\n";
        else if (flagged) std::cout << flagged << " row(s) flagged\n";
    }
    if (res.aborted) return 2;
    return flagged ? 1 : 0;
}

int cmd_verify_w0(double chi, int n, double R, double M, int N, bool quiet) {
    const auto grid = radblow::make_grid(n, R, N);
    const radblow::InitialDataParams params{chi, n, R, M};
    const auto c = radblow::construct_w0(grid, params);
    const auto report = radblow::verify_w0(c.w0, params, c.consts);
    if (!quiet) {
        std::printf("w0 construction: chi=%g n=%d R=%g M=%g N=%d\n", chi, n, R, M, N);
        std::printf("  delta=%.9g  w0(0)=%.9g\n", c.delta, c.peak_value);
        std::printf("  A=%.12g  lambda=%.12g  mu=%.12g\n", c.consts.inv_chi_integral,
                    c.consts.lambda, c.consts.mu);
        for (const auto& chk : report.checks)
            std::printf("  %-18s %s  (margin %+.3e)\n", chk.name.c_str(),
                        chk.pass ? "PASS" : "FAIL", chk.margin);
    }
    return report.all_passed() ? 0 : 1;
}

void print_info() {
    std::cout << "radblow " << radblow::kVersion << "\n"
              << "Radially symmetric finite-volume solvers for the reduced crime model,\n"
              << "its scalar nonlocal limit problem, and the local-power comparison problem,\n"
              << "with blow-up detection and constructed blow-up-seeding initial data.\n\n"
              << "Scenarios: limit_blowup_sweep, comparison_check, singular_limit_ladder,\n"
              << "           mass_threshold_scan, convergence_study, single_run\n"
              << "Config grammar: INI-style '[section]' + 'key = value' (see README).\n"
              << "Determinism: no RNG linked; identical config + version give byte-identical CSVs.\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radial blow-up simulation suite"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    int workers = 0;
    bool quiet = false, seedless = false;

    auto* run_cmd = app.add_subcommand("run", "run a scenario from a config file");
    run_cmd->add_option("config", config_path, "config file path")->required();
    run_cmd->add_option("--output-dir", output_dir, "override [output] dir");
    run_cmd->add_option("--workers", workers, "override [run] workers");
    run_cmd->add_flag("--quiet", quiet, "suppress progress output");
    run_cmd->add_flag("--seedless", seedless, "assert that no RNG is linked");

    double chi = 2.0, R = 1.0, M = 8.0;
    int n = 3, N = 2048;
    auto* verify_cmd = app.add_subcommand("verify-w0", "construct and verify the blow-up initial data");
    verify_cmd->add_option("--chi", chi, "sensitivity chi > 0");
    verify_cmd->add_option("--n", n, "dimension n >= 3");
    verify_cmd->add_option("--R", R, "ball radius");
    verify_cmd->add_option("--M", M, "peak parameter");
    verify_cmd->add_option("--N", N, "cell count");
    verify_cmd->add_flag("--quiet", quiet, "suppress the report");

    auto* info_cmd = app.add_subcommand("info", "print version and interface summary");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, output_dir, workers, quiet, seedless);
        if (verify_cmd->parsed()) return cmd_verify_w0(chi, n, R, M, N, quiet);
        if (info_cmd->parsed()) {
            print_info();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
