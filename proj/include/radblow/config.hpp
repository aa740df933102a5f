#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "radblow/scalar_solver.hpp"

//
// Scenario configuration: INI-style structured text.
//
//   # comment (also ';')
//   [section]
//   key = value
//
// Section and key names are [A-Za-z_][A-Za-z0-9_]*. Values are scalars or
// comma-separated lists. Duplicate keys are parse errors; unknown sections or
// keys are validation errors. The full grammar and key table live in the
// README.
//

namespace radblow {

enum class Scenario {
    limit_blowup_sweep,
    comparison_check,
    singular_limit_ladder,
    mass_threshold_scan,
    convergence_study,
    single_run,
};

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::limit_blowup_sweep: return "limit_blowup_sweep";
        case Scenario::comparison_check: return "comparison_check";
        case Scenario::singular_limit_ladder: return "singular_limit_ladder";
        case Scenario::mass_threshold_scan: return "mass_threshold_scan";
        case Scenario::convergence_study: return "convergence_study";
        case Scenario::single_run: return "single_run";
    }
    return "?";
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::single_run;
    int workers = 1;

    double chi = 2.0;
    int dim = 3;
    double radius = 1.0;

    int cells = 1024;

    double rel_tol = 1e-6;
    double T_end = 1.0;
    double dt_init = 0.0;   // 0: auto
    double dt_min = 0.0;    // 0: auto
    double safety = 0.8;
    double w_max = 0.0;     // 0: auto (1e8 x initial norm)
    long max_steps = 50'000'000;

    std::vector<double> peak_list;  // M sweep
    std::vector<double> eps_list;   // eps ladder
    std::vector<double> mass_list;  // bisection bracket (lo, hi)
    double mass = 1.0;              // m
    int scan_iters = 12;

    double peak = 8.0;                 // single M
    std::string equation = "nonlocal"; // single_run: nonlocal|local_power|v_form|coupled
    double lambda_coeff = 24.0;        // local_power coefficient
    std::string u0_kind = "uniform";   // coupled u0: uniform|manifold

    double p_norm = 0.0;      // 0: auto (n/2 + 1)
    double j_q = 0.0;         // 0: auto (midpoint of the admissible window)
    double j_eta = 0.0;       // 0: auto (computable branch)
    int history_stride = 1;
    double sample_time = 0.2;

    std::string output_dir = "out";
    bool output_dir_explicit = false;  // key present in the parsed text
    int snapshot_stride = 0;           // 0: off

    StepControl step_control() const {
        StepControl c;
        c.rel_tol = rel_tol;
        c.T_end = T_end;
        c.dt_init = dt_init;
        c.dt_min = dt_min;
        c.safety = safety;
        c.blowup_threshold = w_max;
        c.max_steps = max_steps;
        return c;
    }
    double effective_p_norm() const { return p_norm > 0.0 ? p_norm : 0.5 * dim + 1.0; }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

inline double parse_double(const std::string& v, int line, const std::string& key) {
    const std::string t = trim(v);
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "' expects a number, got '" + t + "'");
    return x;
}

inline long parse_long(const std::string& v, int line, const std::string& key) {
    const std::string t = trim(v);
    char* end = nullptr;
    const long x = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
        throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                          "' expects an integer, got '" + t + "'");
    return x;
}

inline std::vector<double> parse_list(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::string cur;
    for (size_t i = 0; i <= v.size(); ++i) {
        if (i == v.size() || v[i] == ',') {
            const std::string item = trim(cur);
            if (!item.empty()) out.push_back(parse_double(item, line, key));
            cur.clear();
        } else {
            cur += v[i];
        }
    }
    if (out.empty())
        throw ConfigError("line " + std::to_string(line) + ": key '" + key + "' expects a list");
    return out;
}

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_list(const std::vector<double>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += format_double(xs[i]);
    }
    return out;
}

}  // namespace detail

inline Scenario scenario_from_string(const std::string& s) {
    for (Scenario sc : {Scenario::limit_blowup_sweep, Scenario::comparison_check,
                        Scenario::singular_limit_ladder, Scenario::mass_threshold_scan,
                        Scenario::convergence_study, Scenario::single_run})
        if (s == to_string(sc)) return sc;
    throw ConfigError("unknown scenario '" + s +
                      "' (expected one of: limit_blowup_sweep, comparison_check, "
                      "singular_limit_ladder, mass_threshold_scan, convergence_study, single_run)");
}

inline void validate_config(const ScenarioConfig& c) {
    if (c.dim < 3) throw ConfigError("physical.n: the construction requires n >= 3, got " + std::to_string(c.dim));
    if (!(c.chi > 0.0)) throw ConfigError("physical.chi must be positive");
    if (!(c.radius > 0.0)) throw ConfigError("physical.R must be positive");
    if (c.cells < 16) throw ConfigError("grid.N must be >= 16");
    if (!(c.rel_tol > 1e-12 && c.rel_tol < 1e-2)) throw ConfigError("control.rel_tol must lie in (1e-12, 1e-2)");
    if (!(c.T_end > 0.0)) throw ConfigError("control.T_end must be positive");
    if (c.max_steps <= 0) throw ConfigError("control.max_steps must be positive");
    if (c.workers < 1) throw ConfigError("run.workers must be >= 1");
    if (!(c.safety > 0.0 && c.safety < 1.0)) throw ConfigError("control.safety must lie in (0, 1)");
    if (!(c.peak > 0.0)) throw ConfigError("initial.M must be positive");
    if (!(c.mass > 0.0)) throw ConfigError("sweep.mass must be positive");
    if (c.history_stride < 1) throw ConfigError("monitor.history_stride must be >= 1");
    if (c.snapshot_stride < 0) throw ConfigError("output.snapshot_stride must be >= 0");
    if (c.equation != "nonlocal" && c.equation != "local_power" && c.equation != "v_form" &&
        c.equation != "coupled")
        throw ConfigError("initial.equation must be nonlocal, local_power, v_form or coupled");
    if (c.u0_kind != "uniform" && c.u0_kind != "manifold")
        throw ConfigError("initial.u0 must be uniform or manifold");
    for (double e : c.eps_list)
        if (!(e > 0.0 && e <= 1.0)) throw ConfigError("sweep.eps_list entries must lie in (0, 1]");
    for (double M : c.peak_list)
        if (!(M > 0.0)) throw ConfigError("sweep.M_list entries must be positive");
    if (c.p_norm != 0.0 && !(c.p_norm > 0.5 * c.dim))
        throw ConfigError("monitor.p_norm must exceed n/2");

    switch (c.scenario) {
        case Scenario::limit_blowup_sweep:
            if (c.peak_list.empty()) throw ConfigError("limit_blowup_sweep requires sweep.M_list");
            break;
        case Scenario::singular_limit_ladder:
            if (c.eps_list.empty()) throw ConfigError("singular_limit_ladder requires sweep.eps_list");
            if (!(c.sample_time > 0.0 && c.sample_time <= c.T_end))
                throw ConfigError("monitor.sample_time must lie in (0, T_end]");
            break;
        case Scenario::mass_threshold_scan:
            if (c.mass_list.size() != 2 || !(c.mass_list[0] < c.mass_list[1]))
                throw ConfigError("mass_threshold_scan requires sweep.mass_list = lo, hi with lo < hi");
            if (c.scan_iters < 1) throw ConfigError("sweep.scan_iters must be >= 1");
            break;
        default:
            break;
    }
}

inline ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig cfg;
    std::string section;
    std::set<std::string> seen;
    bool scenario_set = false;

    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') {
            if (nl == text.size()) break;
            continue;
        }

        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
            section = detail::trim(t.substr(1, t.size() - 2));
            if (!detail::valid_name(section))
                throw ConfigError("line " + std::to_string(line_no) + ": bad section name '" + section + "'");
            if (nl == text.size()) break;
            continue;
        }

        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (!detail::valid_name(key))
            throw ConfigError("line " + std::to_string(line_no) + ": bad key name '" + key + "'");
        if (section.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' outside any section");
        const std::string full = section + "." + key;
        if (!seen.insert(full).second)
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + full + "'");

        const int L = line_no;
        if (full == "run.scenario") { cfg.scenario = scenario_from_string(value); scenario_set = true; }
        else if (full == "run.workers") cfg.workers = static_cast<int>(detail::parse_long(value, L, full));
        else if (full == "physical.chi") cfg.chi = detail::parse_double(value, L, full);
        else if (full == "physical.n") cfg.dim = static_cast<int>(detail::parse_long(value, L, full));
        else if (full == "physical.R") cfg.radius = detail::parse_double(value, L, full);
        else if (full == "grid.N") cfg.cells = static_cast<int>(detail::parse_long(value, L, full));
        else if (full == "control.rel_tol") cfg.rel_tol = detail::parse_double(value, L, full);
        else if (full == "control.T_end") cfg.T_end = detail::parse_double(value, L, full);
        else if (full == "control.dt_init") cfg.dt_init = detail::parse_double(value, L, full);
        else if (full == "control.dt_min") cfg.dt_min = detail::parse_double(value, L, full);
        else if (full == "control.safety") cfg.safety = detail::parse_double(value, L, full);
        else if (full == "control.w_max") cfg.w_max = detail::parse_double(value, L, full);
        else if (full == "control.max_steps") cfg.max_steps = detail::parse_long(value, L, full);
        else if (full == "sweep.M_list") cfg.peak_list = detail::parse_list(value, L, full);
        else if (full == "sweep.eps_list") cfg.eps_list = detail::parse_list(value, L, full);
        else if (full == "sweep.mass_list") cfg.mass_list = detail::parse_list(value, L, full);
        else if (full == "sweep.mass") cfg.mass = detail::parse_double(value, L, full);
        else if (full == "sweep.scan_iters") cfg.scan_iters = static_cast<int>(detail::parse_long(value, L, full));
        else if (full == "initial.M") cfg.peak = detail::parse_double(value, L, full);
        else if (full == "initial.equation") cfg.equation = value;
        else if (full == "initial.lambda_coeff") cfg.lambda_coeff = detail::parse_double(value, L, full);
        else if (full == "initial.u0") cfg.u0_kind = value;
        else if (full == "monitor.p_norm") cfg.p_norm = detail::parse_double(value, L, full);
        else if (full == "monitor.j_q") cfg.j_q = detail::parse_double(value, L, full);
        else if (full == "monitor.j_eta") cfg.j_eta = detail::parse_double(value, L, full);
        else if (full == "monitor.history_stride") cfg.history_stride = static_cast<int>(detail::parse_long(value, L, full));
        else if (full == "monitor.sample_time") cfg.sample_time = detail::parse_double(value, L, full);
        else if (full == "output.dir") { cfg.output_dir = value; cfg.output_dir_explicit = true; }
        else if (full == "output.snapshot_stride") cfg.snapshot_stride = static_cast<int>(detail::parse_long(value, L, full));
        else
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + full + "'");

        if (nl == text.size()) break;
    }

    if (!scenario_set) throw ConfigError("missing required key 'run.scenario'");
    validate_config(cfg);
    return cfg;
}

// Canonical serialization; parse(serialize(c)) reproduces c exactly.
inline std::string serialize_config(const ScenarioConfig& c) {
    using detail::format_double;
    std::string out;
    out += "[run]\n";
    out += "scenario = " + std::string(to_string(c.scenario)) + "\n";
    out += "workers = " + std::to_string(c.workers) + "\n";
    out += "\n[physical]\n";
    out += "chi = " + format_double(c.chi) + "\n";
    out += "n = " + std::to_string(c.dim) + "\n";
    out += "R = " + format_double(c.radius) + "\n";
    out += "\n[grid]\n";
    out += "N = " + std::to_string(c.cells) + "\n";
    out += "\n[control]\n";
    out += "rel_tol = " + format_double(c.rel_tol) + "\n";
    out += "T_end = " + format_double(c.T_end) + "\n";
    out += "dt_init = " + format_double(c.dt_init) + "\n";
    out += "dt_min = " + format_double(c.dt_min) + "\n";
    out += "safety = " + format_double(c.safety) + "\n";
    out += "w_max = " + format_double(c.w_max) + "\n";
    out += "max_steps = " + std::to_string(c.max_steps) + "\n";
    out += "\n[sweep]\n";
    if (!c.peak_list.empty()) out += "M_list = " + detail::format_list(c.peak_list) + "\n";
    if (!c.eps_list.empty()) out += "eps_list = " + detail::format_list(c.eps_list) + "\n";
    if (!c.mass_list.empty()) out += "mass_list = " + detail::format_list(c.mass_list) + "\n";
    out += "mass = " + format_double(c.mass) + "\n";
    out += "scan_iters = " + std::to_string(c.scan_iters) + "\n";
    out += "\n[initial]\n";
    out += "M = " + format_double(c.peak) + "\n";
    out += "equation = " + c.equation + "\n";
    out += "lambda_coeff = " + format_double(c.lambda_coeff) + "\n";
    out += "u0 = " + c.u0_kind + "\n";
    out += "\n[monitor]\n";
    out += "p_norm = " + format_double(c.p_norm) + "\n";
    out += "j_q = " + format_double(c.j_q) + "\n";
    out += "j_eta = " + format_double(c.j_eta) + "\n";
    out += "history_stride = " + std::to_string(c.history_stride) + "\n";
    out += "sample_time = " + format_double(c.sample_time) + "\n";
    out += "\n[output]\n";
    out += "dir = " + c.output_dir + "\n";
    out += "snapshot_stride = " + std::to_string(c.snapshot_stride) + "\n";
    return out;
}

}  // namespace radblow
