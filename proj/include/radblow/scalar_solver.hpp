#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "radblow/grid.hpp"
#include "radblow/tridiag.hpp"

//
// Time integration for the scalar problems on the ball:
//
//   nonlocal:     w_t = Lap w + m w^{chi+1} / int_Omega w^chi
//   local_power:  z_t = Lap z + c z^{chi+1}
//   v_form:       v_t = Lap v - v + m v^{chi+1} / int_Omega v^chi
//
// One base step is Strang-split: a half step of the explicit reaction (Heun),
// a Crank-Nicolson tridiagonal solve for the diffusion (plus the decay term in
// v_form), and another half reaction step. Accepted steps come from
// step-doubling with local extrapolation; dt is additionally capped by the
// reaction Lipschitz scale so the explicit stages stay stable, which is also
// what makes dt underflow a reliable blow-up signal.
//

namespace radblow {

enum class ScalarMode { nonlocal, local_power, v_form };

inline const char* to_string(ScalarMode m) {
    switch (m) {
        case ScalarMode::nonlocal: return "nonlocal";
        case ScalarMode::local_power: return "local_power";
        case ScalarMode::v_form: return "v_form";
    }
    return "?";
}

struct ScalarState {
    Profile w;
    double t = 0.0;
    ScalarMode mode = ScalarMode::nonlocal;
    double chi = 2.0;
    double coeff = 1.0;  // mass m in nonlocal/v_form, the power coefficient in local_power
};

struct StepControl {
    double dt_init = 0.0;           // 0: auto (1e-6 * T_end)
    double dt_min = 0.0;            // 0: auto (1e-13 * T_end)
    double rel_tol = 1e-6;          // local error target per step
    double blowup_threshold = 0.0;  // 0: auto (1e8 * initial max norm)
    double T_end = 1.0;
    long max_steps = 50'000'000;
    double safety = 0.8;

    void validate(double initial_linf) const {
        if (!(T_end > 0.0)) throw std::invalid_argument("StepControl: T_end must be positive");
        if (!(rel_tol > 1e-12 && rel_tol < 1e-2))
            throw std::invalid_argument("StepControl: rel_tol must lie in (1e-12, 1e-2)");
        if (dt_init > 0.0 && dt_min > 0.0 && !(dt_min < dt_init))
            throw std::invalid_argument("StepControl: dt_min must be below dt_init");
        if (blowup_threshold > 0.0 && !(blowup_threshold > initial_linf))
            throw std::invalid_argument("StepControl: blow-up threshold must exceed the initial max norm");
        if (max_steps <= 0) throw std::invalid_argument("StepControl: max_steps must be positive");
    }
    double effective_dt_init() const { return dt_init > 0.0 ? dt_init : 1e-6 * T_end; }
    double effective_dt_min() const { return dt_min > 0.0 ? dt_min : 1e-13 * T_end; }
    double effective_threshold(double initial_linf) const {
        return blowup_threshold > 0.0 ? blowup_threshold : 1e8 * std::max(initial_linf, 1e-300);
    }
};

// Optional manufactured-solution forcing, evaluated pointwise at (r, t).
using SourceFn = std::function<double(double r, double t)>;

// Full reaction of the mode (diagnostic form; in v_form this includes the
// decay term even though the stepper treats it implicitly).
inline Profile reaction_term(const Profile& w, ScalarMode mode, double chi, double coeff) {
    Profile out(w.grid);
    if (mode == ScalarMode::local_power) {
        for (int i = 0; i < w.size(); ++i) out[i] = coeff * std::pow(w[i], chi + 1.0);
        return out;
    }
    if (min_value(w) <= 0.0)
        throw std::domain_error("reaction_term: nonpositive state in a fractional-power mode");
    const double gain = coeff / integrate(w, chi);
    for (int i = 0; i < w.size(); ++i) {
        out[i] = gain * std::pow(w[i], chi + 1.0);
        if (mode == ScalarMode::v_form) out[i] -= w[i];
    }
    return out;
}

inline Profile reaction_term(const ScalarState& s) { return reaction_term(s.w, s.mode, s.chi, s.coeff); }

// k(t) = m / int_Omega w^chi, the nonlocal gain.
inline double k_of(const ScalarState& s) {
    if (s.mode == ScalarMode::local_power)
        throw std::invalid_argument("k_of: defined for the nonlocal modes only");
    return s.coeff / integrate(s.w, s.chi);
}

// Radial-decay monitor J = w_r + eta r w^q; nonpositivity on (0, R/2) encodes
// the pointwise bound w <= C r^{-2/(q-1)}.
inline Profile j_profile(const ScalarState& s, double eta, double q) {
    if (!(q > 1.0 && q <= s.chi + 1.0))
        throw std::invalid_argument("j_profile: q must lie in (1, chi+1]");
    if (!(eta > 0.0)) throw std::invalid_argument("j_profile: eta must be positive");
    Profile J = radial_derivative(s.w);
    const auto& r = s.w.grid->centers;
    for (int i = 0; i < s.w.size(); ++i) J[i] += eta * r[static_cast<size_t>(i)] * std::pow(s.w[i], q);
    return J;
}

// Worst normalized J over the inner half ball; <= 0 means the decay bound is
// holding at working precision.
inline double j_margin_inner(const ScalarState& s, double eta, double q) {
    const Profile J = j_profile(s, eta, q);
    const Profile wr = radial_derivative(s.w);
    const auto& g = *s.w.grid;
    double worst = -1e300;
    for (int i = 0; i < s.w.size(); ++i) {
        const double r = g.centers[static_cast<size_t>(i)];
        if (r >= 0.5 * g.radius) break;
        const double scale =
            std::abs(wr[i]) + eta * r * std::pow(s.w[i], q) + s.w[i] / g.radius + 1e-300;
        worst = std::max(worst, J[i] / scale);
    }
    return worst;
}

// Default exponent for the J monitor: midpoint of (2 chi / n + 1, chi + 1).
inline double default_j_exponent(double chi, int n) { return 1.0 + chi * (n + 2.0) / (2.0 * n); }
// Computable branch of the monitor slope coefficient.
inline double default_j_eta(double lambda, double mu, double chi, double q) {
    return std::min(mu, (chi + 1.0 - q) * lambda / q);
}

// Closed-form blow-up time of the spatially pure power ODE started at the
// effective peak: M_eff^{-chi} / (lambda chi).
inline double ode_minorant_blowup_time(double peak, double lambda, double chi) {
    if (!(peak > 0.0 && lambda > 0.0 && chi > 0.0))
        throw std::invalid_argument("ode_minorant_blowup_time: arguments must be positive");
    return std::pow(peak, -chi) / (lambda * chi);
}

// ---------------------------------------------------------------------------
// Stepper
// ---------------------------------------------------------------------------

class ScalarStepper {
public:
    explicit ScalarStepper(GridPtr grid, SourceFn source = nullptr)
        : grid_(std::move(grid)), source_(std::move(source)) {
        const size_t n = static_cast<size_t>(grid_->cells);
        lower_.resize(n);
        diag_.resize(n);
        upper_.resize(n);
        solver_.resize(grid_->cells);
    }

    // One Strang-split base step of size dt; the building block for both the
    // adaptive controller and the fixed-dt convergence studies.
    std::vector<double> base_step(const std::vector<double>& w, double t, double dt, ScalarMode mode,
                                  double chi, double coeff) const {
        const double shift = (mode == ScalarMode::v_form) ? 1.0 : 0.0;
        std::vector<double> a = heun_reaction(w, t, 0.5 * dt, mode, chi, coeff);
        crank_nicolson(a, dt, shift);
        return heun_reaction(a, t + 0.5 * dt, 0.5 * dt, mode, chi, coeff);
    }

    // Reaction Lipschitz scale (chi+1) * gain * ||w||_inf^chi.
    double reaction_scale(const std::vector<double>& w, ScalarMode mode, double chi, double coeff) const {
        double wmax = 0.0;
        for (double v : w) wmax = std::max(wmax, std::abs(v));
        double gain = coeff;
        if (mode != ScalarMode::local_power) gain = coeff / integrate_pow(w, chi);
        return (chi + 1.0) * gain * std::pow(wmax, chi);
    }

    const GridPtr& grid() const { return grid_; }

private:
    double integrate_pow(const std::vector<double>& w, double p) const {
        Profile tmp(grid_);
        tmp.values = w;
        return integrate(tmp, p);
    }

    void add_reaction(const std::vector<double>& w, double t, ScalarMode mode, double chi, double coeff,
                      std::vector<double>& out) const {
        double gain = coeff;
        if (mode != ScalarMode::local_power) gain = coeff / integrate_pow(w, chi);
        const auto& r = grid_->centers;
        for (size_t i = 0; i < w.size(); ++i) {
            double v = gain * std::pow(w[i], chi + 1.0);
            if (source_) v += source_(r[i], t);
            out[i] = v;
        }
    }

    std::vector<double> heun_reaction(const std::vector<double>& w, double t, double dt, ScalarMode mode,
                                      double chi, double coeff) const {
        std::vector<double> k1(w.size()), k2(w.size()), pred(w.size());
        add_reaction(w, t, mode, chi, coeff, k1);
        for (size_t i = 0; i < w.size(); ++i) pred[i] = w[i] + dt * k1[i];
        add_reaction(pred, t + dt, mode, chi, coeff, k2);
        std::vector<double> out(w.size());
        for (size_t i = 0; i < w.size(); ++i) out[i] = w[i] + 0.5 * dt * (k1[i] + k2[i]);
        return out;
    }

    // (I - theta (L - shift)) w_new = (I + theta (L - shift)) w, theta = dt/2,
    // on the conservative face-flux stencil.
    void crank_nicolson(std::vector<double>& w, double dt, double shift) const {
        const auto& fw = grid_->face_weight;
        const auto& cw = grid_->cell_weight;
        const int N = grid_->cells;
        const double th = 0.5 * dt;
        std::vector<double> rhs(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i) {
            const size_t si = static_cast<size_t>(i);
            const double alo = fw[si] / cw[si];
            const double ahi = (i + 1 < N) ? fw[si + 1] / cw[si] : 0.0;
            double lap = 0.0;
            if (i > 0) lap += alo * (w[si - 1] - w[si]);
            if (i + 1 < N) lap += ahi * (w[si + 1] - w[si]);
            rhs[si] = w[si] + th * (lap - shift * w[si]);
            lower_[si] = -th * alo;
            upper_[si] = -th * ahi;
            diag_[si] = 1.0 + th * (alo + ahi) + th * shift;
        }
        solver_.solve(lower_, diag_, upper_, rhs);
        w = std::move(rhs);
    }

    GridPtr grid_;
    SourceFn source_;
    mutable std::vector<double> lower_, diag_, upper_;
    mutable TridiagonalSolver solver_;
};

struct StepResult {
    double accepted_dt = 0.0;
    bool underflow = false;  // dt needed below dt_min: imminent blow-up signal
};

namespace detail {

struct AdaptiveStepper {
    ScalarStepper stepper;
    double dt;
    double dt_min;
    double safety;

    AdaptiveStepper(GridPtr grid, const StepControl& ctrl, SourceFn source = nullptr)
        : stepper(std::move(grid), std::move(source)),
          dt(ctrl.effective_dt_init()),
          dt_min(ctrl.effective_dt_min()),
          safety(ctrl.safety) {}

    double capped_dt(const ScalarState& s, double t_stop) const {
        double d = dt;
        const double g = stepper.reaction_scale(s.w.values, s.mode, s.chi, s.coeff);
        if (g > 0.0) d = std::min(d, safety / ((s.chi + 1.0) * g));
        const double remaining = t_stop - s.t;
        if (d >= 0.95 * remaining) d = remaining;
        return d;
    }

    // Try one step of size d; on acceptance updates s and returns true.
    // err_ratio is filled either way (error estimate / tolerance).
    bool attempt(ScalarState& s, double d, double rel_tol, double& err_ratio) {
        const auto full = stepper.base_step(s.w.values, s.t, d, s.mode, s.chi, s.coeff);
        auto half = stepper.base_step(s.w.values, s.t, 0.5 * d, s.mode, s.chi, s.coeff);
        half = stepper.base_step(half, s.t + 0.5 * d, 0.5 * d, s.mode, s.chi, s.coeff);
        double err = 0.0, scale = 0.0;
        for (size_t i = 0; i < half.size(); ++i) {
            err = std::max(err, std::abs(half[i] - full[i]));
            scale = std::max(scale, std::abs(half[i]));
        }
        err /= 3.0;  // order-2 base scheme
        err_ratio = err / (rel_tol * std::max(scale, 1e-300));
        if (err_ratio > 1.0) return false;
        for (size_t i = 0; i < half.size(); ++i) s.w.values[i] = half[i] + (half[i] - full[i]) / 3.0;
        s.t += d;
        return true;
    }

    void rescale(double err_ratio) {
        const double fac = safety * std::pow(1.0 / std::max(err_ratio, 1e-12), 1.0 / 3.0);
        dt *= std::clamp(fac, 0.1, 5.0);
    }
};

}  // namespace detail

// One accepted adaptive step (or an underflow signal). Convenience wrapper
// around the controller used by run(); repeated calls re-estimate dt from
// dt_init, so prefer run() for whole trajectories.
inline std::pair<ScalarState, StepResult> step(ScalarState state, const StepControl& ctrl,
                                               const SourceFn& source = nullptr) {
    ctrl.validate(linf_norm(state.w));
    detail::AdaptiveStepper ad(state.w.grid, ctrl, source);
    for (long k = 0; k < ctrl.max_steps; ++k) {
        const double d = ad.capped_dt(state, ctrl.T_end);
        if (d < ad.dt_min) return {std::move(state), {0.0, true}};
        double ratio = 0.0;
        if (ad.attempt(state, d, ctrl.rel_tol, ratio)) {
            ad.rescale(ratio);
            return {std::move(state), {d, false}};
        }
        ad.dt = d;
        ad.rescale(ratio);
    }
    throw std::runtime_error("step: no acceptable step size found");
}

// ---------------------------------------------------------------------------
// Whole-trajectory driver with blow-up detection
// ---------------------------------------------------------------------------

enum class RunOutcome { blew_up, reached_T_end, step_limit };

inline const char* to_string(RunOutcome o) {
    switch (o) {
        case RunOutcome::blew_up: return "blew_up";
        case RunOutcome::reached_T_end: return "reached_T_end";
        case RunOutcome::step_limit: return "step_limit";
    }
    return "?";
}

struct ScalarHistorySample {
    double t = 0.0;
    double linf = 0.0;
    double lp = 0.0;       // only if lp_exponent > 0
    double k = 0.0;        // nonlocal gain (nan in local_power)
    double j_margin = 0.0; // only if the J monitor is armed
    double min_w = 0.0;
};

struct ScalarMonitors {
    double lp_exponent = 0.0;  // 0: off
    bool track_j = false;
    double j_eta = 0.0;
    double j_q = 0.0;
    int stride = 1;            // record every #stride accepted steps
    SourceFn source;           // manufactured forcing, if any
    std::function<void(const ScalarState&)> on_record;  // called at every recorded sample
};

struct BlowupReport {
    RunOutcome outcome = RunOutcome::reached_T_end;
    double T_detect = 0.0;                  // last accepted time
    std::optional<double> extrapolated_T;   // 1/||w||^chi fit over the final decade
    std::vector<ScalarHistorySample> history;
    std::string termination_reason;
    long steps_accepted = 0;
    long steps_rejected = 0;
    double min_w_overall = 0.0;

    // problem echo, so the report is self-describing
    ScalarMode mode = ScalarMode::nonlocal;
    double chi = 0.0;
    double coeff = 0.0;
};

namespace detail {

inline std::optional<double> fit_blowup_time(const std::vector<ScalarHistorySample>& hist, double chi) {
    if (hist.size() < 5) return std::nullopt;
    const double top = hist.back().linf;
    if (!(top > 0.0)) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (const auto& s : hist) {
        if (s.linf < 0.1 * top) continue;
        const double y = std::pow(s.linf, -chi);
        sx += s.t; sy += y; sxx += s.t * s.t; sxy += s.t * y;
        ++n;
    }
    if (n < 3) return std::nullopt;
    const double det = n * sxx - sx * sx;
    if (det == 0.0) return std::nullopt;
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sy * sxx - sx * sxy) / det;
    if (!(slope < 0.0)) return std::nullopt;
    return -intercept / slope;
}

inline ScalarHistorySample sample_state(const ScalarState& s, const ScalarMonitors& mon) {
    ScalarHistorySample h;
    h.t = s.t;
    h.linf = linf_norm(s.w);
    h.min_w = min_value(s.w);
    h.lp = (mon.lp_exponent > 0.0) ? lp_norm(s.w, mon.lp_exponent) : 0.0;
    h.k = (s.mode != ScalarMode::local_power) ? k_of(s) : std::nan("");
    h.j_margin = mon.track_j ? j_margin_inner(s, mon.j_eta, mon.j_q) : std::nan("");
    return h;
}

}  // namespace detail

inline BlowupReport run(ScalarState state, const StepControl& ctrl, const ScalarMonitors& mon = {}) {
    if (state.mode != ScalarMode::local_power && min_value(state.w) <= 0.0)
        throw std::invalid_argument("run: nonlocal modes require strictly positive initial data");
    const double linf0 = linf_norm(state.w);
    ctrl.validate(linf0);
    const double threshold = ctrl.effective_threshold(linf0);

    BlowupReport rep;
    rep.mode = state.mode;
    rep.chi = state.chi;
    rep.coeff = state.coeff;
    rep.min_w_overall = min_value(state.w);
    rep.history.push_back(detail::sample_state(state, mon));

    detail::AdaptiveStepper ad(state.w.grid, ctrl, mon.source);
    rep.outcome = RunOutcome::step_limit;
    rep.termination_reason = "step budget exhausted";
    double norm_prev = linf0, norm_cur = linf0;  // the two most recent accepted norms
    long since_record = 0;

    for (long k = 0; k < ctrl.max_steps; ++k) {
        if (ctrl.T_end - state.t < ad.dt_min) {  // landed (up to roundoff of the final step)
            rep.outcome = RunOutcome::reached_T_end;
            rep.termination_reason = "reached T_end";
            break;
        }
        const double d = ad.capped_dt(state, ctrl.T_end);
        if (d < ad.dt_min || state.t + d == state.t) {
            if (norm_cur >= norm_prev) {
                rep.outcome = RunOutcome::blew_up;
                rep.termination_reason = "dt underflow with rising max norm";
            } else {
                rep.termination_reason = "dt underflow without growth";
            }
            break;
        }
        double ratio = 0.0;
        if (ad.attempt(state, d, ctrl.rel_tol, ratio)) {
            norm_prev = norm_cur;
            norm_cur = linf_norm(state.w);
            ++rep.steps_accepted;
            rep.min_w_overall = std::min(rep.min_w_overall, min_value(state.w));
            if (++since_record >= mon.stride) {
                rep.history.push_back(detail::sample_state(state, mon));
                since_record = 0;
                if (mon.on_record) mon.on_record(state);
            }
            if (norm_cur >= threshold) {
                rep.outcome = RunOutcome::blew_up;
                rep.termination_reason = "max norm reached the blow-up threshold";
                break;
            }
        } else {
            ++rep.steps_rejected;
            ad.dt = d;
        }
        ad.rescale(ratio);
    }

    if (state.t > rep.history.back().t) rep.history.push_back(detail::sample_state(state, mon));
    rep.T_detect = state.t;
    if (rep.outcome == RunOutcome::blew_up)
        rep.extrapolated_T = detail::fit_blowup_time(rep.history, state.chi);
    return rep;
}

// ---------------------------------------------------------------------------
// T1 window detection
// ---------------------------------------------------------------------------

struct T1Detection {
    std::optional<double> t1;  // first sampled time with k < 2 lambda, if any before T0
    double T0 = 0.0;           // min(m^{-2}, detected horizon)
};

inline T1Detection detect_T1(const BlowupReport& rep, double lambda) {
    if (rep.mode == ScalarMode::local_power)
        throw std::invalid_argument("detect_T1: needs a nonlocal-mode report");
    const double horizon = rep.T_detect;
    T1Detection out;
    out.T0 = std::min(std::pow(rep.coeff, -2.0), horizon);
    for (const auto& s : rep.history) {
        if (s.t > out.T0) break;
        if (s.k < 2.0 * lambda) {
            out.t1 = s.t;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synchronized comparison of the nonlocal solution against the local-power
// minorant z_t = Lap z + 2 lambda z^{chi+1} from the same initial data. Both
// states advance with a shared dt; the cellwise gap is tracked while the
// nonlocal gain stays above 2 lambda.
// ---------------------------------------------------------------------------

struct ComparisonSample {
    double t = 0.0;
    double k = 0.0;
    double normalized_gap = 0.0;  // min(w - z) / ||w||_inf at this step
};

struct ComparisonReport {
    double min_normalized_gap = 1e300;  // over steps with k >= 2 lambda; nan if none
    double t_reached = 0.0;
    long steps = 0;
    RunOutcome outcome = RunOutcome::reached_T_end;  // of the pair (first trigger)
    std::vector<ComparisonSample> history;
};

inline ComparisonReport run_comparison(const Profile& w0, double m, double chi, double lambda,
                                       const StepControl& ctrl, int record_stride = 1) {
    ScalarState sw{w0, 0.0, ScalarMode::nonlocal, chi, m};
    ScalarState sz{w0, 0.0, ScalarMode::local_power, chi, 2.0 * lambda};
    const double linf0 = linf_norm(w0);
    ctrl.validate(linf0);
    const double threshold = ctrl.effective_threshold(linf0);

    detail::AdaptiveStepper aw(w0.grid, ctrl);
    detail::AdaptiveStepper az(w0.grid, ctrl);

    ComparisonReport rep;
    rep.outcome = RunOutcome::step_limit;
    double dt = ctrl.effective_dt_init();
    for (long k = 0; k < ctrl.max_steps; ++k) {
        if (ctrl.T_end - sw.t < aw.dt_min) {
            rep.outcome = RunOutcome::reached_T_end;
            break;
        }
        aw.dt = az.dt = dt;
        const double d = std::min(aw.capped_dt(sw, ctrl.T_end), az.capped_dt(sz, ctrl.T_end));
        if (d < aw.dt_min || sw.t + d == sw.t) {
            rep.outcome = RunOutcome::blew_up;
            break;
        }
        ScalarState tw = sw, tz = sz;
        double ratio_w = 0.0, ratio_z = 0.0;
        const bool ok_w = aw.attempt(tw, d, ctrl.rel_tol, ratio_w);
        const bool ok_z = az.attempt(tz, d, ctrl.rel_tol, ratio_z);
        const double ratio = std::max(ratio_w, ratio_z);
        if (ok_w && ok_z) {
            sw = std::move(tw);
            sz = std::move(tz);
            ++rep.steps;
            const double kk = k_of(sw);
            double gap = 1e300;
            for (int i = 0; i < sw.w.size(); ++i) gap = std::min(gap, sw.w[i] - sz.w[i]);
            const double ngap = gap / std::max(linf_norm(sw.w), 1e-300);
            if (kk >= 2.0 * lambda) rep.min_normalized_gap = std::min(rep.min_normalized_gap, ngap);
            if (rep.steps % record_stride == 0) rep.history.push_back({sw.t, kk, ngap});
            if (linf_norm(sw.w) >= threshold || linf_norm(sz.w) >= threshold) {
                rep.outcome = RunOutcome::blew_up;
                break;
            }
        }
        const double fac = ctrl.safety * std::pow(1.0 / std::max(ratio, 1e-12), 1.0 / 3.0);
        dt = d * std::clamp(fac, 0.1, 5.0);
    }
    rep.t_reached = sw.t;
    if (rep.min_normalized_gap == 1e300) rep.min_normalized_gap = std::nan("");
    return rep;
}

// Fixed-step integration of the base scheme (no adaptivity, no extrapolation);
// the object of the temporal convergence study.
inline ScalarState integrate_fixed(ScalarState state, double dt, long steps,
                                   const SourceFn& source = nullptr) {
    ScalarStepper st(state.w.grid, source);
    for (long k = 0; k < steps; ++k) {
        state.w.values = st.base_step(state.w.values, state.t, dt, state.mode, state.chi, state.coeff);
        state.t += dt;
    }
    return state;
}

}  // namespace radblow
