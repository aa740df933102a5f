#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "radblow/grid.hpp"
#include "radblow/scalar_solver.hpp"
#include "radblow/tridiag.hpp"

//
// The two-component system for a fixed relaxation parameter eps:
//
//   eps u_t = Lap u - chi div( (u/v) grad v )
//       v_t = Lap v - v + u v
//
// One base step advances u with implicit diffusion and an explicit
// conservative taxis flux (both as face-flux differences, so the discrete
// mass of u telescopes exactly), then v with implicit diffusion/decay and the
// explicit production u v. Step-doubling with extrapolation controls dt;
// on top of the error control dt is capped by the taxis CFL scale
// eps h / (chi max |v_r / v|) and the production scale 1 / ||u||_inf.
//

namespace radblow {

struct CoupledState {
    Profile u;  // density, >= 0
    Profile v;  // attractiveness, > 0
    double t = 0.0;
    double eps = 1.0;
    double chi = 2.0;
};

enum class CoupledOutcome { reached_T_end, blew_up, dt_underflow, step_limit };

inline const char* to_string(CoupledOutcome o) {
    switch (o) {
        case CoupledOutcome::reached_T_end: return "reached_T_end";
        case CoupledOutcome::blew_up: return "blew_up";
        case CoupledOutcome::dt_underflow: return "dt_underflow";
        case CoupledOutcome::step_limit: return "step_limit";
    }
    return "?";
}

// Normalized distance of u from the quasi-steady manifold m v^chi / int v^chi.
inline double quasi_steady_residual(const CoupledState& s, double m) {
    require_same_grid(s.u, s.v, "quasi_steady_residual");
    Profile diff(s.u.grid);
    const double gain = m / integrate(s.v, s.chi);
    for (int i = 0; i < s.u.size(); ++i) diff[i] = s.u[i] - gain * std::pow(s.v[i], s.chi);
    return lp_norm(diff, 2.0) / std::max(lp_norm(s.u, 2.0), 1e-12);
}

struct CoupledHistorySample {
    double t = 0.0;
    double lp_u = 0.0;
    double linf_u = 0.0;
    double min_v = 0.0;
    double linf_v = 0.0;
    double mass_drift = 0.0;   // |int u - int u0| / max(|int u0|, tiny)
    double residual = 0.0;     // quasi-steady residual
};

struct CoupledRunReport {
    CoupledOutcome outcome = CoupledOutcome::reached_T_end;
    double T_detect = 0.0;
    std::vector<CoupledHistorySample> history;
    std::string termination_reason;
    long steps_accepted = 0;
    long steps_rejected = 0;

    double max_mass_drift = 0.0;       // over all accepted steps
    double max_step_mass_drift = 0.0;  // largest single-step change
    double min_floor_ratio = 1e300;    // min over steps of  min v(t) / (e^{-t} min v0)
    double min_u_normalized = 0.0;     // min u / ||u||_inf, most negative seen
    double residual_at_sample = std::nan("");  // residual at the forced sample time, if any

    double eps = 0.0;
    double chi = 0.0;
    double p_monitor = 0.0;
};

struct CoupledMonitors {
    int stride = 1;
    std::optional<double> sample_time;  // force a step landing here and record the residual
    std::function<void(const CoupledState&)> on_record;  // called at every recorded sample
};

class CoupledStepper {
public:
    explicit CoupledStepper(GridPtr grid) : grid_(std::move(grid)) {
        solver_.resize(grid_->cells);
        const size_t n = static_cast<size_t>(grid_->cells);
        lower_.resize(n);
        diag_.resize(n);
        upper_.resize(n);
    }

    // One split base step of size dt.
    void base_step(const std::vector<double>& u, const std::vector<double>& v, double dt, double eps,
                   double chi, std::vector<double>& u_out, std::vector<double>& v_out) const {
        const auto& fw = grid_->face_weight;
        const auto& cw = grid_->cell_weight;
        const int N = grid_->cells;

        // explicit taxis: flux difference of chi * avg(u/v) * dv/dr on faces
        u_out.assign(static_cast<size_t>(N), 0.0);
        double flux_lo = 0.0;
        for (int i = 0; i < N; ++i) {
            const size_t si = static_cast<size_t>(i);
            double flux_hi = 0.0;
            if (i + 1 < N) {
                const double cf = 0.5 * (u[si] / v[si] + u[si + 1] / v[si + 1]);
                flux_hi = fw[si + 1] * cf * (v[si + 1] - v[si]);
            }
            u_out[si] = u[si] - (dt / eps) * chi * (flux_hi - flux_lo) / cw[si];
            flux_lo = flux_hi;
        }
        implicit_solve(u_out, dt / eps, 0.0);

        // v: explicit production with the pre-step u, implicit diffusion + decay
        v_out.resize(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i) {
            const size_t si = static_cast<size_t>(i);
            v_out[si] = v[si] + dt * u[si] * v[si];
        }
        implicit_solve(v_out, dt, 1.0);
    }

    // max over faces of |dv/dr| / v_face, the advective stiffness of the taxis
    double max_log_slope(const std::vector<double>& v) const {
        const int N = grid_->cells;
        double m = 0.0;
        for (int i = 0; i + 1 < N; ++i) {
            const size_t si = static_cast<size_t>(i);
            const double slope = std::abs(v[si + 1] - v[si]) / grid_->h;
            m = std::max(m, slope / (0.5 * (v[si] + v[si + 1])));
        }
        return m;
    }

    const GridPtr& grid() const { return grid_; }

private:
    // (I + a*shift - a L) x = rhs in place
    void implicit_solve(std::vector<double>& rhs, double a, double shift) const {
        const auto& fw = grid_->face_weight;
        const auto& cw = grid_->cell_weight;
        const int N = grid_->cells;
        for (int i = 0; i < N; ++i) {
            const size_t si = static_cast<size_t>(i);
            const double alo = fw[si] / cw[si];
            const double ahi = (i + 1 < N) ? fw[si + 1] / cw[si] : 0.0;
            lower_[si] = -a * alo;
            upper_[si] = -a * ahi;
            diag_[si] = 1.0 + a * (alo + ahi) + a * shift;
        }
        solver_.solve(lower_, diag_, upper_, rhs);
    }

    GridPtr grid_;
    mutable TridiagonalSolver solver_;
    mutable std::vector<double> lower_, diag_, upper_;
};

namespace detail {

inline CoupledHistorySample sample_coupled(const CoupledState& s, double p, double mass0, double m) {
    CoupledHistorySample h;
    h.t = s.t;
    h.lp_u = lp_norm(s.u, p);
    h.linf_u = linf_norm(s.u);
    h.min_v = min_value(s.v);
    h.linf_v = linf_norm(s.v);
    h.mass_drift = std::abs(integrate(s.u) - mass0) / std::max(std::abs(mass0), 1e-30);
    h.residual = quasi_steady_residual(s, m);
    return h;
}

}  // namespace detail

// Adaptive wrapper shared by run_coupled and the tests.
class CoupledAdaptive {
public:
    CoupledAdaptive(GridPtr grid, const StepControl& ctrl)
        : stepper_(std::move(grid)),
          dt_(ctrl.effective_dt_init()),
          dt_min_(ctrl.effective_dt_min()),
          safety_(ctrl.safety),
          rel_tol_(ctrl.rel_tol) {}

    double capped_dt(const CoupledState& s, double t_stop) const {
        double d = dt_;
        const double slope = stepper_.max_log_slope(s.v.values);
        if (slope > 0.0) d = std::min(d, safety_ * s.eps * s.u.grid->h / (s.chi * slope));
        const double umax = linf_norm(s.u);
        if (umax > 0.0) d = std::min(d, safety_ / umax);
        const double remaining = t_stop - s.t;
        if (d >= 0.95 * remaining) d = remaining;
        return d;
    }

    bool attempt(CoupledState& s, double d, double& err_ratio) {
        std::vector<double> uf, vf, u1, v1, uh, vh;
        stepper_.base_step(s.u.values, s.v.values, d, s.eps, s.chi, uf, vf);
        stepper_.base_step(s.u.values, s.v.values, 0.5 * d, s.eps, s.chi, u1, v1);
        stepper_.base_step(u1, v1, 0.5 * d, s.eps, s.chi, uh, vh);
        double err = 0.0, scale = 0.0;
        for (size_t i = 0; i < uh.size(); ++i) {
            err = std::max({err, std::abs(uh[i] - uf[i]), std::abs(vh[i] - vf[i])});
            scale = std::max({scale, std::abs(uh[i]), std::abs(vh[i])});
        }
        err_ratio = err / (rel_tol_ * std::max(scale, 1e-300));
        if (err_ratio > 1.0) return false;
        for (size_t i = 0; i < uh.size(); ++i) {
            s.u.values[i] = 2.0 * uh[i] - uf[i];
            s.v.values[i] = 2.0 * vh[i] - vf[i];
        }
        s.t += d;
        return true;
    }

    void rescale(double err_ratio) {
        const double fac = safety_ * std::sqrt(1.0 / std::max(err_ratio, 1e-12));
        dt_ *= std::clamp(fac, 0.1, 5.0);
    }

    double dt_min() const { return dt_min_; }
    void set_dt(double d) { dt_ = d; }

private:
    CoupledStepper stepper_;
    double dt_;
    double dt_min_;
    double safety_;
    double rel_tol_;
};

// One accepted adaptive step (or an underflow signal). Convenience mirror of
// the scalar single-step interface; run_coupled drives whole trajectories.
inline std::pair<CoupledState, StepResult> step_coupled(CoupledState state, const StepControl& ctrl) {
    require_same_grid(state.u, state.v, "step_coupled");
    if (min_value(state.v) <= 0.0)
        throw std::invalid_argument("step_coupled: v must be strictly positive");
    ctrl.validate(linf_norm(state.u));
    CoupledAdaptive ad(state.u.grid, ctrl);
    for (long k = 0; k < ctrl.max_steps; ++k) {
        const double d = ad.capped_dt(state, ctrl.T_end);
        if (d < ad.dt_min()) return {std::move(state), {0.0, true}};
        double ratio = 0.0;
        if (ad.attempt(state, d, ratio)) {
            ad.rescale(ratio);
            return {std::move(state), {d, false}};
        }
        ad.set_dt(d);
        ad.rescale(ratio);
    }
    throw std::runtime_error("step_coupled: no acceptable step size found");
}

inline CoupledRunReport run_coupled(const Profile& u0, const Profile& v0, double eps, double chi,
                                    const StepControl& ctrl, double p_monitor,
                                    const CoupledMonitors& mon = {}) {
    require_same_grid(u0, v0, "run_coupled");
    const int n = u0.grid->dim;
    if (!(p_monitor > 0.5 * n))
        throw std::invalid_argument("run_coupled: the norm exponent must exceed n/2");
    if (min_value(u0) < 0.0) throw std::invalid_argument("run_coupled: u0 must be nonnegative");
    if (min_value(v0) <= 0.0) throw std::invalid_argument("run_coupled: v0 must be strictly positive");
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("run_coupled: eps must lie in (0, 1]");
    if (!(chi > 0.0)) throw std::invalid_argument("run_coupled: chi must be positive");

    const double lp0 = lp_norm(u0, p_monitor);
    ctrl.validate(lp0);
    const double threshold = ctrl.blowup_threshold > 0.0
                                 ? ctrl.blowup_threshold
                                 : 1e8 * std::max(lp0, 1.0);
    const double mass0 = integrate(u0);
    const double min_v0 = min_value(v0);
    // an order below the proven e^{-t} bound: touching it means the scheme broke
    const double v_floor = 1e-3 * std::exp(-ctrl.T_end) * min_v0;

    CoupledState s{u0, v0, 0.0, eps, chi};
    CoupledAdaptive ad(u0.grid, ctrl);

    CoupledRunReport rep;
    rep.eps = eps;
    rep.chi = chi;
    rep.p_monitor = p_monitor;
    rep.outcome = CoupledOutcome::step_limit;
    rep.termination_reason = "step budget exhausted";
    rep.min_u_normalized = 0.0;
    rep.history.push_back(detail::sample_coupled(s, p_monitor, mass0, mass0));

    double norm_prev = lp0, norm_cur = lp0;  // the two most recent accepted L^p norms
    double prev_mass = mass0;
    long since_record = 0;

    for (long k = 0; k < ctrl.max_steps; ++k) {
        if (ctrl.T_end - s.t < ad.dt_min()) {  // landed (up to roundoff of the final step)
            rep.outcome = CoupledOutcome::reached_T_end;
            rep.termination_reason = "reached T_end";
            break;
        }
        double d = ad.capped_dt(s, ctrl.T_end);
        bool landing_on_sample = false;
        if (mon.sample_time && s.t < *mon.sample_time && *mon.sample_time - s.t >= ad.dt_min() &&
            d >= 0.95 * (*mon.sample_time - s.t)) {
            d = *mon.sample_time - s.t;
            landing_on_sample = true;
        }
        if (d < ad.dt_min() || s.t + d == s.t) {
            if (norm_cur >= norm_prev) {
                rep.outcome = CoupledOutcome::blew_up;
                rep.termination_reason = "dt underflow with rising L^p norm";
            } else {
                rep.outcome = CoupledOutcome::dt_underflow;
                rep.termination_reason = "dt underflow";
            }
            break;
        }
        double ratio = 0.0;
        if (ad.attempt(s, d, ratio)) {
            ++rep.steps_accepted;
            norm_prev = norm_cur;
            norm_cur = lp_norm(s.u, p_monitor);
            const double mass = integrate(s.u);
            rep.max_step_mass_drift = std::max(
                rep.max_step_mass_drift, std::abs(mass - prev_mass) / std::max(std::abs(mass0), 1e-30));
            rep.max_mass_drift = std::max(
                rep.max_mass_drift, std::abs(mass - mass0) / std::max(std::abs(mass0), 1e-30));
            prev_mass = mass;

            const double mv = min_value(s.v);
            if (mv < v_floor)
                throw std::runtime_error(
                    "run_coupled: v fell to the positivity floor (scheme failure), t = " +
                    std::to_string(s.t));
            rep.min_floor_ratio =
                std::min(rep.min_floor_ratio, mv / (std::exp(-s.t) * min_v0));
            const double umax = linf_norm(s.u);
            if (umax > 0.0)
                rep.min_u_normalized = std::min(rep.min_u_normalized, min_value(s.u) / umax);

            if (landing_on_sample) rep.residual_at_sample = quasi_steady_residual(s, mass0);
            if (++since_record >= mon.stride || landing_on_sample) {
                rep.history.push_back(detail::sample_coupled(s, p_monitor, mass0, mass0));
                since_record = 0;
                if (mon.on_record) mon.on_record(s);
            }
            if (norm_cur >= threshold) {
                rep.outcome = CoupledOutcome::blew_up;
                rep.termination_reason = "L^p norm reached the blow-up threshold";
                break;
            }
        } else {
            ++rep.steps_rejected;
            ad.set_dt(d);
        }
        ad.rescale(ratio);
    }

    if (s.t > rep.history.back().t)
        rep.history.push_back(detail::sample_coupled(s, p_monitor, mass0, mass0));
    rep.T_detect = s.t;
    return rep;
}

}  // namespace radblow
