#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "radblow/grid.hpp"

//
// Blow-up-seeding initial data: a smoothed version of the singular profile
// r^{-2/chi}, built from three closed-form pieces,
//
//   w0(r) = cubic cap                      on [0, delta],
//   w0(r) = R^alpha r^{-alpha}             on (delta, R/2],
//   w0(r) = quintic Hermite bridge         on (R/2, R],
//
// with alpha = 2/chi, delta = min(M^{-1/alpha}, R/4). The cap matches the
// power profile to second order at delta; the bridge matches it to second
// order at R/2 and lands at (1, 0, 0) at the wall. Together with the profile
// come three constants: a lower bound A on the reciprocal chi-integral, a
// subsolution coefficient lambda with  Lap w0 + lambda w0^{chi+1} >= 0, and a
// slope-comparison coefficient mu with  w0_r + mu r w0^{chi+1} <= 0 on
// (0, R/2). All three depend only on (chi, n, R), never on M.
//

namespace radblow {

struct InitialDataParams {
    double chi = 2.0;    // sensitivity, > 0
    int dim = 3;         // n >= 3
    double radius = 1.0; // R > 0
    double peak = 8.0;   // peak-height parameter M > 0

    double alpha() const { return 2.0 / chi; }
    double delta() const { return std::min(std::pow(peak, -chi / 2.0), radius / 4.0); }

    void validate() const {
        if (!(chi > 0.0)) throw std::invalid_argument("InitialDataParams: chi must be positive");
        if (dim < 3) throw std::invalid_argument("InitialDataParams: dimension must be >= 3");
        if (!(radius > 0.0)) throw std::invalid_argument("InitialDataParams: radius must be positive");
        if (!(peak > 0.0)) throw std::invalid_argument("InitialDataParams: peak must be positive");
    }
};

struct ConstructionConstants {
    double inv_chi_integral;  // A = (int_Omega W^chi)^{-1}
    double lambda;            // Lap w0 + lambda w0^{chi+1} >= 0 everywhere
    double mu;                // w0_r + mu r w0^{chi+1} <= 0 on (0, R/2)
};

// S(r) = r^{-2/chi}. No cell sits at r = 0.
inline Profile singular_profile(const GridPtr& grid, double chi) {
    if (!(chi > 0.0)) throw std::invalid_argument("singular_profile: chi must be positive");
    Profile s(grid);
    const double a = 2.0 / chi;
    for (int i = 0; i < grid->cells; ++i) s[i] = std::pow(grid->centers[static_cast<size_t>(i)], -a);
    return s;
}

// Closed-form evaluator for the bridge W: the pure power R^alpha r^{-alpha}
// up to R/2, then the unique quintic through (value, slope, curvature) of the
// power at R/2 and (1, 0, 0) at R. In the scaled coordinate s = 2r/R - 1 the
// quintic depends on alpha only.
class BridgeProfile {
public:
    BridgeProfile(double chi, double R) : alpha_(2.0 / chi), radius_(R) {
        if (!(chi > 0.0) || !(R > 0.0))
            throw std::invalid_argument("BridgeProfile: chi and R must be positive");
        const double a = alpha_;
        const double v0 = std::pow(2.0, a);
        const double d0 = -a * v0;             // dW/ds at s = 0
        const double dd0 = a * (a + 1.0) * v0; // d2W/ds2 at s = 0
        const double b1 = 1.0 - v0 - d0 - 0.5 * dd0;
        const double b2 = -d0 - dd0;
        const double b3 = -dd0;
        const double c1 = b2 - 3.0 * b1;
        const double c2 = 0.5 * (b3 - 6.0 * b1);
        poly_ = {v0, d0, 0.5 * dd0, b1 - 4.0 * c1 + c2, 7.0 * c1 - 2.0 * c2, c2 - 3.0 * c1};
    }

    double value(double r) const {
        if (r <= 0.5 * radius_) return std::pow(radius_, alpha_) * std::pow(r, -alpha_);
        const double s = 2.0 * r / radius_ - 1.0;
        return horner(poly_, s);
    }

    double deriv(double r) const {
        if (r <= 0.5 * radius_) return -alpha_ * std::pow(radius_, alpha_) * std::pow(r, -alpha_ - 1.0);
        const double s = 2.0 * r / radius_ - 1.0;
        return horner(d1(), s) * (2.0 / radius_);
    }

    double second_deriv(double r) const {
        if (r <= 0.5 * radius_)
            return alpha_ * (alpha_ + 1.0) * std::pow(radius_, alpha_) * std::pow(r, -alpha_ - 2.0);
        const double s = 2.0 * r / radius_ - 1.0;
        return horner(d2(), s) * (4.0 / (radius_ * radius_));
    }

    double laplacian(double r, int n) const {
        return second_deriv(r) + (n - 1) / r * deriv(r);
    }

    double alpha() const { return alpha_; }
    double radius() const { return radius_; }

private:
    template <size_t K>
    static double horner(const std::array<double, K>& c, double s) {
        double acc = c[K - 1];
        for (size_t k = K - 1; k-- > 0;) acc = acc * s + c[k];
        return acc;
    }
    std::array<double, 5> d1() const {
        return {poly_[1], 2 * poly_[2], 3 * poly_[3], 4 * poly_[4], 5 * poly_[5]};
    }
    std::array<double, 4> d2() const {
        return {2 * poly_[2], 6 * poly_[3], 12 * poly_[4], 20 * poly_[5]};
    }

    double alpha_;
    double radius_;
    std::array<double, 6> poly_;
};

namespace detail {

// Audit resolution for monotonicity checks and constant enlargement; fixed so
// that the construction constants depend only on (chi, n, R).
inline constexpr int kAuditSamples = 8192;

inline void audit_bridge(const BridgeProfile& W, int samples) {
    const double R = W.radius();
    for (int j = 0; j < samples; ++j) {
        const double r = (j + 0.5) * R / samples;
        if (!(W.deriv(r) < 0.0))
            throw std::runtime_error(
                "bridge profile is not strictly decreasing at r = " + std::to_string(r) +
                " (alpha = " + std::to_string(W.alpha()) + "); no valid completion for these parameters");
        if (!(W.value(r) >= 1.0 - 1e-12))
            throw std::runtime_error("bridge profile drops below 1 at r = " + std::to_string(r));
    }
}

// int_Omega W^chi: power part closed form (alpha*chi = 2 < n), quintic part
// by composite Simpson on a fixed subdivision.
inline double bridge_chi_integral(const BridgeProfile& W, double chi, int n) {
    const double R = W.radius();
    const double omega = unit_sphere_area(n);
    const double power_part = R * R * std::pow(0.5 * R, n - 2) / (n - 2);
    const int K = kAuditSamples;  // even
    const double a = 0.5 * R, b = R, hh = (b - a) / K;
    auto f = [&](double r) { return std::pow(r, n - 1) * std::pow(W.value(r), chi); };
    double simpson = f(a) + f(b);
    for (int j = 1; j < K; ++j) simpson += f(a + j * hh) * ((j % 2) ? 4.0 : 2.0);
    simpson *= hh / 3.0;
    return omega * (power_part + simpson);
}

inline ConstructionConstants derive_constants(double chi, int n, double R) {
    const double alpha = 2.0 / chi;
    const BridgeProfile W(chi, R);
    audit_bridge(W, kAuditSamples);

    const double A = 1.0 / bridge_chi_integral(W, chi, n);

    // Proof values from the cap estimates, then enlarged so the inequalities
    // hold on the bridge as well (power region closed form, quintic region by
    // audit sampling).
    double lambda = alpha * (alpha + 3.0) * n * R * R;
    lambda = std::max(lambda, alpha * (n - alpha - 2.0) / (R * R));
    for (int j = 0; j <= kAuditSamples; ++j) {
        const double r = 0.5 * R + 0.5 * R * j / kAuditSamples;
        const double need = -W.laplacian(r, n) / std::pow(W.value(r), chi + 1.0);
        lambda = std::max(lambda, need);
    }

    double mu = alpha * std::pow(1.0 + alpha * (alpha + 5.0) / 6.0, -chi - 1.0) * R * R;
    mu = std::min(mu, alpha / (R * R));  // power region: W_r + mu r W^{chi+1} <= 0

    return {A, lambda, mu};
}

}  // namespace detail

// Cap polynomial value at radius r (valid for 0 <= r <= delta).
inline double w0_cap_value(const InitialDataParams& p, double r) {
    const double a = p.alpha(), d = p.delta();
    const double rho = r / d;
    const double c5 = a * (a + 5.0) / 6.0, c3 = a * (a + 3.0) / 2.0, c2 = a * (a + 2.0) / 3.0;
    return std::pow(p.radius, a) * std::pow(d, -a) * (1.0 + c5 - c3 * rho * rho + c2 * rho * rho * rho);
}

inline double w0_peak_value(const InitialDataParams& p) { return w0_cap_value(p, 0.0); }

// Bridge sampled at cell centers, with the loud monotonicity audit.
inline Profile bridge_profile(const GridPtr& grid, double chi, double R) {
    if (R != grid->radius)
        throw std::invalid_argument("bridge_profile: R does not match the grid radius");
    const BridgeProfile W(chi, R);
    detail::audit_bridge(W, 4 * grid->cells);
    Profile out(grid);
    for (int i = 0; i < grid->cells; ++i) out[i] = W.value(grid->centers[static_cast<size_t>(i)]);
    return out;
}

struct W0Construction {
    Profile w0;
    ConstructionConstants consts;
    double peak_value;  // w0(0) from the closed form (the effective peak)
    double delta;
};

inline W0Construction construct_w0(const GridPtr& grid, const InitialDataParams& p) {
    p.validate();
    if (grid->dim != p.dim || grid->radius != p.radius)
        throw std::invalid_argument("construct_w0: params do not match the grid");
    const double d = p.delta();
    int inside = 0;
    for (double r : grid->centers)
        if (r < d) ++inside;
    if (inside < 8)
        throw std::invalid_argument(
            "construct_w0: grid does not resolve the cap (need >= 8 cells inside (0, delta), have " +
            std::to_string(inside) + "); increase N or reduce the peak parameter");

    const BridgeProfile W(p.chi, p.radius);
    detail::audit_bridge(W, 4 * grid->cells);

    Profile w0(grid);
    for (int i = 0; i < grid->cells; ++i) {
        const double r = grid->centers[static_cast<size_t>(i)];
        w0[i] = (r <= d) ? w0_cap_value(p, r) : W.value(r);
    }
    return {std::move(w0), detail::derive_constants(p.chi, p.dim, p.radius), w0_peak_value(p), d};
}

// ---------------------------------------------------------------------------
// Verifier for the five constructed properties (six checks).
// ---------------------------------------------------------------------------

struct W0CheckResult {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // worst normalized slack; >= 0 means satisfied
};

struct VerificationReport {
    std::vector<W0CheckResult> checks;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const W0CheckResult& operator[](const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw std::out_of_range("no such check: " + name);
    }
};

struct W0VerifyTolerances {
    double rel = 1e-6;             // relative tolerance for the exact-formula checks
    double scaled = 1e-3;          // for the differential inequalities, scaled by w0^{chi+1}
    double boundary_slope = 1e-3;  // |w0_r(R)| <= this * w0(R)/R  (absorbs O(h^2) one-sided error)
};

inline VerificationReport verify_w0(const Profile& w0, const InitialDataParams& p,
                                    const ConstructionConstants& consts,
                                    const W0VerifyTolerances& tol = {}) {
    const RadialGrid& g = *w0.grid;
    const int N = g.cells;
    const double chi = p.chi, R = p.radius, a = p.alpha(), d = p.delta();
    VerificationReport rep;

    // (a) w0 >= 1
    {
        const double mn = min_value(w0);
        rep.checks.push_back({"floor", mn >= 1.0 - tol.rel, mn - 1.0});
    }

    const Profile w0r = radial_derivative(w0);

    // (b) radially nonincreasing, flat at the wall. The wall cell is judged by
    // its own absolute-slope condition: the one-sided stencil on a profile
    // with a cubically flat tail carries a +O(h^2) artifact there.
    {
        double worst = -1e300;
        for (int i = 0; i + 1 < N; ++i) {
            const double scale = std::max(w0[i] / R, 1e-300);
            worst = std::max(worst, w0r[i] / scale);
        }
        const double wall = std::abs(w0r[N - 1]) / std::max(w0[N - 1] / R, 1e-300);
        const bool pass = worst <= tol.rel && wall <= tol.boundary_slope;
        rep.checks.push_back({"monotone", pass, -std::max(worst, wall - tol.boundary_slope)});
    }

    // (c) peak follows the cap formula: compare the first cell against
    // R^alpha M (1 + alpha(alpha+5)/6) with the cap's exact curvature drop at
    // r_0 folded in (the cell center never sits at r = 0).
    {
        const double c5 = a * (a + 5.0) / 6.0, c3 = a * (a + 3.0) / 2.0, c2 = a * (a + 2.0) / 3.0;
        const double rho = std::min(g.centers[0] / d, 1.0);
        const double drop = (c3 * rho * rho - c2 * rho * rho * rho) / (1.0 + c5);
        const double target = std::pow(R, a) * p.peak * (1.0 + c5) * (1.0 - tol.rel - drop);
        rep.checks.push_back({"peak", w0[0] >= target, w0[0] / target - 1.0});
    }

    // (d) chi-integral bounded by 1/A
    {
        const double I = integrate(w0, chi);
        const double bound = (1.0 + tol.rel) / consts.inv_chi_integral;
        rep.checks.push_back({"chi_integral", I <= bound, 1.0 - I * consts.inv_chi_integral});
    }

    // (e) Lap w0 + lambda w0^{chi+1} >= 0, scaled by the local reaction size
    {
        const Profile lap = radial_laplacian(w0);
        double worst = 1e300;
        for (int i = 0; i < N; ++i) {
            const double scale = consts.lambda * std::pow(w0[i], chi + 1.0);
            worst = std::min(worst, (lap[i] + scale) / scale);
        }
        rep.checks.push_back({"subsolution", worst >= -tol.scaled, worst});
    }

    // (f) w0_r + mu r w0^{chi+1} <= 0 on r < R/2
    {
        double worst = -1e300;
        for (int i = 0; i < N; ++i) {
            const double r = g.centers[static_cast<size_t>(i)];
            if (r >= 0.5 * R) break;
            const double val = w0r[i] + consts.mu * r * std::pow(w0[i], chi + 1.0);
            const double scale = std::abs(w0r[i]) + consts.mu * r * std::pow(w0[i], chi + 1.0) + 1e-300;
            worst = std::max(worst, val / scale);
        }
        rep.checks.push_back({"slope_comparison", worst <= tol.scaled, -worst});
    }

    return rep;
}

}  // namespace radblow
