#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "radblow/grid.hpp"
#include "radblow/initial_data.hpp"
#include "radblow/scalar_solver.hpp"

using namespace radblow;

namespace {

constexpr double kExpOracle = 1.2696387543795927;  // e^{3/(4 pi)}
constexpr double kOdeBlowup = 1.0 / 48.0;          // z0^{-chi} / (coeff * chi) for z0=1, coeff=24, chi=2

}  // namespace

TEST_CASE("reaction term values and homogeneity") {
    auto g = make_grid(3, 1.0, 256);

    SECTION("constants factor through the nonlocal gain") {
        const Profile r = reaction_term(Profile(g, 2.0), ScalarMode::nonlocal, 2.0, 1.5);
        const double volume = integrate(Profile(g, 1.0));
        for (int i = 0; i < g->cells; ++i)
            CHECK(r[i] == Catch::Approx(1.5 * 2.0 / volume).epsilon(1e-13));
        // continuum value m c 3/(4 pi), up to the quadrature's O(h^2) volume error
        CHECK(r[0] == Catch::Approx(1.5 * 2.0 * 3.0 / (4.0 * M_PI)).epsilon(1e-4));
    }
    SECTION("local power") {
        const Profile r = reaction_term(Profile(g, 1.0), ScalarMode::local_power, 2.0, 24.0);
        for (int i = 0; i < g->cells; ++i) CHECK(r[i] == 24.0);
    }
    SECTION("degree-1 homogeneity of the nonlocal reaction") {
        std::mt19937 rng(777);
        std::uniform_real_distribution<double> amp(0.5, 3.0), cdist(0.01, 100.0);
        Profile w(g);
        for (auto& v : w.values) v = 1.0 + amp(rng);
        const double c = cdist(rng);
        Profile wc = w;
        for (auto& v : wc.values) v *= c;
        const Profile r1 = reaction_term(w, ScalarMode::nonlocal, 2.0, 3.0);
        const Profile rc = reaction_term(wc, ScalarMode::nonlocal, 2.0, 3.0);
        for (int i = 0; i < g->cells; ++i)
            CHECK(rc[i] == Catch::Approx(c * r1[i]).epsilon(1e-12));
    }
    SECTION("v_form subtracts the state") {
        const Profile rn = reaction_term(Profile(g, 2.0), ScalarMode::nonlocal, 2.0, 1.0);
        const Profile rv = reaction_term(Profile(g, 2.0), ScalarMode::v_form, 2.0, 1.0);
        for (int i = 0; i < g->cells; ++i) CHECK(rv[i] == Catch::Approx(rn[i] - 2.0).epsilon(1e-14));
    }
    SECTION("nonpositive states are rejected in fractional-power modes") {
        Profile w(g, 1.0);
        w[3] = 0.0;
        CHECK_THROWS_AS(reaction_term(w, ScalarMode::nonlocal, 2.0, 1.0), std::domain_error);
    }
}

TEST_CASE("nonlocal gain k") {
    auto g = make_grid(3, 1.0, 512);
    ScalarState s{Profile(g, 1.0), 0.0, ScalarMode::nonlocal, 2.0, 1.0};
    CHECK(k_of(s) == Catch::Approx(3.0 / (4.0 * M_PI)).epsilon(1e-5));
    ScalarState s2 = s;
    s2.coeff = 2.0;
    CHECK(k_of(s2) == 2.0 * k_of(s));

    const auto c = construct_w0(g, {2.0, 3, 1.0, 8.0});
    ScalarState sw{c.w0, 0.0, ScalarMode::nonlocal, 2.0, 600.0};
    CHECK(k_of(sw) >= 600.0 * c.consts.inv_chi_integral * (1.0 - 1e-9));
}

TEST_CASE("exponential oracle: uniform data stays uniform and grows exactly") {
    auto g = make_grid(3, 1.0, 512);
    ScalarState s{Profile(g, 1.0), 0.0, ScalarMode::nonlocal, 2.0, 1.0};
    StepControl ctrl;
    ctrl.T_end = 1.0;
    ctrl.rel_tol = 1e-6;
    ScalarMonitors mon;
    mon.stride = 1;
    const double rate = 1.0 / integrate(Profile(g, 1.0));  // discrete m/|Omega|

    BlowupReport rep;
    Profile last(g, 1.0);
    mon.on_record = [&](const ScalarState& st) { last = st.w; };
    rep = run(std::move(s), ctrl, mon);

    CHECK(rep.outcome == RunOutcome::reached_T_end);
    CHECK(linf_norm(last) == Catch::Approx(kExpOracle).epsilon(1e-5));
    // per-sample: history tracks the uniform exponential within 10 rel_tol
    for (const auto& h : rep.history)
        CHECK(h.linf == Catch::Approx(std::exp(rate * h.t)).epsilon(1e-5));
    // min == max throughout: constants stay constants
    CHECK(rep.min_w_overall >= 1.0 - 1e-12);
}

TEST_CASE("pure power blow-up: detection bracket and extrapolated time") {
    auto g = make_grid(3, 1.0, 128);
    ScalarState s{Profile(g, 1.0), 0.0, ScalarMode::local_power, 2.0, 24.0};
    StepControl ctrl;
    ctrl.T_end = 1.0;
    const BlowupReport rep = run(std::move(s), ctrl);
    CHECK(rep.outcome == RunOutcome::blew_up);
    CHECK(rep.T_detect >= 0.0204);
    CHECK(rep.T_detect <= 0.0209);
    // the Lipschitz cap must strangle dt before the norm threshold is reached
    CHECK(rep.termination_reason == "dt underflow with rising max norm");
    REQUIRE(rep.extrapolated_T.has_value());
    CHECK(*rep.extrapolated_T == Catch::Approx(kOdeBlowup).epsilon(0.02));
}

TEST_CASE("diffusion-only sanity: Neumann heat equation conserves mass") {
    auto g = make_grid(3, 1.0, 256);
    Profile w0(g);
    for (int i = 0; i < g->cells; ++i)
        w0[i] = 2.0 + std::cos(M_PI * g->centers[static_cast<size_t>(i)]);
    const double mass0 = integrate(w0);
    ScalarState s{w0, 0.0, ScalarMode::local_power, 2.0, 0.0};
    StepControl ctrl;
    ctrl.T_end = 0.5;
    Profile last = w0;
    ScalarMonitors mon;
    mon.stride = 1;
    mon.on_record = [&](const ScalarState& st) { last = st.w; };
    const BlowupReport rep = run(std::move(s), ctrl, mon);
    CHECK(rep.outcome == RunOutcome::reached_T_end);
    CHECK(std::abs(integrate(last) - mass0) <= 1e-10 * mass0);
    // relaxation toward the spatial mean
    CHECK(linf_norm(last) - min_value(last) < 0.2 * (linf_norm(w0) - min_value(w0)));
}

TEST_CASE("blow-up run with constructed data: floor, monotonicity, window, bound") {
    auto g = make_grid(3, 1.0, 512);
    const auto c = construct_w0(g, {2.0, 3, 1.0, 8.0});
    const double lambda = c.consts.lambda;
    const double q = default_j_exponent(2.0, 3);
    const double eta = default_j_eta(lambda, c.consts.mu, 2.0, q);
    CHECK(q == Catch::Approx(8.0 / 3.0));

    ScalarMonitors mon;
    mon.stride = 1;
    mon.track_j = true;
    mon.j_eta = eta;
    mon.j_q = q;
    double worst_slope = -1e300;
    mon.on_record = [&](const ScalarState& st) {
        const Profile wr = radial_derivative(st.w);
        for (int i = 0; i < st.w.size(); ++i) {
            const double scale = std::abs(wr[i]) + st.w[i] / st.w.grid->radius;
            worst_slope = std::max(worst_slope, wr[i] / scale);
        }
    };

    ScalarState s{c.w0, 0.0, ScalarMode::nonlocal, 2.0, 600.0};
    StepControl ctrl;
    ctrl.T_end = 1.0;
    const BlowupReport rep = run(std::move(s), ctrl, mon);

    CHECK(rep.outcome == RunOutcome::blew_up);
    CHECK(rep.min_w_overall >= 1.0 - 1e-8);     // floor preservation
    CHECK(worst_slope <= 1e-3);                 // radially nonincreasing at every accepted step
    for (size_t i = 1; i < rep.history.size(); ++i)
        CHECK(rep.history[i].t > rep.history[i - 1].t);  // strictly increasing sample times

    const T1Detection t1 = detect_T1(rep, lambda);
    CHECK_FALSE(t1.t1.has_value());             // k >= 2 lambda holds through T0
    CHECK(t1.T0 == Catch::Approx(std::pow(600.0, -2.0)));

    // J monitor stays nonpositive (at scaled tolerance) up to T0
    for (const auto& h : rep.history)
        if (h.t <= t1.T0) CHECK(h.j_margin <= 1e-3);

    // the ODE-minorant bound with the effective peak w0(0) = 16
    const double bound = ode_minorant_blowup_time(c.peak_value, lambda, 2.0);
    CHECK(bound == Catch::Approx(1.0 / 6144.0).epsilon(1e-12));
    CHECK(rep.T_detect <= 1.1 * bound);
}

TEST_CASE("comparison against the local-power minorant") {
    auto g = make_grid(3, 1.0, 256);
    const auto c = construct_w0(g, {2.0, 3, 1.0, 8.0});
    StepControl ctrl;
    ctrl.T_end = 1.0;
    const ComparisonReport rep = run_comparison(c.w0, 600.0, 2.0, c.consts.lambda, ctrl);
    CHECK(rep.outcome == RunOutcome::blew_up);
    CHECK(rep.min_normalized_gap >= -1e-6);
    CHECK(rep.steps > 100);
}

TEST_CASE("v_form is the e^t transform of the nonlocal problem") {
    auto g = make_grid(3, 1.0, 256);
    const auto c = construct_w0(g, {2.0, 3, 1.0, 4.0});
    StepControl ctrl;
    ctrl.T_end = 0.25;
    ctrl.rel_tol = 1e-6;
    ScalarMonitors mon;
    mon.stride = 1;

    Profile w_final = c.w0, v_final = c.w0;
    mon.on_record = [&](const ScalarState& st) { w_final = st.w; };
    const BlowupReport rw = run({c.w0, 0.0, ScalarMode::nonlocal, 2.0, 1.0}, ctrl, mon);
    mon.on_record = [&](const ScalarState& st) { v_final = st.w; };
    const BlowupReport rv = run({c.w0, 0.0, ScalarMode::v_form, 2.0, 1.0}, ctrl, mon);

    REQUIRE(rw.outcome == RunOutcome::reached_T_end);
    REQUIRE(rv.outcome == RunOutcome::reached_T_end);
    const double scale = linf_norm(w_final);
    double worst = 0.0;
    for (int i = 0; i < g->cells; ++i)
        worst = std::max(worst, std::abs(std::exp(0.25) * v_final[i] - w_final[i]));
    CHECK(worst <= 20.0 * ctrl.rel_tol * scale);
}

TEST_CASE("J profile on explicit states") {
    auto g = make_grid(3, 1.0, 128);
    ScalarState flat{Profile(g, 1.0), 0.0, ScalarMode::nonlocal, 2.0, 1.0};
    const Profile J = j_profile(flat, 0.1, 2.0);
    for (int i = 0; i < g->cells; ++i)
        CHECK(J[i] == Catch::Approx(0.1 * g->centers[static_cast<size_t>(i)]).epsilon(1e-12));
    CHECK(j_margin_inner(flat, 0.1, 2.0) > 0.0);  // constants are not radially decreasing

    // with eta = mu and q = chi + 1 this is exactly the constructed slope bound
    const auto c = construct_w0(make_grid(3, 1.0, 1024), {2.0, 3, 1.0, 8.0});
    ScalarState sw{c.w0, 0.0, ScalarMode::nonlocal, 2.0, 1.0};
    CHECK(j_margin_inner(sw, c.consts.mu, 3.0) <= 1e-3);

    CHECK_THROWS_AS(j_profile(flat, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(j_profile(flat, 0.1, 3.5), std::invalid_argument);
    CHECK_THROWS_AS(j_profile(flat, -0.1, 2.0), std::invalid_argument);
}

TEST_CASE("detect_T1 windows") {
    auto g = make_grid(3, 1.0, 512);
    const auto c = construct_w0(g, {2.0, 3, 1.0, 8.0});
    StepControl ctrl;
    ctrl.T_end = 1e-4;

    SECTION("tiny mass fails the window immediately") {
        // k(0) = m A << 2 lambda
        ScalarState s{c.w0, 0.0, ScalarMode::nonlocal, 2.0, 1.0};
        const BlowupReport rep = run(std::move(s), ctrl);
        const T1Detection t1 = detect_T1(rep, c.consts.lambda);
        REQUIRE(t1.t1.has_value());
        CHECK(*t1.t1 == 0.0);
    }
    SECTION("synthetic history with k forever above the bar") {
        BlowupReport rep;
        rep.mode = ScalarMode::nonlocal;
        rep.chi = 2.0;
        rep.coeff = 10.0;
        rep.T_detect = 1.0;
        for (int i = 0; i <= 10; ++i)
            rep.history.push_back({0.1 * i, 1.0, 0.0, 2.0 * c.consts.lambda + 1.0, 0.0, 1.0});
        const T1Detection t1 = detect_T1(rep, c.consts.lambda);
        CHECK_FALSE(t1.t1.has_value());
        CHECK(t1.T0 == Catch::Approx(0.01));  // m^{-2}
    }
    SECTION("local_power reports are rejected") {
        BlowupReport rep;
        rep.mode = ScalarMode::local_power;
        CHECK_THROWS_AS(detect_T1(rep, 1.0), std::invalid_argument);
    }
}

TEST_CASE("ode minorant closed form") {
    CHECK(ode_minorant_blowup_time(16.0, 12.0, 2.0) == Catch::Approx(1.0 / 6144.0).epsilon(1e-14));
    CHECK(ode_minorant_blowup_time(16.0, 24.0, 2.0) ==
          Catch::Approx(0.5 / 6144.0).epsilon(1e-14));  // doubling lambda halves the bound
    CHECK(ode_minorant_blowup_time(1e9, 12.0, 2.0) < 1e-17);  // vanishes for huge peaks
    CHECK_THROWS_AS(ode_minorant_blowup_time(-1.0, 12.0, 2.0), std::invalid_argument);
}

TEST_CASE("single-step interface and control validation") {
    auto g = make_grid(3, 1.0, 64);
    StepControl ctrl;
    ctrl.T_end = 1.0;
    auto [next, res] = step({Profile(g, 1.0), 0.0, ScalarMode::nonlocal, 2.0, 1.0}, ctrl);
    CHECK_FALSE(res.underflow);
    CHECK(res.accepted_dt > 0.0);
    CHECK(next.t == res.accepted_dt);
    CHECK(linf_norm(next.w) > 1.0);

    StepControl bad;
    bad.rel_tol = 1.0;
    CHECK_THROWS_AS(bad.validate(1.0), std::invalid_argument);
    StepControl bad2;
    bad2.dt_init = 1e-8;
    bad2.dt_min = 1e-6;
    CHECK_THROWS_AS(bad2.validate(1.0), std::invalid_argument);
    StepControl bad3;
    bad3.blowup_threshold = 0.5;
    CHECK_THROWS_AS(bad3.validate(1.0), std::invalid_argument);

    Profile neg(g, 1.0);
    neg[0] = -1.0;
    CHECK_THROWS_AS(run({neg, 0.0, ScalarMode::nonlocal, 2.0, 1.0}, ctrl), std::invalid_argument);
}

TEST_CASE("blow-up bound holds across sensitivities") {
    // chi = 1 (alpha = 2) and chi = 4 (alpha = 1/2) exercise both branches of
    // the cap radius and the fractional reaction exponents end to end
    struct Case {
        double chi;
        double peak;  // M
        int cells;
        double mass;
    };
    for (const Case& tc : {Case{1.0, 8.0, 512, 1500.0}, Case{4.0, 16.0, 2048, 300.0}}) {
        INFO("chi = " << tc.chi);
        auto g = make_grid(3, 1.0, tc.cells);
        const auto c = construct_w0(g, {tc.chi, 3, 1.0, tc.peak});
        // the mass must clear the gain bar 2 lambda at t = 0
        REQUIRE(tc.mass * c.consts.inv_chi_integral > 2.0 * c.consts.lambda);

        ScalarState s{c.w0, 0.0, ScalarMode::nonlocal, tc.chi, tc.mass};
        StepControl ctrl;
        ctrl.T_end = 1.0;
        const BlowupReport rep = run(std::move(s), ctrl);
        CHECK(rep.outcome == RunOutcome::blew_up);
        CHECK(rep.min_w_overall >= 1.0 - 1e-8);
        const double bound = ode_minorant_blowup_time(c.peak_value, c.consts.lambda, tc.chi);
        CHECK(rep.T_detect <= 1.1 * bound);
        // pre-terminal gain window
        const double window_end = std::min(std::pow(tc.mass, -2.0), 0.9 * rep.T_detect);
        for (const auto& h : rep.history)
            if (h.t <= window_end) CHECK(h.k >= 2.0 * c.consts.lambda);
    }
}
