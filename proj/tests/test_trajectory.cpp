#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "shuttlekit/constants.hpp"
#include "shuttlekit/trajectory.hpp"
#include "test_support.hpp"

using namespace shuttlekit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using sktest::fig1_params;

namespace {

void check_boundary_conditions(const Trajectory& traj, bool accel_zero_at_ends) {
    const auto& p = traj.params();
    const double T = p.duration, d = p.distance;
    const Motion start = traj.eval(0.0);
    const Motion end = traj.eval(T);
    CHECK_THAT(start.position, WithinAbs(0.0, 1e-12 * d));
    CHECK_THAT(end.position, WithinAbs(d, 1e-12 * d));
    CHECK_THAT(start.velocity, WithinAbs(0.0, 1e-12 * d / T));
    CHECK_THAT(end.velocity, WithinAbs(0.0, 1e-12 * d / T));
    CHECK_THAT(traj.trap_position(0.0) - start.position,
               WithinAbs(start.acceleration / (p.omega * p.omega), 1e-12 * d));
    if (accel_zero_at_ends) {
        CHECK_THAT(start.acceleration, WithinAbs(0.0, 1e-12 * d / (T * T)));
        CHECK_THAT(end.acceleration, WithinAbs(0.0, 1e-12 * d / (T * T)));
    }
}

void check_auxiliary_equation(const Trajectory& traj) {
    const auto& p = traj.params();
    const double w2 = p.omega * p.omega;
    const double tol = 1e-9 * p.distance * w2;
    for (int i = 1; i < 400; ++i) {
        const double t = p.duration * i / 400.0;
        const Motion m = traj.eval(t);
        const double residual = m.acceleration + w2 * (m.position - traj.trap_position(t));
        CHECK(std::abs(residual) <= tol);
    }
}

} // namespace

TEST_CASE("quintic protocol") {
    const auto p = fig1_params(5.0);
    const Trajectory traj = synth_quintic(p);
    check_boundary_conditions(traj, true);
    check_auxiliary_equation(traj);
    CHECK_THAT(traj.eval(0.5 * p.duration).position, WithinRel(0.5 * p.distance, 1e-12));

    // trap displacement q0 - q_c = (d/T^2)(60 s - 180 s^2 + 120 s^3)/w^2
    const double s = 0.3;
    const double t = s * p.duration;
    const double expected = p.distance / (p.duration * p.duration) *
                            (60.0 * s - 180.0 * s * s + 120.0 * s * s * s) /
                            (p.omega * p.omega);
    CHECK_THAT(traj.trap_position(t) - traj.eval(t).position, WithinRel(expected, 1e-12));
}

TEST_CASE("unbounded optimal protocol") {
    const auto p = fig1_params(0.5);
    const Trajectory traj = synth_unbounded_optimal(p);
    check_boundary_conditions(traj, false);
    check_auxiliary_equation(traj);

    const double T = p.duration, d = p.distance;
    CHECK_THAT(traj.eval(0.0).acceleration, WithinRel(6.0 * d / (T * T), 1e-12));
    CHECK_THAT(traj.trap_position(0.0), WithinRel(6.0 * d / (p.omega * p.omega * T * T), 1e-12));
    CHECK_THAT(traj.eval(0.5 * T).position, WithinRel(0.5 * d, 1e-12));
    CHECK_THAT(traj.eval(0.5 * T).velocity, WithinRel(1.5 * d / T, 1e-12));
}

TEST_CASE("bounded optimal inside the window") {
    const auto p = fig1_params(0.5, 0.5);  // window [0.450, 0.551] T0
    const Trajectory traj = synth_bounded_optimal(p);
    CHECK_FALSE(traj.used_unbounded_fallback());
    check_boundary_conditions(traj, false);
    check_auxiliary_equation(traj);

    const double delta = *p.displacement_bound;
    const double t1 = traj.segment_breakpoints()[1];
    CHECK(t1 > 0.0);

    // first arm accelerates at +w^2 delta, last at -w^2 delta
    CHECK_THAT(traj.eval(0.5 * t1).acceleration, WithinRel(p.omega * p.omega * delta, 1e-12));
    CHECK_THAT(traj.eval(p.duration - 0.5 * t1).acceleration,
               WithinRel(-p.omega * p.omega * delta, 1e-12));

    // continuity of q and qdot across switching times (probe values Taylor-
    // extrapolated back onto the switch so the probe offset cancels)
    const double h = 1e-9 * p.duration;
    for (double ts : {t1, p.duration - t1}) {
        const Motion left = traj.eval(ts - h);
        const Motion right = traj.eval(ts + h);
        const double q_left = left.position + h * left.velocity + 0.5 * h * h * left.acceleration;
        const double q_right =
            right.position - h * right.velocity + 0.5 * h * h * right.acceleration;
        CHECK_THAT(q_right - q_left, WithinAbs(0.0, 1e-11 * p.distance));
        const double v_left = left.velocity + h * left.acceleration;
        const double v_right = right.velocity - h * right.acceleration;
        CHECK_THAT(v_right - v_left, WithinAbs(0.0, 1e-10 * p.distance / p.duration));
    }

    // |q0 - q_c| <= delta everywhere
    for (int i = 0; i <= 1000; ++i) {
        const double t = p.duration * i / 1000.0;
        CHECK(std::abs(traj.trap_position(t) - traj.eval(t).position) <=
              delta * (1.0 + 1e-12));
    }
}

TEST_CASE("bounded optimal at the window edges") {
    // upper edge: identical to the unbounded solution
    {
        auto p = fig1_params(1.0, 0.5);
        p.duration = std::sqrt(6.0 * p.distance / (p.omega * p.omega * *p.displacement_bound));
        const Trajectory bounded = synth_bounded_optimal(p);
        const Trajectory unbounded = synth_unbounded_optimal(p);
        for (int i = 0; i <= 1000; ++i) {
            const double t = p.duration * i / 1000.0;
            CHECK(std::abs(bounded.eval(t).position - unbounded.eval(t).position) <=
                  1e-9 * p.distance);
        }
    }
    // lower edge: pure bang-off-bang acceleration
    {
        auto p = fig1_params(1.0, 0.5);
        p.duration = std::sqrt(4.0 * p.distance / (p.omega * p.omega * *p.displacement_bound));
        const Trajectory traj = synth_bounded_optimal(p);
        const double w2d = p.omega * p.omega * *p.displacement_bound;
        CHECK_THAT(traj.eval(0.25 * p.duration).acceleration, WithinRel(w2d, 1e-9));
        CHECK_THAT(traj.eval(0.75 * p.duration).acceleration, WithinRel(-w2d, 1e-9));
        check_boundary_conditions(traj, false);
        // rounding can leave a sliver of the middle ramp around T/2; just
        // outside it the acceleration has already switched sign
        CHECK_THAT(traj.eval(0.5 * p.duration * (1.0 + 1e-5)).acceleration,
                   WithinRel(-w2d, 1e-9));
        CHECK_THAT(traj.eval(0.5 * p.duration * (1.0 - 1e-5)).acceleration,
                   WithinRel(w2d, 1e-9));
    }
}

TEST_CASE("bounded optimal outside the window") {
    {
        auto p = fig1_params(0.3, 0.5);  // below the window
        CHECK_THROWS_AS(synth_bounded_optimal(p), InfeasibleError);
    }
    {
        auto p = fig1_params(5.0, 0.5);  // above: falls back to unbounded
        const Trajectory traj = synth_bounded_optimal(p);
        CHECK(traj.used_unbounded_fallback());
        CHECK(traj.kind() == ProtocolKind::BoundedOptimal);
        const Trajectory unbounded = synth_unbounded_optimal(p);
        CHECK_THAT(traj.eval(0.37 * p.duration).position,
                   WithinRel(unbounded.eval(0.37 * p.duration).position, 1e-12));
        // peak displacement 6d/(w^2 T^2) then satisfies the bound
        CHECK(6.0 * p.distance / (p.omega * p.omega * p.duration * p.duration) <=
              *p.displacement_bound);
    }
}

TEST_CASE("bang-bang protocol") {
    const auto p = fig1_params(0.5);
    const Trajectory traj = synth_bangbang(p, 0);
    check_boundary_conditions(traj, false);
    check_auxiliary_equation(traj);
    CHECK_THAT(traj.eval(p.duration).position, WithinRel(p.distance, 1e-12));

    // trap is the step d/2 on (0, T)
    CHECK_THAT(traj.trap_position(0.5 * p.duration), WithinRel(0.5 * p.distance, 1e-15));
    CHECK_THAT(traj.trap_position(1e-12 * p.duration), WithinRel(0.5 * p.distance, 1e-15));
    CHECK_THAT(traj.trap_position(p.duration), WithinRel(p.distance, 1e-15));

    // an even multiple of the semiperiod is invalid and names the nearest valid T
    auto bad = fig1_params(1.0);
    try {
        synth_bangbang(bad, 0);
        FAIL("expected InvalidDurationError");
    } catch (const InvalidDurationError& e) {
        const double t0 = bad.period();
        const bool near_half = std::abs(e.nearest_valid - 0.5 * t0) < 1e-9 * t0;
        const bool near_three_half = std::abs(e.nearest_valid - 1.5 * t0) < 1e-9 * t0;
        CHECK((near_half || near_three_half));
    }

    // longer odd multiples work
    auto p9 = fig1_params(4.5);
    const Trajectory long_traj = synth_bangbang(p9, 4);
    check_boundary_conditions(long_traj, false);
}

TEST_CASE("robust septic protocol") {
    const auto p = fig1_params(6.5);
    const Trajectory traj = synth_robust_septic(p);
    check_boundary_conditions(traj, true);
    check_auxiliary_equation(traj);

    // the construction targets: both acceleration Fourier integrals vanish
    const QuadratureRule rule =
        QuadratureRule::resolving(0.0, p.duration, p.period());
    const double ic = integrate(
        [&](double t) { return traj.eval(t).acceleration * std::cos(p.omega * t); }, 0.0,
        p.duration, rule);
    const double is = integrate(
        [&](double t) { return traj.eval(t).acceleration * std::sin(p.omega * t); }, 0.0,
        p.duration, rule);
    const double tol = 1e-9 * p.distance / p.duration;
    CHECK(std::abs(ic) <= tol);
    CHECK(std::abs(is) <= tol);

    // residual substitution check: all 8 imposed conditions hold
    const Motion end = traj.eval(p.duration);
    CHECK_THAT(end.position, WithinAbs(p.distance, 1e-9 * p.distance));
}

TEST_CASE("eval rejects out-of-domain times") {
    const Trajectory traj = synth_quintic(fig1_params(1.0));
    CHECK_THROWS_AS(traj.eval(-1e-9), DomainError);
    CHECK_THROWS_AS(traj.eval(traj.params().duration * 1.0000001), DomainError);
    CHECK_THROWS_AS(traj.trap_position(-1.0), DomainError);
}

TEST_CASE("parameter validation") {
    auto p = fig1_params(1.0);
    p.mass = -1.0;
    CHECK_THROWS_AS(synth_quintic(p), ConfigError);
    p = fig1_params(1.0);
    p.mode_n = -2;
    CHECK_THROWS_AS(synth_quintic(p), ConfigError);
    p = fig1_params(1.0);  // bounded without delta
    CHECK_THROWS_AS(synth_bounded_optimal(p), ConfigError);
}
