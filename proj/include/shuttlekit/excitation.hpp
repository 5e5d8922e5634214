#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/noise.hpp"
#include "shuttlekit/numerics.hpp"
#include "shuttlekit/trajectory.hpp"

namespace shuttlekit {

enum class Method { ClosedForm, Quadrature, Approximation };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::ClosedForm: return "closed_form";
        case Method::Quadrature: return "quadrature";
        case Method::Approximation: return "approximation";
    }
    return "?";
}

struct ExcitationTerms {
    double static_term = 0.0;   // J per unit intensity, trajectory independent
    double dynamic_term = 0.0;  // J per unit intensity, trajectory dependent
};

/// Final-energy prediction: E = E_n + intensity * G with G = static + dynamic.
struct ExcitationReport {
    double mode_energy;        // E_n = (n+1/2) hbar omega (J)
    double sensitivity;        // G (J per unit intensity)
    double excitation_energy;  // E_e = intensity * G (J)
    ExcitationTerms terms;
    double intensity;
    Method method;
    bool warning_perturbative; // E_e above 0.1 hbar omega: first-order result suspect

    double total_energy() const { return mode_energy + excitation_energy; }
};

namespace detail {

inline ExcitationReport make_report(const PhysicalParams& p, double g_static, double g_dynamic,
                                    double intensity, Method method) {
    const double hw = constants::hbar * p.omega;
    const double g = g_static + g_dynamic;
    const double e_e = intensity * g;
    return {(p.mode_n + 0.5) * hw, g,      e_e, {g_static, g_dynamic},
            intensity,             method, e_e > 0.1 * hw};
}

/// Same spectrum shape, intensity rescaled to exactly 1; keeps the generic
/// route well defined for degenerate zero-intensity models.
inline NoiseModel unit_intensity_copy(const NoiseModel& model) {
    if (const auto* ou = std::get_if<OrnsteinUhlenbeckNoise>(&model))
        return OrnsteinUhlenbeckNoise{1.0, ou->correlation_time};
    if (const auto* f = std::get_if<FlickerNoise>(&model)) {
        const double c = std::log(f->tau_long / f->tau_short) /
                         (2.0 * (f->tau_long - f->tau_short));
        return FlickerNoise{c, f->tau_short, f->tau_long};
    }
    return WhiteNoise{1.0};
}

/// Quadrature intervals aligned to trajectory segments, with a geometric
/// refinement of the kernel boundary layer [0, ~40*scale_hi]; colored kernels
/// relax on their correlation time, far below the panel width otherwise.
inline std::vector<double> layered_breakpoints(const Trajectory& traj, double scale_lo,
                                               double scale_hi) {
    std::vector<double> breaks = traj.segment_breakpoints();
    const double t_end = traj.params().duration;
    if (scale_lo > 0.0 && std::isfinite(scale_lo)) {
        const double layer_end = std::min(40.0 * scale_hi, t_end);
        for (double t = 8.0 * scale_lo; t < layer_end; t *= 2.0) breaks.push_back(t);
        breaks.push_back(layer_end);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [t_end](double a, double b) { return b - a < 1e-15 * t_end; }),
                 breaks.end());
    return breaks;
}

template <class F>
double layered_integral(F&& f, const Trajectory& traj, double scale_lo, double scale_hi) {
    const auto breaks = layered_breakpoints(traj, scale_lo, scale_hi);
    return integrate_segmented(f, breaks, traj.params().period(), 16);
}

inline void check_boundary_velocities(const Trajectory& traj) {
    const PhysicalParams& p = traj.params();
    const double tol = 1e-9 * p.distance / p.duration;
    if (std::abs(traj.eval(0.0).velocity) > tol ||
        std::abs(traj.eval(p.duration).velocity) > tol)
        throw DomainError("excitation: closed forms need zero boundary velocities");
}

inline std::pair<double, double> kernel_layer_scales(const NoiseModel& model) {
    if (const auto* ou = std::get_if<OrnsteinUhlenbeckNoise>(&model))
        return {ou->correlation_time, ou->correlation_time};
    if (const auto* f = std::get_if<FlickerNoise>(&model))
        return {f->tau_short, f->tau_long};
    return {0.0, 0.0};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Spring-constant noise
// ---------------------------------------------------------------------------

/// Generic quadrature route:
/// E = E_n + hw^3 (n+1/2) Int g0 + m Int [g0 qddot^2 + w^2 g1 qdot qddot].
inline ExcitationReport spring_excitation_generic(const Trajectory& traj,
                                                  const NoiseModel& model) {
    validate(model);
    const PhysicalParams& p = traj.params();
    const NoiseModel unit = detail::unit_intensity_copy(model);
    const NoiseKernels kern = kernels(unit);
    const auto [lo, hi] = detail::kernel_layer_scales(model);

    const double g_static = constants::hbar * std::pow(p.omega, 3) * (p.mode_n + 0.5) *
                            detail::layered_integral(kern.g0, traj, lo, hi);
    const double w2 = p.omega * p.omega;
    const double g_dynamic = p.mass * detail::layered_integral(
                                          [&](double t) {
                                              const Motion m = traj.eval(t);
                                              return kern.g0(t) * m.acceleration * m.acceleration +
                                                     w2 * kern.g1(t) * m.velocity * m.acceleration;
                                          },
                                          traj, lo, hi);
    return detail::make_report(p, g_static, g_dynamic, noise_intensity(model),
                               Method::Quadrature);
}

/// White-noise G(T) from the per-protocol closed forms; the robust septic has
/// none and falls back to quadrature of (m/2) Int qddot^2.
inline ExcitationReport white_noise_excitation(const Trajectory& traj, double gamma = 0.0) {
    if (!(gamma >= 0.0)) throw ConfigError("white noise: gamma must be >= 0");
    const PhysicalParams& p = traj.params();
    const double d = p.distance, T = p.duration, w = p.omega, m = p.mass;
    Method method = Method::ClosedForm;
    double g_dynamic = 0.0;
    switch (traj.kind()) {
        case ProtocolKind::Quintic:
            g_dynamic = 60.0 * m * d * d / (7.0 * T * T * T);
            break;
        case ProtocolKind::UnboundedOptimal:
            g_dynamic = 6.0 * m * d * d / (T * T * T);
            break;
        case ProtocolKind::BoundedOptimal: {
            if (traj.used_unbounded_fallback()) {
                g_dynamic = 6.0 * m * d * d / (T * T * T);
            } else {
                const auto sw = detail::bounded_switching(p);
                const double delta = *p.displacement_bound;
                g_dynamic = 0.5 * m * std::pow(w, 4) *
                            (2.0 * delta * delta * sw.t1 + sw.c1 * sw.c1 * std::pow(sw.t2, 3) / 12.0);
            }
            break;
        }
        case ProtocolKind::BangBang:
            g_dynamic = m * std::pow(w, 4) * d * d * T / 16.0;
            break;
        case ProtocolKind::RobustSeptic:
            g_dynamic = 0.5 * m *
                        integrate_segmented(
                            [&](double t) {
                                const double a = traj.eval(t).acceleration;
                                return a * a;
                            },
                            traj.segment_breakpoints(), p.period(), 16);
            method = Method::Quadrature;
            break;
    }
    const double g_static = (2.0 * p.mode_n + 1.0) * constants::hbar * std::pow(w, 3) * T / 4.0;
    return detail::make_report(p, g_static, g_dynamic, gamma, method);
}

/// Duration minimizing the white-noise G for protocols with an inverse-cubic
/// dynamic term (quintic and unbounded optimal).
inline double white_noise_optimal_duration(ProtocolKind kind, const PhysicalParams& p) {
    const double num = (kind == ProtocolKind::Quintic) ? 720.0 / 7.0 : 72.0;
    if (kind != ProtocolKind::Quintic && kind != ProtocolKind::UnboundedOptimal)
        throw DomainError("optimal duration: closed form exists for quintic/unbounded only");
    return std::pow(num * p.mass * p.distance * p.distance /
                        ((2.0 * p.mode_n + 1.0) * constants::hbar * std::pow(p.omega, 3)),
                    0.25);
}

/// Integrated-by-parts OU form (requires zero boundary velocities):
/// G = (hw^3/4)(2n+1)(T - tau + tau e^{-T/tau})
///   + (m/2) Int [(1-e^{-t/tau}) qddot^2 - (w^2 t / 2tau) e^{-t/tau} qdot^2].
inline ExcitationReport ou_excitation_closed(const Trajectory& traj, double intensity,
                                             double correlation_time) {
    if (!(correlation_time > 0.0)) throw ConfigError("OU: tau must be positive");
    if (!(intensity >= 0.0)) throw ConfigError("OU: D must be >= 0");
    detail::check_boundary_velocities(traj);
    const PhysicalParams& p = traj.params();
    const double tau = correlation_time, T = p.duration, w = p.omega;

    const double g_static = 0.25 * constants::hbar * std::pow(w, 3) * (2.0 * p.mode_n + 1.0) *
                            (T - tau + tau * std::exp(-T / tau));
    const double g_dynamic =
        0.5 * p.mass *
        detail::layered_integral(
            [&](double t) {
                const Motion m = traj.eval(t);
                const double e = std::exp(-t / tau);
                return (1.0 - e) * m.acceleration * m.acceleration -
                       (w * w * t / (2.0 * tau)) * e * m.velocity * m.velocity;
            },
            traj, tau, tau);
    return detail::make_report(p, g_static, g_dynamic, intensity, Method::ClosedForm);
}

/// Exact flicker G(T); the Ei brackets enter through the closed kernel and
/// correlation forms. Intensity is 2C(tau2-tau1)/ln(tau2/tau1).
inline ExcitationReport flicker_excitation_closed(const Trajectory& traj, double variance,
                                                  double tau1, double tau2) {
    if (!(tau1 > 0.0 && tau2 > tau1)) throw ConfigError("flicker: requires 0 < tau1 < tau2");
    if (!(variance >= 0.0)) throw ConfigError("flicker: C must be >= 0");
    detail::check_boundary_velocities(traj);
    const PhysicalParams& p = traj.params();
    const FlickerNoise unit_c{1.0, tau1, tau2};  // brackets are linear in C
    const double unit_intensity = 2.0 * (tau2 - tau1) / std::log(tau2 / tau1);
    const double w2 = p.omega * p.omega;

    const double g_static = constants::hbar * std::pow(p.omega, 3) * (p.mode_n + 0.5) *
                            integral_g0(NoiseModel{unit_c}, p.duration) / unit_intensity;
    const double g_dynamic =
        (p.mass / unit_intensity) *
        detail::layered_integral(
            [&](double t) {
                const Motion m = traj.eval(t);
                return detail::flicker_g0(unit_c, t) * m.acceleration * m.acceleration -
                       0.5 * w2 * t * detail::flicker_alpha(unit_c, t) * m.velocity * m.velocity;
            },
            traj, tau1, tau2);
    const double intensity = variance * unit_intensity;  // 2C(tau2-tau1)/ln r
    return detail::make_report(p, g_static, g_dynamic, intensity, Method::ClosedForm);
}

/// First order in tau: G ~ (hw^3/2)(n+1/2)(T - tau) + (m/2)[Int qddot^2 - tau qddot(0)^2].
inline ExcitationReport ou_excitation_small_tau(const Trajectory& traj, double intensity,
                                                double correlation_time) {
    if (!(correlation_time > 0.0)) throw ConfigError("OU: tau must be positive");
    const PhysicalParams& p = traj.params();
    const double tau = correlation_time;
    const double acc0 = traj.eval(0.0).acceleration;
    const ExcitationReport white = white_noise_excitation(traj);
    const double g_static = 0.5 * constants::hbar * std::pow(p.omega, 3) * (p.mode_n + 0.5) *
                            (p.duration - tau);
    const double g_dynamic = white.terms.dynamic_term - 0.5 * p.mass * tau * acc0 * acc0;
    return detail::make_report(p, g_static, g_dynamic, intensity, Method::Approximation);
}

/// Same expansion for flicker with the mean correlation time (tau1+tau2)/2.
inline ExcitationReport flicker_excitation_small_tau(const Trajectory& traj, double variance,
                                                     double tau1, double tau2) {
    if (!(tau1 > 0.0 && tau2 > tau1)) throw ConfigError("flicker: requires 0 < tau1 < tau2");
    const PhysicalParams& p = traj.params();
    const double tau_bar = 0.5 * (tau1 + tau2);
    const double acc0 = traj.eval(0.0).acceleration;
    const ExcitationReport white = white_noise_excitation(traj);
    const double g_static = 0.5 * constants::hbar * std::pow(p.omega, 3) * (p.mode_n + 0.5) *
                            (p.duration - tau_bar);
    const double g_dynamic = white.terms.dynamic_term - 0.5 * p.mass * tau_bar * acc0 * acc0;
    const double intensity = 2.0 * variance * (tau2 - tau1) / std::log(tau2 / tau1);
    return detail::make_report(p, g_static, g_dynamic, intensity, Method::Approximation);
}

/// Closed route chosen by model kind.
inline ExcitationReport spring_excitation_closed(const Trajectory& traj, const NoiseModel& model) {
    validate(model);
    if (const auto* w = std::get_if<WhiteNoise>(&model))
        return white_noise_excitation(traj, w->gamma);
    if (const auto* ou = std::get_if<OrnsteinUhlenbeckNoise>(&model))
        return ou_excitation_closed(traj, ou->intensity, ou->correlation_time);
    const auto& f = std::get<FlickerNoise>(model);
    return flicker_excitation_closed(traj, f.variance, f.tau_short, f.tau_long);
}

// ---------------------------------------------------------------------------
// Trap-position noise
// ---------------------------------------------------------------------------

/// Coupling L = K (q - q0): additive force noise on the trap center.
struct PositionNoiseParams {
    double coupling;  // K (N)
    NoiseModel model;
};

/// E_e = (K^2/m) Int_0^T g0 dt. No trajectory argument exists: the result is
/// structurally independent of the path taken.
inline ExcitationReport position_excitation(const PhysicalParams& params,
                                            const PositionNoiseParams& pos, double t_end) {
    params.validate();
    validate(pos.model);
    if (!(pos.coupling > 0.0)) throw ConfigError("position noise: coupling K must be positive");
    if (!(t_end >= 0.0)) throw DomainError("position noise: requires T >= 0");
    const NoiseModel unit = detail::unit_intensity_copy(pos.model);
    const double g = pos.coupling * pos.coupling / params.mass * integral_g0(unit, t_end);
    return detail::make_report(params, g, 0.0, noise_intensity(pos.model), Method::ClosedForm);
}

} // namespace shuttlekit
