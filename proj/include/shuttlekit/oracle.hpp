#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/excitation.hpp"
#include "shuttlekit/noise.hpp"
#include "shuttlekit/numerics.hpp"
#include "shuttlekit/parallel.hpp"
#include "shuttlekit/trajectory.hpp"

namespace shuttlekit {

// ---------------------------------------------------------------------------
// Five-moment state
// ---------------------------------------------------------------------------

/// Expectation values closed under the noisy quadratic dynamics: means plus
/// central covariances. The transport distance exceeds the ground-state width
/// by ~4 orders of magnitude, so raw <q^2> would bury Var(q) under the
/// classical q_c^2 in double precision; the raw moments are exposed as
/// derived accessors instead.
struct MomentState {
    double mean_q;  // <q> (m)
    double mean_p;  // <p> (kg m/s)
    double var_q;   // Var(q) (m^2)
    double var_p;   // Var(p) ((kg m/s)^2)
    double cov_qp;  // <qp+pq>/2 - <q><p> (J s)

    /// Trap eigenstate n centered at q = 0.
    static MomentState ground(const PhysicalParams& p) {
        const double f = 2.0 * p.mode_n + 1.0;
        return {0.0, 0.0, f * constants::hbar / (2.0 * p.mass * p.omega),
                f * constants::hbar * p.mass * p.omega / 2.0, 0.0};
    }

    double m2_q() const { return var_q + mean_q * mean_q; }    // <q^2>
    double m2_p() const { return var_p + mean_p * mean_p; }    // <p^2>
    double cross() const { return 2.0 * (cov_qp + mean_q * mean_p); }  // <qp+pq>

    /// Var(q) Var(p) - Cov^2; bounded below by hbar^2/4 for physical states.
    double uncertainty_det() const {
        return var_q * var_p - cov_qp * cov_qp;
    }
};

/// <H0> against a trap at `trap_pos`:
/// <p^2>/2m + (m w^2/2)(<q^2> - 2 q0 <q> + q0^2), evaluated in central form.
inline double energy_from_moments(const MomentState& ms, const PhysicalParams& p,
                                  double trap_pos) {
    const double dq = ms.mean_q - trap_pos;
    return (ms.var_p + ms.mean_p * ms.mean_p) / (2.0 * p.mass) +
           0.5 * p.mass * p.omega * p.omega * (ms.var_q + dq * dq);
}

struct MomentRunOptions {
    double step_size = 0.0;  // 0: min(T0/1000, tau_min/10)
};

using MomentObserver = std::function<void(double t, const MomentState&)>;

namespace detail {

inline double default_moment_step(const PhysicalParams& p, const NoiseModel& model) {
    const double tau_min = shortest_correlation_time(model);
    double h = p.period() / 1000.0;
    if (std::isfinite(tau_min)) h = std::min(h, tau_min / 10.0);
    return h;
}

// The stepper's final substep lands on t_end up to rounding, but the trap
// path during transport is the open-interval value there (the bang-bang trap
// has already jumped to d at t = T). Propagators sample just below t_end.
inline double open_interval_time(double t, double t_end) {
    return std::min(t, std::nextafter(t_end, 0.0));
}

using Moment5 = std::array<double, 5>;  // mean_q, mean_p, var_q, var_p, cov_qp

inline MomentState to_state(const Moment5& y) { return {y[0], y[1], y[2], y[3], y[4]}; }

} // namespace detail

// ---------------------------------------------------------------------------
// Spring-constant noise moments
// ---------------------------------------------------------------------------

/// Moment flow for spring noise along an arbitrary trap path. The printed
/// matrix form is dimensionally inconsistent; these coefficients follow from
/// the master equation via <[[X,A],B]> with A = (q-q0)^2, B = pq0 - (pq+qp)/2.
/// In raw moments:
///   d<q>  = <p>/m
///   d<p>  = -m w^2 (<q>-q0) + m w^4 g1 (<q>-q0)
///   d<q2> = <qp+pq>/m
///   d<p2> = -m w^2 (<qp+pq> - 2 q0 <p>) + 2 m^2 w^4 g0 (<q2> - 2 q0 <q> + q0^2)
///   d<qp+pq> = 2<p2>/m - 2 m w^2 (<q2> - q0 <q>) + 2 m w^4 g1 (2<q2> - 3 q0 <q> + q0^2)
/// Integrated here in the equivalent central form so the hbar-scale
/// covariances never compete with the d^2-scale classical motion.
template <class TrapFn>
MomentState evolve_moments_spring_along(TrapFn&& trap, const PhysicalParams& params,
                                        const NoiseModel& model, double t_end,
                                        const MomentRunOptions& opts = {},
                                        const MomentObserver& observer = {}) {
    params.validate();
    validate(model);
    const NoiseKernels kern = kernels(model);
    const double m = params.mass;
    const double w2 = params.omega * params.omega;
    const double w4 = w2 * w2;

    auto field = [&](double t, const detail::Moment5& y) -> detail::Moment5 {
        const double q0 = trap(detail::open_interval_time(t, t_end));
        const double g0 = kern.g0(t);
        const double g1 = kern.g1(t);
        const double dq = y[0] - q0;
        return {y[1] / m,
                -m * w2 * dq + m * w4 * g1 * dq,
                2.0 * y[4] / m,
                -2.0 * m * w2 * y[4] + 2.0 * m * m * w4 * g0 * (y[2] + dq * dq) -
                    2.0 * m * w4 * g1 * y[1] * dq,
                y[3] / m - m * w2 * y[2] + m * w4 * g1 * (2.0 * y[2] + dq * dq)};
    };

    const MomentState init = MomentState::ground(params);
    const detail::Moment5 y0{init.mean_q, init.mean_p, init.var_q, init.var_p, init.cov_qp};
    const OdeStepperConfig cfg{opts.step_size > 0.0 ? opts.step_size
                                                    : detail::default_moment_step(params, model)};
    auto watch = [&observer](double t, const detail::Moment5& y) {
        if (observer) observer(t, detail::to_state(y));
    };
    return detail::to_state(evolve_ode<5>(field, y0, 0.0, t_end, cfg, watch));
}

inline MomentState evolve_moments_spring(const Trajectory& traj, const NoiseModel& model,
                                         const MomentRunOptions& opts = {},
                                         const MomentObserver& observer = {}) {
    return evolve_moments_spring_along([&traj](double t) { return traj.trap_position(t); },
                                       traj.params(), model, traj.params().duration, opts,
                                       observer);
}

// ---------------------------------------------------------------------------
// Position noise moments
// ---------------------------------------------------------------------------

/// Position-noise moment flow (consistent as printed): the homogeneous part is
/// Hamiltonian; in raw moments the noise adds 2 K^2 g0 to d<p2> and
/// 2 K^2 g1/m to d<qp+pq>, and the means never see it. Central form again.
template <class TrapFn>
MomentState evolve_moments_position_along(TrapFn&& trap, const PhysicalParams& params,
                                          const PositionNoiseParams& pos, double t_end,
                                          const MomentRunOptions& opts = {},
                                          const MomentObserver& observer = {}) {
    params.validate();
    validate(pos.model);
    const NoiseKernels kern = kernels(pos.model);
    const double m = params.mass;
    const double w2 = params.omega * params.omega;
    const double k2 = pos.coupling * pos.coupling;

    auto field = [&](double t, const detail::Moment5& y) -> detail::Moment5 {
        const double q0 = trap(detail::open_interval_time(t, t_end));
        return {y[1] / m,
                -m * w2 * (y[0] - q0),
                2.0 * y[4] / m,
                -2.0 * m * w2 * y[4] + 2.0 * k2 * kern.g0(t),
                y[3] / m - m * w2 * y[2] + k2 * kern.g1(t) / m};
    };

    const MomentState init = MomentState::ground(params);
    const detail::Moment5 y0{init.mean_q, init.mean_p, init.var_q, init.var_p, init.cov_qp};
    const OdeStepperConfig cfg{opts.step_size > 0.0
                                   ? opts.step_size
                                   : detail::default_moment_step(params, pos.model)};
    auto watch = [&observer](double t, const detail::Moment5& y) {
        if (observer) observer(t, detail::to_state(y));
    };
    return detail::to_state(evolve_ode<5>(field, y0, 0.0, t_end, cfg, watch));
}

inline MomentState evolve_moments_position(const Trajectory& traj,
                                           const PositionNoiseParams& pos,
                                           const MomentRunOptions& opts = {},
                                           const MomentObserver& observer = {}) {
    return evolve_moments_position_along([&traj](double t) { return traj.trap_position(t); },
                                         traj.params(), pos, traj.params().duration, opts,
                                         observer);
}

// ---------------------------------------------------------------------------
// Monte-Carlo Gaussian ensemble
// ---------------------------------------------------------------------------

enum class NoiseCoupling { Spring, Position };

struct McOptions {
    int members = 10000;
    std::uint64_t seed = 1;
    double step_size = 0.0;       // 0: min(T0/1000, tau_min/10)
    double position_coupling = 0; // K (N), position coupling only
    int threads = 0;              // 0: auto
};

struct GaussianEnsembleResult {
    double mean_energy;          // J
    double std_error;            // J
    int member_count;            // members contributing to the mean
    int flagged;                 // divergent members excluded
    std::uint64_t seed;
    double min_uncertainty_det;  // min over members and times
};

namespace detail {

/// Gaussian state per realization: means + central covariances. Exact for a
/// quadratic Hamiltonian up to time discretization.
struct GaussianState {
    double q, p, vqq, vpp, vqp;
};

} // namespace detail

/// For each member, samples a noise path and propagates the exact Gaussian
/// moment equations of the per-realization Hamiltonian; returns the ensemble
/// mean of the final <H0(T)> and its standard error. Noise enters each RK4
/// step at its midpoint value (Stratonovich-consistent); the reduction is
/// pairwise in fixed member order, so results are bit-reproducible for a given
/// seed regardless of worker count.
inline GaussianEnsembleResult mc_ensemble_energy(const Trajectory& traj, const NoiseModel& model,
                                                 NoiseCoupling coupling, const McOptions& opts) {
    const PhysicalParams& params = traj.params();
    params.validate();
    validate(model);
    if (opts.members < 100) throw ConfigError("mc: needs at least 100 members");
    if (coupling == NoiseCoupling::Position && !(opts.position_coupling > 0.0))
        throw ConfigError("mc: position coupling K must be positive");

    const double t_end = params.duration;
    double dt = opts.step_size > 0.0 ? opts.step_size : detail::default_moment_step(params, model);
    if (dt > params.period() / 200.0 * (1.0 + 1e-12))
        throw ConfigError("mc: step must resolve the trap period (dt <= T0/200)");
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    dt = t_end / static_cast<double>(steps);

    const double m = params.mass;
    const double w2 = params.omega * params.omega;
    const double d = params.distance;
    const bool white = std::holds_alternative<WhiteNoise>(model);
    const bool spring = coupling == NoiseCoupling::Spring;
    const double k_pos = opts.position_coupling;

    const MomentState g = MomentState::ground(params);
    const detail::GaussianState init{0.0, 0.0, g.var_q, g.var_p, 0.0};

    const auto n_members = static_cast<std::size_t>(opts.members);
    std::vector<double> energy(n_members, 0.0);
    std::vector<char> bad(n_members, 0);
    std::vector<double> member_min_det(n_members, std::numeric_limits<double>::infinity());

    parallel_for(
        n_members,
        [&](std::size_t k) {
            const NoisePath path = sample_path(model, t_end, dt, mix_seed(opts.seed, k));
            detail::GaussianState s = init;
            double min_det = s.vqq * s.vpp - s.vqp * s.vqp;

            auto deriv = [&](double t, double x, const detail::GaussianState& y) {
                detail::GaussianState dy{};
                const double q0 = traj.trap_position(detail::open_interval_time(t, t_end));
                const double keff = spring ? w2 * (1.0 + x) : w2;
                dy.q = y.p / m;
                dy.p = -m * keff * (y.q - q0) - (spring ? 0.0 : k_pos * x);
                dy.vqq = 2.0 * y.vqp / m;
                dy.vpp = -2.0 * m * keff * y.vqp;
                dy.vqp = y.vpp / m - m * keff * y.vqq;
                return dy;
            };
            auto add = [](const detail::GaussianState& y, double h,
                          const detail::GaussianState& dy) {
                return detail::GaussianState{y.q + h * dy.q, y.p + h * dy.p, y.vqq + h * dy.vqq,
                                             y.vpp + h * dy.vpp, y.vqp + h * dy.vqp};
            };

            for (std::size_t i = 0; i < steps; ++i) {
                const double t = dt * static_cast<double>(i);
                const double x = path.step_value(i, white);
                const auto k1 = deriv(t, x, s);
                const auto k2 = deriv(t + 0.5 * dt, x, add(s, 0.5 * dt, k1));
                const auto k3 = deriv(t + 0.5 * dt, x, add(s, 0.5 * dt, k2));
                const auto k4 = deriv(t + dt, x, add(s, dt, k3));
                s.q += dt / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
                s.p += dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
                s.vqq += dt / 6.0 * (k1.vqq + 2.0 * k2.vqq + 2.0 * k3.vqq + k4.vqq);
                s.vpp += dt / 6.0 * (k1.vpp + 2.0 * k2.vpp + 2.0 * k3.vpp + k4.vpp);
                s.vqp += dt / 6.0 * (k1.vqp + 2.0 * k2.vqp + 2.0 * k3.vqp + k4.vqp);
                const double det = s.vqq * s.vpp - s.vqp * s.vqp;
                if (det < min_det) min_det = det;
                if (!std::isfinite(s.q + s.p + s.vqq + s.vpp + s.vqp)) {
                    bad[k] = 1;
                    break;
                }
            }
            member_min_det[k] = min_det;
            if (!bad[k])
                energy[k] = (s.p * s.p + s.vpp) / (2.0 * m) +
                            0.5 * m * w2 * ((s.q - d) * (s.q - d) + s.vqq);
        },
        opts.threads);

    std::vector<double> good;
    good.reserve(n_members);
    int flagged = 0;
    double min_det = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_members; ++k) {
        if (bad[k]) {
            ++flagged;
            continue;
        }
        good.push_back(energy[k]);
        min_det = std::min(min_det, member_min_det[k]);
    }
    if (flagged > opts.members / 100)
        throw DivergenceError("mc: more than 1% of members diverged (" +
                                  std::to_string(flagged) + ")",
                              t_end);

    const auto n = static_cast<double>(good.size());
    bool degenerate = true;
    for (double e : good) degenerate = degenerate && (e == good.front());
    if (degenerate)  // zero-intensity ensembles are exactly reproducible
        return {good.front(), 0.0, static_cast<int>(good.size()), flagged, opts.seed, min_det};
    const double mean = pairwise_sum(good) / n;
    double ss = 0.0;
    for (double e : good) ss += (e - mean) * (e - mean);
    const double std_error = n > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    return {mean, std_error, static_cast<int>(good.size()), flagged, opts.seed, min_det};
}

} // namespace shuttlekit
