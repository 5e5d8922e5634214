#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/numerics.hpp"
#include "shuttlekit/trajectory.hpp"

namespace shuttlekit {

/// Constant relative spring-constant offset: actual stiffness w^2 (1+lambda).
struct SystematicError {
    double lambda;  // > -1

    void validate() const {
        if (!(lambda > -1.0)) throw ConfigError("systematic error: lambda must exceed -1");
    }

    double actual_omega(double nominal_omega) const {
        return nominal_omega * std::sqrt(1.0 + lambda);
    }
};

namespace detail {

/// Int_a^b qddot_c(t) {cos, sin}(w t) dt with oscillation-resolving panels.
inline std::pair<double, double> accel_fourier(const Trajectory& traj, double omega_eval,
                                               double t_hi) {
    const double period = omega_eval > 0.0 ? 2.0 * constants::pi / omega_eval
                                           : std::numeric_limits<double>::infinity();
    double ic = 0.0, is = 0.0;
    const auto breaks = traj.segment_breakpoints();
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i];
        const double b = std::min(breaks[i + 1], t_hi);
        if (b <= a) break;
        const QuadratureRule rule = QuadratureRule::resolving(a, b, period, 16);
        ic += integrate(
            [&](double t) { return traj.eval(t).acceleration * std::cos(omega_eval * t); }, a, b,
            rule);
        is += integrate(
            [&](double t) { return traj.eval(t).acceleration * std::sin(omega_eval * t); }, a, b,
            rule);
        if (breaks[i + 1] >= t_hi) break;
    }
    return {ic, is};
}

} // namespace detail

/// The two acceleration Fourier quadratures at an arbitrary probe frequency;
/// both vanish at the nominal omega for the robust septic by construction.
inline std::pair<double, double> fourier_conditions(const Trajectory& traj, double omega_eval) {
    if (!(omega_eval >= 0.0)) throw DomainError("fourier_conditions: requires omega >= 0");
    return detail::accel_fourier(traj, omega_eval, traj.params().duration);
}

/// Exact excitation above (n+1/2) hbar w1 caused by the spring offset:
/// E_e = (m lambda^2 / 2) [ (Int qddot cos w1 t)^2 + (Int qddot sin w1 t)^2 ]
/// evaluated at the exact w1 = w sqrt(1+lambda).
inline double systematic_excitation(const Trajectory& traj, const SystematicError& err) {
    err.validate();
    if (err.lambda == 0.0) return 0.0;
    const double w1 = err.actual_omega(traj.params().omega);
    const auto [ic, is] = fourier_conditions(traj, w1);
    return 0.5 * traj.params().mass * err.lambda * err.lambda * (ic * ic + is * is);
}

/// Classical correction f(t) = Q_c1 - q_c of the center-of-mass path under the
/// offset stiffness; f(0) = fdot(0) = 0 and the final oscillation energy of f
/// reproduces the quadrature-sum excitation identically.
class MismatchPath {
public:
    MismatchPath(const Trajectory& traj, const SystematicError& err)
        : traj_(&traj), lambda_(err.lambda),
          omega1_(err.actual_omega(traj.params().omega)) {
        err.validate();
    }

    double value(double t) const {
        if (lambda_ == 0.0) return 0.0;
        const auto [ic, is] = detail::accel_fourier(*traj_, omega1_, t);
        return lambda_ / omega1_ *
               (std::sin(omega1_ * t) * ic - std::cos(omega1_ * t) * is);
    }

    double derivative(double t) const {
        if (lambda_ == 0.0) return 0.0;
        const auto [ic, is] = detail::accel_fourier(*traj_, omega1_, t);
        return lambda_ * (std::cos(omega1_ * t) * ic + std::sin(omega1_ * t) * is);
    }

    /// (m/2)(fdot(T)^2 + w1^2 f(T)^2)
    double final_energy() const {
        const double t_end = traj_->params().duration;
        const double f = value(t_end);
        const double fd = derivative(t_end);
        return 0.5 * traj_->params().mass * (fd * fd + omega1_ * omega1_ * f * f);
    }

private:
    const Trajectory* traj_;
    double lambda_;
    double omega1_;
};

/// Clock-scaling error: the implemented trap path is q0(eps t).
struct TimeScaleError {
    double epsilon;  // > 0

    void validate() const {
        if (!(epsilon > 0.0)) throw ConfigError("time-scale error: epsilon must be positive");
    }
};

/// Reduction of a time-scaling error to a systematic spring error in the
/// scaled frame tau = eps t: m' = eps m, w' = w/eps, lambda_eff = 1/eps^2 - 1.
/// The scaled-frame Hamiltonian is H' = H / eps, so scaled-frame energies map
/// back to the lab by multiplying with eps.
struct TimeScaleReduction {
    PhysicalParams scaled_params;  // m' = eps m, w' = w/eps; d, T unchanged
    double lambda_effective;       // 1/eps^2 - 1
    double frame_energy_factor;    // 1/eps (H' relative to H)
};

inline TimeScaleReduction timescale_equivalence(const TimeScaleError& err,
                                                const PhysicalParams& params) {
    err.validate();
    params.validate();
    PhysicalParams scaled = params;
    scaled.mass = err.epsilon * params.mass;
    scaled.omega = params.omega / err.epsilon;
    const double lambda_eff = 1.0 / (err.epsilon * err.epsilon) - 1.0;
    return {scaled, lambda_eff, 1.0 / err.epsilon};
}

} // namespace shuttlekit
