#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/numerics.hpp"

namespace shuttlekit {

/// Global experiment context: ion, trap, and transport parameters (SI units).
struct PhysicalParams {
    double mass;      // kg
    double omega;     // rad/s
    double distance;  // m
    double duration;  // s
    int mode_n = 0;
    std::optional<double> displacement_bound;  // delta (m), bounded-optimal only

    double period() const { return 2.0 * constants::pi / omega; }

    void validate() const {
        if (!(mass > 0.0)) throw ConfigError("params: mass must be positive");
        if (!(omega > 0.0)) throw ConfigError("params: omega must be positive");
        if (!(distance > 0.0)) throw ConfigError("params: distance must be positive");
        if (!(duration > 0.0)) throw ConfigError("params: duration must be positive");
        if (mode_n < 0) throw ConfigError("params: mode index must be non-negative");
        if (displacement_bound && !(*displacement_bound > 0.0))
            throw ConfigError("params: displacement bound must be positive");
    }
};

enum class ProtocolKind { Quintic, UnboundedOptimal, BoundedOptimal, BangBang, RobustSeptic };

inline const char* to_string(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::Quintic: return "quintic";
        case ProtocolKind::UnboundedOptimal: return "unbounded";
        case ProtocolKind::BoundedOptimal: return "bounded";
        case ProtocolKind::BangBang: return "bangbang";
        case ProtocolKind::RobustSeptic: return "septic";
    }
    return "?";
}

/// Polynomial piece q(t) = sum_j c_j u^j with u = (t - t_ref)/t_scale.
/// The scaled abscissa keeps coefficients O(distance) for any duration.
struct PolySegment {
    double t_begin, t_end;
    double t_ref, t_scale;
    std::vector<double> coeffs;  // m
};

/// Trigonometric piece q(t) = offset + cos_amp*cos(w t) + sin_amp*sin(w t).
struct TrigSegment {
    double t_begin, t_end;
    double offset, cos_amp, sin_amp;
    double angular_freq;
};

using Segment = std::variant<PolySegment, TrigSegment>;

struct Motion {
    double position;      // m
    double velocity;      // m/s
    double acceleration;  // m/s^2
};

namespace detail {

inline Motion eval_segment(const PolySegment& s, double t) {
    const double u = (t - s.t_ref) / s.t_scale;
    double p = 0.0, dp = 0.0, ddp = 0.0;
    for (std::size_t j = s.coeffs.size(); j-- > 0;) {
        ddp = ddp * u + 2.0 * dp;
        dp = dp * u + p;
        p = p * u + s.coeffs[j];
    }
    return {p, dp / s.t_scale, ddp / (s.t_scale * s.t_scale)};
}

inline Motion eval_segment(const TrigSegment& s, double t) {
    const double c = std::cos(s.angular_freq * t);
    const double sn = std::sin(s.angular_freq * t);
    const double w = s.angular_freq;
    return {s.offset + s.cos_amp * c + s.sin_amp * sn,
            w * (-s.cos_amp * sn + s.sin_amp * c),
            w * w * (-s.cos_amp * c - s.sin_amp * sn)};
}

} // namespace detail

/// Piecewise-analytic center-of-mass path q_c(t) for one transport protocol.
/// Immutable after synthesis; evaluation is pure. At interior segment
/// boundaries the right limit of the acceleration is returned.
class Trajectory {
public:
    Trajectory(ProtocolKind kind, PhysicalParams params, std::vector<Segment> segments,
               bool unbounded_fallback = false)
        : kind_(kind), params_(params), segments_(std::move(segments)),
          unbounded_fallback_(unbounded_fallback) {}

    ProtocolKind kind() const noexcept { return kind_; }
    const PhysicalParams& params() const noexcept { return params_; }
    std::span<const Segment> segments() const noexcept { return segments_; }

    /// True when a bounded-optimal request above its time window returned the
    /// unbounded solution instead.
    bool used_unbounded_fallback() const noexcept { return unbounded_fallback_; }

    /// q_c and its first two derivatives at t in [0, T]. A relative 1e-12
    /// slack absorbs end-point rounding from steppers and quadrature nodes.
    Motion eval(double t) const {
        const double tc = clamp_domain(t);
        const Segment& s = segment_at(tc);
        return std::visit([tc](const auto& seg) { return detail::eval_segment(seg, tc); }, s);
    }

    /// Trap center q_0(t) = q_c + qddot_c/omega^2; the bang-bang trap is the
    /// step d/2 on (0, T) directly.
    double trap_position(double t) const {
        const double tc = clamp_domain(t);
        if (kind_ == ProtocolKind::BangBang)
            return (tc < params_.duration) ? 0.5 * params_.distance : params_.distance;
        const Motion m = eval(tc);
        return m.position + m.acceleration / (params_.omega * params_.omega);
    }

    /// Segment endpoints including 0 and T; quadrature panels align to these.
    std::vector<double> segment_breakpoints() const {
        std::vector<double> b;
        b.reserve(segments_.size() + 1);
        for (const Segment& s : segments_)
            b.push_back(std::visit([](const auto& seg) { return seg.t_begin; }, s));
        b.push_back(params_.duration);
        return b;
    }

private:
    double clamp_domain(double t) const {
        const double slack = 1e-12 * params_.duration;
        if (!(t >= -slack && t <= params_.duration + slack))
            throw DomainError("trajectory: t outside [0, T]");
        return std::min(std::max(t, 0.0), params_.duration);
    }

    const Segment& segment_at(double t) const {
        for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
            const double end = std::visit([](const auto& seg) { return seg.t_end; }, segments_[i]);
            if (t < end) return segments_[i];
        }
        return segments_.back();
    }

    ProtocolKind kind_;
    PhysicalParams params_;
    std::vector<Segment> segments_;
    bool unbounded_fallback_;
};

// ---------------------------------------------------------------------------
// Protocol synthesis
// ---------------------------------------------------------------------------

/// q_c = d (10 s^3 - 15 s^4 + 6 s^5), s = t/T. Zero velocity and acceleration
/// at both ends, so the trap path carries no boundary jumps.
inline Trajectory synth_quintic(const PhysicalParams& params) {
    params.validate();
    const double d = params.distance, T = params.duration;
    PolySegment seg{0.0, T, 0.0, T, {0.0, 0.0, 0.0, 10.0 * d, -15.0 * d, 6.0 * d}};
    return Trajectory(ProtocolKind::Quintic, params, {Segment{seg}});
}

/// Unbounded-optimal cubic q_c = d (3 s^2 - 2 s^3); the acceleration jumps at
/// t = 0 and t = T, displacing the trap by 6d/(omega^2 T^2) there.
inline Trajectory synth_unbounded_optimal(const PhysicalParams& params) {
    params.validate();
    const double d = params.distance, T = params.duration;
    PolySegment seg{0.0, T, 0.0, T, {0.0, 0.0, 3.0 * d, -2.0 * d}};
    return Trajectory(ProtocolKind::UnboundedOptimal, params, {Segment{seg}});
}

namespace detail {

struct BoundedSwitching {
    double t1, t2, c1, v0, c2;
};

/// Switching times and middle-segment constants for the bounded-optimal
/// protocol. Requires T inside [sqrt(4d/(w^2 delta)), sqrt(6d/(w^2 delta))].
inline BoundedSwitching bounded_switching(const PhysicalParams& params) {
    const double d = params.distance, T = params.duration, w = params.omega;
    const double delta = *params.displacement_bound;
    const double inner = 1.0 - 4.0 * d / (w * w * T * T * delta);
    double t1 = 0.5 * T * (1.0 - std::sqrt(3.0 * std::max(0.0, inner)));
    if (t1 < 0.0) t1 = 0.0;
    const double t2 = T - 2.0 * t1;
    const double c1 = (t2 > 0.0) ? 2.0 * delta / t2 : 0.0;
    const double v0 = 0.25 * w * w * delta * (T + 2.0 * t1);
    const double c2 = 0.5 * (d - v0 * T);
    return {t1, t2, c1, v0, c2};
}

} // namespace detail

/// Bounded-optimal protocol (|q_0 - q_c| <= delta): constant acceleration
/// +w^2 delta, a linear ramp through zero at T/2, then -w^2 delta. Below the
/// time window there is no solution; above it the unbounded solution already
/// satisfies the bound and is returned with the fallback flag set.
inline Trajectory synth_bounded_optimal(const PhysicalParams& params) {
    params.validate();
    if (!params.displacement_bound)
        throw ConfigError("bounded-optimal: displacement bound (delta) not set");
    const double d = params.distance, T = params.duration, w = params.omega;
    const double delta = *params.displacement_bound;
    const double t_lo = std::sqrt(4.0 * d / (w * w * delta));
    const double t_hi = std::sqrt(6.0 * d / (w * w * delta));
    if (T < t_lo * (1.0 - 1e-12))
        throw InfeasibleError("bounded-optimal: T below the feasible window [" +
                              std::to_string(t_lo) + ", " + std::to_string(t_hi) + "] s");
    if (T > t_hi * (1.0 + 1e-12)) {
        Trajectory unb = synth_unbounded_optimal(params);
        return Trajectory(ProtocolKind::BoundedOptimal, params,
                          {unb.segments().begin(), unb.segments().end()}, true);
    }

    const auto sw = detail::bounded_switching(params);
    std::vector<Segment> segs;
    PolySegment first{0.0, sw.t1, 0.0, T, {0.0, 0.0, 0.5 * w * w * delta * T * T}};
    PolySegment last{T - sw.t1, T, T, T, {d, 0.0, -0.5 * w * w * delta * T * T}};
    if (sw.t2 > 1e-14 * T) {
        PolySegment mid{sw.t1, T - sw.t1, 0.5 * T, T,
                        {sw.v0 * 0.5 * T + sw.c2, sw.v0 * T, 0.0,
                         -w * w * sw.c1 * T * T * T / 6.0}};
        segs = {Segment{first}, Segment{mid}, Segment{last}};
    } else {
        first.t_end = 0.5 * T;
        last.t_begin = 0.5 * T;
        segs = {Segment{first}, Segment{last}};
    }
    return Trajectory(ProtocolKind::BoundedOptimal, params, std::move(segs));
}

/// Bang-bang protocol: trap steps to d/2 at t = 0 and to d at t = T, valid
/// only for T = (2k+1) pi/omega. q_c is the half-oscillation
/// (d/2)(1 - cos(omega t)), the limit of the generic solution at valid T.
inline Trajectory synth_bangbang(const PhysicalParams& params, int k) {
    params.validate();
    if (k < 0) throw ConfigError("bang-bang: k must be non-negative");
    const double w = params.omega, T = params.duration, d = params.distance;
    const double t_valid = (2.0 * k + 1.0) * constants::pi / w;
    if (std::abs(T - t_valid) > 1e-9 * t_valid) {
        const double ratio = w * T / constants::pi;
        const long long kk = std::max(0LL, static_cast<long long>(std::llround((ratio - 1.0) / 2.0)));
        const double nearest = (2.0 * kk + 1.0) * constants::pi / w;
        throw InvalidDurationError(
            "bang-bang: T must be an odd multiple of a semiperiod; nearest valid T = " +
                std::to_string(nearest) + " s",
            nearest);
    }
    TrigSegment seg{0.0, T, 0.5 * d, -0.5 * d, 0.0, w};
    return Trajectory(ProtocolKind::BangBang, params, {Segment{seg}});
}

/// Degree-7 polynomial whose acceleration has vanishing cos/sin Fourier
/// components at the nominal omega, nulling first-order sensitivity to a
/// systematic spring-constant error. The 8x8 system is solved in the scaled
/// variable s = t/T to keep it well conditioned.
inline Trajectory synth_robust_septic(const PhysicalParams& params) {
    params.validate();
    const double d = params.distance, T = params.duration;
    const double theta = params.omega * T;

    // moment integrals over one oscillation-resolved panel set
    const QuadratureRule rule =
        QuadratureRule::resolving(0.0, 1.0, 2.0 * constants::pi / theta);
    std::array<double, 6> c_mom{}, s_mom{};
    for (int kpow = 0; kpow <= 5; ++kpow) {
        c_mom[static_cast<std::size_t>(kpow)] = integrate(
            [&](double s) { return std::pow(s, kpow) * std::cos(theta * s); }, 0.0, 1.0, rule);
        s_mom[static_cast<std::size_t>(kpow)] = integrate(
            [&](double s) { return std::pow(s, kpow) * std::sin(theta * s); }, 0.0, 1.0, rule);
    }

    std::vector<double> a(64, 0.0), rhs(8, 0.0);
    auto at = [&a](int r, int c) -> double& { return a[static_cast<std::size_t>(r * 8 + c)]; };
    at(0, 0) = 1.0;                                     // q(0) = 0
    for (int j = 0; j < 8; ++j) at(1, j) = 1.0;         // q(T) = d
    rhs[1] = 1.0;
    at(2, 1) = 1.0;                                     // qdot(0) = 0
    for (int j = 1; j < 8; ++j) at(3, j) = j;           // qdot(T) = 0
    at(4, 2) = 2.0;                                     // qddot(0) = 0
    for (int j = 2; j < 8; ++j) at(5, j) = j * (j - 1); // qddot(T) = 0
    for (int j = 2; j < 8; ++j) {
        at(6, j) = j * (j - 1) * c_mom[static_cast<std::size_t>(j - 2)];
        at(7, j) = j * (j - 1) * s_mom[static_cast<std::size_t>(j - 2)];
    }

    std::vector<double> coeff;
    try {
        coeff = solve_dense(std::move(a), std::move(rhs));
    } catch (const SingularMatrixError&) {
        throw SingularMatrixError(
            "robust septic: system singular at this duration (resonant T); "
            "perturb T by ~1e-6*T and retry");
    }
    for (double& c : coeff) c *= d;
    PolySegment seg{0.0, T, 0.0, T, std::move(coeff)};
    return Trajectory(ProtocolKind::RobustSeptic, params, {Segment{seg}});
}

/// Dispatch by kind; `k` only affects the bang-bang protocol.
inline Trajectory synthesize(ProtocolKind kind, const PhysicalParams& params, int k = 0) {
    switch (kind) {
        case ProtocolKind::Quintic: return synth_quintic(params);
        case ProtocolKind::UnboundedOptimal: return synth_unbounded_optimal(params);
        case ProtocolKind::BoundedOptimal: return synth_bounded_optimal(params);
        case ProtocolKind::BangBang: return synth_bangbang(params, k);
        case ProtocolKind::RobustSeptic: return synth_robust_septic(params);
    }
    throw ConfigError("unknown protocol kind");
}

} // namespace shuttlekit
