#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/numerics.hpp"

namespace shuttlekit {

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Flat spectrum; alpha(tau) = gamma * delta(tau). gamma in s for the
/// dimensionless fractional spring fluctuation x.
struct WhiteNoise {
    double gamma;
};

/// Lorentzian spectrum; alpha(t) = (D/2tau) exp(-t/tau).
struct OrnsteinUhlenbeckNoise {
    double intensity;         // D (s)
    double correlation_time;  // tau (s)
};

/// 1/Omega spectrum between 2pi/tau_long and 2pi/tau_short, realized as a
/// log-uniform superposition of OU processes.
struct FlickerNoise {
    double variance;   // C = alpha(0), dimensionless^2
    double tau_short;  // tau1 (s)
    double tau_long;   // tau2 (s)
};

using NoiseModel = std::variant<WhiteNoise, OrnsteinUhlenbeckNoise, FlickerNoise>;

/// Intensities may be zero (degenerate noiseless model); times must be positive.
inline void validate(const NoiseModel& model) {
    std::visit(
        [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, WhiteNoise>) {
                if (!(m.gamma >= 0.0)) throw ConfigError("white noise: gamma must be >= 0");
            } else if constexpr (std::is_same_v<M, OrnsteinUhlenbeckNoise>) {
                if (!(m.intensity >= 0.0)) throw ConfigError("OU noise: D must be >= 0");
                if (!(m.correlation_time > 0.0)) throw ConfigError("OU noise: tau must be > 0");
            } else {
                if (!(m.variance >= 0.0)) throw ConfigError("flicker noise: C must be >= 0");
                if (!(m.tau_short > 0.0)) throw ConfigError("flicker noise: tau1 must be > 0");
                if (!(m.tau_long > m.tau_short))
                    throw ConfigError("flicker noise: requires 0 < tau1 < tau2");
            }
        },
        model);
}

/// The prefactor multiplying G(T) in the excitation energy:
/// gamma, D, or 2C(tau2-tau1)/ln(tau2/tau1).
inline double noise_intensity(const NoiseModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, WhiteNoise>) return m.gamma;
            else if constexpr (std::is_same_v<M, OrnsteinUhlenbeckNoise>) return m.intensity;
            else
                return 2.0 * m.variance * (m.tau_long - m.tau_short) /
                       std::log(m.tau_long / m.tau_short);
        },
        model);
}

/// Shortest correlation time (infinite for white noise, which imposes no
/// sampling-resolution constraint of its own).
inline double shortest_correlation_time(const NoiseModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, WhiteNoise>)
                return std::numeric_limits<double>::infinity();
            else if constexpr (std::is_same_v<M, OrnsteinUhlenbeckNoise>)
                return m.correlation_time;
            else
                return m.tau_short;
        },
        model);
}

inline const char* kind_name(const NoiseModel& model) {
    if (std::holds_alternative<WhiteNoise>(model)) return "white";
    if (std::holds_alternative<OrnsteinUhlenbeckNoise>(model)) return "ou";
    return "flicker";
}

// ---------------------------------------------------------------------------
// Correlation and spectrum
// ---------------------------------------------------------------------------

/// alpha(lag): a pointwise value, except for white noise where the Dirac
/// weight gamma is returned tagged so no caller evaluates a delta pointwise.
struct Correlation {
    bool dirac_weight;
    double value;
};

namespace detail {

/// Flicker alpha(t) = -(C/ln r) [Ei(-t/tau)]_{tau1}^{tau2}; C at t = 0.
inline double flicker_alpha(const FlickerNoise& m, double t) {
    if (t <= 0.0) return m.variance;
    const double log_ratio = std::log(m.tau_long / m.tau_short);
    const double upper = expint_ei(-t / m.tau_long);
    const double lower = expint_ei(-t / m.tau_short);
    return -(m.variance / log_ratio) * (upper - lower);
}

} // namespace detail

inline Correlation correlation(const NoiseModel& model, double lag) {
    if (!(lag >= 0.0)) throw DomainError("correlation: requires lag >= 0");
    return std::visit(
        [lag](const auto& m) -> Correlation {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, WhiteNoise>) {
                return {true, m.gamma};
            } else if constexpr (std::is_same_v<M, OrnsteinUhlenbeckNoise>) {
                return {false, 0.5 * m.intensity / m.correlation_time *
                                   std::exp(-lag / m.correlation_time)};
            } else {
                return {false, detail::flicker_alpha(m, lag)};
            }
        },
        model);
}

/// Two-sided spectral density S(Omega) = (1/2pi) Int alpha(tau) cos(Omega tau) dtau.
inline double spectrum(const NoiseModel& model, double omega) {
    if (!(omega >= 0.0)) throw DomainError("spectrum: requires Omega >= 0");
    return std::visit(
        [omega](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, WhiteNoise>) {
                return m.gamma / (2.0 * constants::pi);
            } else if constexpr (std::is_same_v<M, OrnsteinUhlenbeckNoise>) {
                const double wt = omega * m.correlation_time;
                return m.intensity / (2.0 * constants::pi * (1.0 + wt * wt));
            } else {
                const double log_ratio = std::log(m.tau_long / m.tau_short);
                if (omega * m.tau_long < 1e-7)  // arctan difference degenerates; use the limit
                    return m.variance * (m.tau_long - m.tau_short) /
                           (constants::pi * log_ratio);
                return m.variance *
                       (std::atan(omega * m.tau_long) - std::atan(omega * m.tau_short)) /
                       (constants::pi * omega * log_ratio);
            }
        },
        model);
}

// ---------------------------------------------------------------------------
// Memory kernels g0(t) = Int_0^t alpha, g1(t) = Int_0^t alpha(u) u du
// ---------------------------------------------------------------------------

struct NoiseKernels {
    std::function<double(double)> g0;  // s * [x^2]
    std::function<double(double)> g1;  // s^2 * [x^2]
};

namespace detail {

// Bracket terms [f(tau)]_{tau1}^{tau2} of the flicker kernels. Below
// t/tau1 ~ 1e-8 the Ei forms lose all signal to cancellation, so the leading
// series (g0 ~ C t, g1 ~ C t^2/2) takes over.
inline double flicker_g0(const FlickerNoise& m, double t) {
    if (t <= 0.0) return 0.0;
    const double log_ratio = std::log(m.tau_long / m.tau_short);
    if (t < 1e-8 * m.tau_short) {
        const double corr = 0.5 * t * (1.0 / m.tau_long - 1.0 / m.tau_short) / log_ratio;
        return m.variance * t * (1.0 + corr);
    }
    auto bracket = [t](double tau) {
        return tau - tau * std::exp(-t / tau) - t * expint_ei(-t / tau);
    };
    return m.variance / log_ratio * (bracket(m.tau_long) - bracket(m.tau_short));
}

inline double flicker_g1(const FlickerNoise& m, double t) {
    if (t <= 0.0) return 0.0;
    const double log_ratio = std::log(m.tau_long / m.tau_short);
    if (t < 1e-8 * m.tau_short) {
        const double corr =
            (2.0 / 3.0) * t * (1.0 / m.tau_long - 1.0 / m.tau_short) / log_ratio;
        return 0.5 * m.variance * t * t * (1.0 + corr);
    }
    auto bracket = [t](double tau) {
        const double e = std::exp(-t / tau);
        return tau * tau * (1.0 - e) - t * tau * e - t * t * expint_ei(-t / tau);
    };
    return 0.5 * m.variance / log_ratio * (bracket(m.tau_long) - bracket(m.tau_short));
}

} // namespace detail

/// Closed-form kernel pair for the model. White noise keeps the half-weight
/// Dirac convention g0 = gamma/2 for t >= 0.
inline NoiseKernels kernels(const NoiseModel& model) {
    return std::visit(
        [](const auto& m) -> NoiseKernels {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, WhiteNoise>) {
                const double half = 0.5 * m.gamma;
                return {[half](double) { return half; }, [](double) { return 0.0; }};
            } else if constexpr (std::is_same_v<M, OrnsteinUhlenbeckNoise>) {
                const double D = m.intensity, tau = m.correlation_time;
                return {[D, tau](double t) {
                            return t <= 0.0 ? 0.0 : 0.5 * D * (1.0 - std::exp(-t / tau));
                        },
                        [D, tau](double t) {
                            if (t <= 0.0) return 0.0;
                            const double e = std::exp(-t / tau);
                            return 0.5 * D * tau * (1.0 - e - (t / tau) * e);
                        }};
            } else {
                const FlickerNoise f = m;
                return {[f](double t) { return detail::flicker_g0(f, t); },
                        [f](double t) { return detail::flicker_g1(f, t); }};
            }
        },
        model);
}

/// Closed form of Int_0^T g0(t) dt (the trajectory-independent accumulation
/// entering both the spring static term and the position-noise energy).
inline double integral_g0(const NoiseModel& model, double t_end) {
    if (!(t_end >= 0.0)) throw DomainError("integral_g0: requires T >= 0");
    return std::visit(
        [t_end](const auto& m) -> double {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, WhiteNoise>) {
                return 0.5 * m.gamma * t_end;
            } else if constexpr (std::is_same_v<M, OrnsteinUhlenbeckNoise>) {
                const double tau = m.correlation_time;
                return 0.5 * m.intensity *
                       (t_end - tau + tau * std::exp(-t_end / tau));
            } else {
                if (t_end == 0.0) return 0.0;
                const double log_ratio = std::log(m.tau_long / m.tau_short);
                auto bracket = [t_end](double tau) {
                    const double e = std::exp(-t_end / tau);
                    return tau * t_end * (2.0 - e) + tau * tau * (e - 1.0) -
                           t_end * t_end * expint_ei(-t_end / tau);
                };
                return 0.5 * m.variance / log_ratio *
                       (bracket(m.tau_long) - bracket(m.tau_short));
            }
        },
        model);
}

// ---------------------------------------------------------------------------
// Seeded sampling
// ---------------------------------------------------------------------------

/// Deterministic 64-bit generator (splitmix64 stream).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in (0, 1].
    double uniform01() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (pair cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * constants::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Derives statistically independent member seeds; pure, so parallel ensembles
/// are reproducible regardless of scheduling.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
    SplitMix64 g(seed ^ (0x9E3779B97F4A7C15ULL * (counter + 0x632BE59BD9B4E019ULL)));
    return g.next();
}

/// One realization x(t_k) on the uniform grid t_k = k dt, k = 0..steps.
/// White-noise samples are per-interval values (variance gamma/dt, band
/// limited); colored samples live on the grid points.
struct NoisePath {
    double dt = 0.0;
    std::vector<double> values;
    std::uint64_t seed = 0;

    /// Noise value driving step k -> k+1: the interval value for white noise,
    /// the midpoint average for colored noise (Stratonovich-consistent).
    double step_value(std::size_t k, bool white) const {
        return white ? values[k] : 0.5 * (values[k] + values[k + 1]);
    }
};

/// Samples one path. Deterministic given (model, duration, dt, seed).
/// Enforces dt <= tau/10 (OU) resp. dt <= tau1/10 (flicker); the trap-period
/// resolution bound is owned by callers that know omega.
inline NoisePath sample_path(const NoiseModel& model, double duration, double dt,
                             std::uint64_t seed) {
    validate(model);
    if (!(dt > 0.0) || !(duration > 0.0))
        throw ConfigError("sample_path: duration and dt must be positive");
    const double tau_min = shortest_correlation_time(model);
    if (std::isfinite(tau_min) && dt > tau_min / 10.0 * (1.0 + 1e-12))
        throw ConfigError("sample_path: dt must not exceed the shortest correlation time / 10");

    const auto steps =
        static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
    NoisePath path;
    path.dt = dt;
    path.seed = seed;
    path.values.assign(steps + 1, 0.0);
    SplitMix64 rng(seed);

    if (const auto* w = std::get_if<WhiteNoise>(&model)) {
        const double sigma = std::sqrt(w->gamma / dt);
        for (double& v : path.values) v = sigma * rng.normal();
    } else if (const auto* ou = std::get_if<OrnsteinUhlenbeckNoise>(&model)) {
        const double var = 0.5 * ou->intensity / ou->correlation_time;
        const double decay = std::exp(-dt / ou->correlation_time);
        const double innov = std::sqrt(var * (1.0 - decay * decay));
        double x = std::sqrt(var) * rng.normal();
        path.values[0] = x;
        for (std::size_t k = 1; k < path.values.size(); ++k) {
            x = x * decay + innov * rng.normal();
            path.values[k] = x;
        }
    } else {
        // 10 OU components per decade of correlation time, log-midpoint spaced
        const auto& f = std::get<FlickerNoise>(model);
        const double log_ratio = std::log(f.tau_long / f.tau_short);
        const int m = std::max(
            1, static_cast<int>(std::ceil(10.0 * log_ratio / std::log(10.0))));
        const double dln = log_ratio / m;
        const double comp_var = f.variance / m;
        std::vector<double> tau(static_cast<std::size_t>(m)), decay(tau.size()),
            innov(tau.size()), x(tau.size());
        for (int i = 0; i < m; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            tau[idx] = f.tau_short * std::exp((i + 0.5) * dln);
            decay[idx] = std::exp(-dt / tau[idx]);
            innov[idx] = std::sqrt(comp_var * (1.0 - decay[idx] * decay[idx]));
            x[idx] = std::sqrt(comp_var) * rng.normal();
        }
        for (std::size_t k = 0; k < path.values.size(); ++k) {
            if (k > 0)
                for (std::size_t i = 0; i < x.size(); ++i)
                    x[i] = x[i] * decay[i] + innov[i] * rng.normal();
            double sum = 0.0;
            for (double xi : x) sum += xi;
            path.values[k] = sum;
        }
    }
    return path;
}

} // namespace shuttlekit
