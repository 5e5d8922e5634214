#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"

namespace shuttlekit {

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    const int m = (n + 1) / 2;
    for (int i = 1; i <= m; ++i) {
        double z = std::cos(constants::pi * (i - 0.25) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(i - 1)] = -z;
        nodes[static_cast<std::size_t>(n - i)] = z;
        const double w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[static_cast<std::size_t>(i - 1)] = w;
        weights[static_cast<std::size_t>(n - i)] = w;
    }
}

/// Composite Gauss-Legendre rule: `panel_count` equal panels with a fixed
/// per-panel node count. Exact for polynomials of degree <= 2n-1 per panel.
class QuadratureRule {
public:
    explicit QuadratureRule(int panel_count = 1, int nodes_per_panel = 32)
        : panel_count_(panel_count) {
        if (panel_count < 1) throw DomainError("QuadratureRule: panel_count must be positive");
        if (nodes_per_panel < 1) throw DomainError("QuadratureRule: nodes_per_panel must be positive");
        gauss_legendre(nodes_per_panel, nodes_, weights_);
    }

    /// Rule for [a, b] with enough panels to resolve an oscillation of the
    /// given period (>= 16 panels per period by default).
    static QuadratureRule resolving(double a, double b, double oscillation_period,
                                    int min_panels = 32, double panels_per_period = 16.0) {
        int panels = min_panels;
        if (oscillation_period > 0.0 && std::isfinite(oscillation_period)) {
            const double needed = panels_per_period * (b - a) / oscillation_period;
            if (needed > panels) panels = static_cast<int>(std::ceil(needed));
        }
        return QuadratureRule(panels);
    }

    int panel_count() const noexcept { return panel_count_; }
    int nodes_per_panel() const noexcept { return static_cast<int>(nodes_.size()); }
    std::span<const double> reference_nodes() const noexcept { return nodes_; }
    std::span<const double> reference_weights() const noexcept { return weights_; }

private:
    int panel_count_;
    std::vector<double> nodes_, weights_;
};

/// Integral of f over [a, b]. Throws EvaluationError if f is non-finite at a node.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureRule& rule) {
    if (!(a <= b)) throw DomainError("integrate: requires a <= b");
    if (a == b) return 0.0;
    const auto x = rule.reference_nodes();
    const auto w = rule.reference_weights();
    const double panel_width = (b - a) / rule.panel_count();
    double total = 0.0;
    for (int p = 0; p < rule.panel_count(); ++p) {
        const double lo = a + p * panel_width;
        const double mid = lo + 0.5 * panel_width;
        const double half = 0.5 * panel_width;
        double panel_sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double t = mid + half * x[i];
            const double v = f(t);
            if (!std::isfinite(v))
                throw EvaluationError("integrate: non-finite integrand at t=" + std::to_string(t), t);
            panel_sum += w[i] * v;
        }
        total += half * panel_sum;
    }
    return total;
}

/// Integral of f over consecutive intervals [breaks[i], breaks[i+1]], each
/// resolved with panels proportional to its length over `oscillation_period`.
/// Keeps Gauss accuracy for piecewise-smooth integrands with kinks at breaks.
template <class F>
double integrate_segmented(F&& f, std::span<const double> breaks, double oscillation_period,
                           int min_panels_per_segment = 8, double panels_per_period = 16.0) {
    if (breaks.size() < 2) throw DomainError("integrate_segmented: need at least two breakpoints");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i], b = breaks[i + 1];
        if (b <= a) continue;
        total += integrate(f, a, b,
                           QuadratureRule::resolving(a, b, oscillation_period,
                                                     min_panels_per_segment, panels_per_period));
    }
    return total;
}

// ---------------------------------------------------------------------------
// Exponential integral Ei on the negative axis
// ---------------------------------------------------------------------------

namespace detail {

inline double ei_negative_series(double x) {
    // Ei(x) = gamma + ln|x| + sum x^k/(k k!), safe from cancellation for |x| <~ 10
    double sum = 0.0, term = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= x / k;
        const double add = term / k;
        sum += add;
        if (std::abs(add) < 1e-18 * (std::abs(sum) + 1e-300)) break;
    }
    return constants::euler_gamma + std::log(-x) + sum;
}

inline double ei_negative_continued_fraction(double x) {
    // Ei(-z) = -E1(z), E1 via the Lentz continued fraction; z = -x > 0.
    const double z = -x;
    const double tiny = 1e-300;
    double b = z + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 300; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = a * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return -h * std::exp(-z);  // underflows to -0.0 below x ~ -745 (documented)
}

} // namespace detail

/// Ei(x) for strictly negative x. Relative error <= 1e-12 down to x = -700;
/// underflows to -0.0 below x ~ -745. Throws DomainError for x >= 0.
/// The series/continued-fraction switch sits at |x| = 4: the series result is
/// the small difference of O(1) terms, losing ~e^{|x|}|Ei(x)| digits beyond.
inline double expint_ei(double x) {
    if (!(x < 0.0)) throw DomainError("expint_ei: requires x < 0");
    return (x >= -4.0) ? detail::ei_negative_series(x)
                       : detail::ei_negative_continued_fraction(x);
}

// ---------------------------------------------------------------------------
// Dense linear solve (n <= 16)
// ---------------------------------------------------------------------------

/// Solves A x = b by Gaussian elimination with scaled partial pivoting.
/// A is row-major n x n with n = b.size(). Throws SingularMatrixError when a
/// scaled pivot falls below 1e-14.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    if (n == 0) throw DomainError("solve_dense: empty system");
    if (n > 16) throw DomainError("solve_dense: supports n <= 16");
    if (a.size() != n * n) throw DomainError("solve_dense: A must be n x n");

    std::vector<double> scale(n);
    for (std::size_t i = 0; i < n; ++i) {
        double big = 0.0;
        for (std::size_t j = 0; j < n; ++j) big = std::max(big, std::abs(a[i * n + j]));
        if (big == 0.0) throw SingularMatrixError("solve_dense: zero row");
        scale[i] = 1.0 / big;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[col * n + col]) * scale[col];
        for (std::size_t i = col + 1; i < n; ++i) {
            const double cand = std::abs(a[i * n + col]) * scale[i];
            if (cand > best) { best = cand; pivot = i; }
        }
        if (best < 1e-14) throw SingularMatrixError("solve_dense: matrix numerically singular");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[pivot * n + j]);
            std::swap(b[col], b[pivot]);
            std::swap(scale[col], scale[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t i = col + 1; i < n; ++i) {
            const double factor = a[i * n + col] * inv;
            if (factor == 0.0) continue;
            a[i * n + col] = 0.0;
            for (std::size_t j = col + 1; j < n; ++j) a[i * n + j] -= factor * a[col * n + j];
            b[i] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a[ii * n + j] * x[j];
        x[ii] = s / a[ii * n + ii];
    }
    return x;
}

// ---------------------------------------------------------------------------
// Fixed-step classical RK4
// ---------------------------------------------------------------------------

struct OdeStepperConfig {
    double step_size;  // s; callers pick e.g. T0/1000
};

namespace detail {

template <std::size_t N>
inline bool all_finite(const std::array<double, N>& y) {
    for (double v : y)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace detail

/// Classical 4th-order fixed-step integration of dy/dt = field(t, y) from t0
/// to t1. The step is shrunk uniformly so the interval divides exactly.
/// The observer (if any) is called at t0 and after every accepted step.
template <std::size_t N, class Field, class Observer>
std::array<double, N> evolve_ode(Field&& field, std::array<double, N> y, double t0, double t1,
                                 const OdeStepperConfig& cfg, Observer&& observe) {
    if (!(cfg.step_size > 0.0)) throw DomainError("evolve_ode: step_size must be positive");
    if (!(t0 <= t1)) throw DomainError("evolve_ode: requires t0 <= t1");
    observe(t0, y);
    if (t0 == t1) return y;

    const double span = t1 - t0;
    const long long steps = std::max(1LL, static_cast<long long>(std::ceil(span / cfg.step_size - 1e-12)));
    const double h = span / static_cast<double>(steps);

    std::array<double, N> k1{}, k2{}, k3{}, k4{}, tmp{};
    for (long long s = 0; s < steps; ++s) {
        const double t = t0 + h * static_cast<double>(s);
        k1 = field(t, y);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        k2 = field(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        k3 = field(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * k3[i];
        k4 = field(t + h, tmp);
        for (std::size_t i = 0; i < N; ++i)
            y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        const double t_next = t0 + h * static_cast<double>(s + 1);
        if (!detail::all_finite(y))
            throw DivergenceError("evolve_ode: state diverged at t=" + std::to_string(t_next), t_next);
        observe(t_next, y);
    }
    return y;
}

template <std::size_t N, class Field>
std::array<double, N> evolve_ode(Field&& field, std::array<double, N> y0, double t0, double t1,
                                 const OdeStepperConfig& cfg) {
    return evolve_ode<N>(std::forward<Field>(field), y0, t0, t1, cfg,
                         [](double, const std::array<double, N>&) {});
}

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

/// Location of the minimum of a unimodal f on [a, b] by golden-section search.
template <class F>
double golden_section_min(F&& f, double a, double b, double xtol) {
    const double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

/// Order-independent-by-construction summation (fixed recursive split).
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t mid = v.size() / 2;
    return pairwise_sum(v.subspan(0, mid)) + pairwise_sum(v.subspan(mid));
}

} // namespace shuttlekit
