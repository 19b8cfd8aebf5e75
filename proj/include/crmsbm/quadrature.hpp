#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature.
//
// Global subdivision: the panel with the largest error estimate is bisected
// until the summed estimate meets max(abs_tol, rel_tol * |I|).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace crmsbm {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;
    int max_panels = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
    bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (the 7-point rule).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        const double pair = f(centre - dx) + f(centre + dx);
        kronrod += kKronrodWeights[j] * pair;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
    }
    kronrod *= half;
    gauss *= half;
    // The Gauss/Kronrod difference bounds the 7-point error; the 15-point
    // value is far more accurate than this estimate.
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over [a, b]. `breakpoints` (sorted, strictly inside) seed the
/// initial panel set.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {},
                           std::span<const double> breakpoints = {}) {
    QuadratureResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::vector<double> edges;
    edges.reserve(breakpoints.size() + 2);
    edges.push_back(a);
    for (double p : breakpoints)
        if (p > edges.back() && p < b) edges.push_back(p);
    edges.push_back(b);

    std::priority_queue<detail::Panel> heap;
    double total = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        auto p = detail::gk15(f, edges[i], edges[i + 1]);
        out.evaluations += 15;
        total += p.value;
        err += p.error;
        heap.push(p);
    }
    while (true) {
        const double target = std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
        if (err <= target) {
            out.converged = true;
            break;
        }
        if (static_cast<int>(heap.size()) >= opts.max_panels) break;
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Panel cannot be split further in double precision.
            heap.push({worst.a, worst.b, worst.value, 0.0});
            err -= worst.error;
            continue;
        }
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed accumulated rounding from the incremental updates.
    total = 0.0;
    err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    out.value = total;
    out.error = err;
    if (!std::isfinite(total)) out.converged = false;
    return out;
}

/// Integrates f over [a, inf) via x = a + s/(1-s).
template <class F>
QuadratureResult integrate_to_infinity(F&& f, double a, const QuadratureOptions& opts = {},
                                       std::span<const double> breakpoints = {}) {
    auto mapped = [&](double s) {
        const double one_minus = 1.0 - s;
        const double x = a + s / one_minus;
        if (!std::isfinite(x)) return 0.0;
        const double v = f(x);
        return v == 0.0 ? 0.0 : v / (one_minus * one_minus);
    };
    std::vector<double> mapped_breaks;
    for (double p : breakpoints)
        if (p > a) mapped_breaks.push_back((p - a) / (1.0 + (p - a)));
    return integrate(mapped, 0.0, 1.0, opts, mapped_breaks);
}

}  // namespace crmsbm
