#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature with deterministic bisection order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace carousel {

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    std::size_t subdivisions = 0;
};

/// Thrown when the requested tolerance is not met within the subdivision budget.
class quadrature_error : public std::runtime_error {
public:
    quadrature_error(const std::string& what, QuadratureResult partial)
        : std::runtime_error(what), partial_(partial)
    {
    }

    const QuadratureResult& partial() const noexcept { return partial_; }

private:
    QuadratureResult partial_;
};

namespace detail {

// QUADPACK qk15 nodes and weights.
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
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
};

template <class F>
Panel gauss_kronrod15(F& f, double a, double b)
{
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = kKronrodWeights[7] * fc;
    double gauss = kGaussWeights[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[i] * pair;
        if (i % 2 == 1)
            gauss += kGaussWeights[i / 2] * pair;
    }
    kronrod *= half;
    gauss *= half;
    const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * std::abs(kronrod);
    return Panel{a, b, kronrod, std::max(std::abs(kronrod - gauss), roundoff)};
}

} // namespace detail

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    std::size_t max_subdivisions = 2000;
};

/**
 * @brief Integrates f over [a, b], bisecting the panel with the largest error
 * estimate until the total estimate is within tolerance.
 *
 * Panels are kept in a vector and the final sum runs in interval order, so the
 * result is a deterministic function of (f, a, b, options).
 */
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {})
{
    if (!(b > a))
        return QuadratureResult{};
    std::vector<detail::Panel> panels;
    panels.push_back(detail::gauss_kronrod15(f, a, b));
    std::size_t subdivisions = 0;

    auto totals = [&] {
        double value = 0.0;
        double error = 0.0;
        double magnitude = 0.0;
        for (const auto& p : panels) {
            value += p.value;
            error += p.error;
            magnitude += std::abs(p.value);
        }
        return std::tuple{value, error, magnitude};
    };

    for (;;) {
        auto [value, error, magnitude] = totals();
        // A tolerance finer than the rounding floor of the panel sums cannot be met.
        const double floor = 100.0 * std::numeric_limits<double>::epsilon() * magnitude;
        const double target = std::max({opt.abs_tol, opt.rel_tol * std::abs(value), floor});
        if (error <= target) {
            std::sort(panels.begin(), panels.end(),
                      [](const auto& l, const auto& r) { return l.a < r.a; });
            auto [v, e, mag] = totals();
            (void)mag;
            return QuadratureResult{v, e, subdivisions};
        }
        if (subdivisions >= opt.max_subdivisions) {
            throw quadrature_error("quadrature tolerance not reached on [" + std::to_string(a) + ", " +
                                       std::to_string(b) + "]",
                                   QuadratureResult{value, error, subdivisions});
        }
        auto worst = std::max_element(panels.begin(), panels.end(),
                                      [](const auto& l, const auto& r) { return l.error < r.error; });
        const detail::Panel p = *worst;
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) {
            throw quadrature_error("quadrature interval cannot be bisected further",
                                   QuadratureResult{value, error, subdivisions});
        }
        *worst = detail::gauss_kronrod15(f, p.a, mid);
        panels.push_back(detail::gauss_kronrod15(f, mid, p.b));
        ++subdivisions;
    }
}

/**
 * @brief Integrates over [a, b] split at the given interior breakpoints,
 * so that each piece has a smooth integrand. The tolerance is shared
 * among pieces in proportion to their length.
 */
template <class F>
QuadratureResult integrate_piecewise(F&& f, double a, double b, std::span<const double> breakpoints,
                                     const QuadratureOptions& opt = {})
{
    if (!(b > a))
        return QuadratureResult{};
    std::vector<double> cuts;
    cuts.reserve(breakpoints.size() + 2);
    cuts.push_back(a);
    for (double x : breakpoints)
        if (x > a && x < b)
            cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    QuadratureResult total;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        QuadratureOptions piece = opt;
        piece.abs_tol = opt.abs_tol * (cuts[i + 1] - cuts[i]) / (b - a);
        const auto r = integrate(f, cuts[i], cuts[i + 1], piece);
        total.value += r.value;
        total.abs_error_estimate += r.abs_error_estimate;
        total.subdivisions += r.subdivisions;
    }
    return total;
}

} // namespace carousel
