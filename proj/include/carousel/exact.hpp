#pragma once

// Exact finite-n distributions.
//
// P_m(t) is the distribution function of the largest one-turn gain among
// m uniform items, equivalently of sum_{j<=m+1} c_j D_{j,m} with
// c_j = 1/(2^j - 1). It is a piecewise polynomial of degree m with knots at
// c_{m+1} < ... < c_2 < c_1 = 1. Two independent evaluation routes are
// provided: the alternating closed form over the knots, and the integral
// recursion in m evaluated by quadrature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "carousel/core.hpp"
#include "carousel/detail/numeric.hpp"
#include "carousel/quadrature.hpp"

namespace carousel::exact {

/// Largest degree served by the closed form. The knot differences c_l - c_j
/// shrink geometrically, so the alternating sum cancels about m^2 / 2 bits:
/// in double it is off by 2e-7 at m = 7 and meaningless from m = 9. The sum is
/// therefore carried in 50 significant digits, which still leaves more than 20
/// correct digits at this cap.
inline constexpr int kMaxClosedFormDegree = 12;

inline constexpr double kDefaultPmTol = 1e-9;
inline constexpr double kDefaultCdfTol = 1e-7;

namespace detail {

using carousel::detail::weight_c;

using WideFloat = boost::multiprecision::cpp_bin_float_50;

inline WideFloat wide_weight_c(int j)
{
    return WideFloat(1) / (boost::multiprecision::pow(WideFloat(2), j) - 1);
}

/// Weights prod_{l != j} (c_l - c_j)^{-1} of the closed form, cached per degree.
inline const std::vector<WideFloat>& closed_form_weights(int m)
{
    static const auto table = [] {
        std::vector<std::vector<WideFloat>> all(kMaxClosedFormDegree + 1);
        for (int deg = 0; deg <= kMaxClosedFormDegree; ++deg) {
            std::vector<WideFloat>& w = all[deg];
            w.resize(deg + 1);
            for (int j = 1; j <= deg + 1; ++j) {
                WideFloat prod = 1;
                for (int l = 1; l <= deg + 1; ++l)
                    if (l != j)
                        prod *= wide_weight_c(l) - wide_weight_c(j);
                w[j - 1] = 1 / prod;
            }
        }
        return all;
    }();
    return table.at(m);
}

} // namespace detail

/**
 * @brief P_m(t) by the closed form sum_j ((t - c_j)_+)^m prod_{l != j} (c_l - c_j)^{-1}.
 *
 * P_0(t) = 1[t > 1]. Throws std::out_of_range for m above kMaxClosedFormDegree;
 * use pm_recursive there.
 */
inline double pm_closed_form(int m, double t)
{
    if (m < 0)
        throw std::domain_error("pm_closed_form: m must be nonnegative");
    if (m > kMaxClosedFormDegree)
        throw std::out_of_range("pm_closed_form: degree " + std::to_string(m) +
                                " exceeds the closed-form cap; use pm_recursive");
    if (!(t >= 0.0))
        throw std::domain_error("pm_closed_form: t must be nonnegative");
    if (m == 0)
        return t > 1.0 ? 1.0 : 0.0;
    if (t >= 1.0)
        return 1.0;
    const auto& w = detail::closed_form_weights(m);
    const detail::WideFloat wide_t = t;
    detail::WideFloat sum = 0;
    for (int j = 1; j <= m + 1; ++j) {
        const detail::WideFloat x = wide_t - detail::wide_weight_c(j);
        if (x > 0)
            sum += boost::multiprecision::pow(x, m) * w[j - 1];
    }
    return std::clamp(sum.convert_to<double>(), 0.0, 1.0);
}

/**
 * @brief Piecewise-polynomial distribution function on [0, inf).
 *
 * Zero up to the first knot, one from the last knot on, and a polynomial of
 * the stated degree on each knot interval, stored as Chebyshev coefficients
 * on that interval.
 */
class PiecewiseCdf {
public:
    PiecewiseCdf() = default;

    /// Interpolates `f` exactly (for a piecewise polynomial of this degree) at
    /// degree + 1 Chebyshev-Lobatto points per interval.
    template <class F>
    static PiecewiseCdf interpolate(int degree, std::vector<double> knots, F&& f)
    {
        PiecewiseCdf cdf;
        cdf.degree_ = degree;
        std::sort(knots.begin(), knots.end());
        cdf.knots_ = std::move(knots);
        if (degree == 0)
            return cdf;
        const int n = degree;
        std::vector<double> values(n + 1);
        for (std::size_t i = 0; i + 1 < cdf.knots_.size(); ++i) {
            const double lo = cdf.knots_[i];
            const double hi = cdf.knots_[i + 1];
            for (int k = 0; k <= n; ++k) {
                const double x = std::cos(std::numbers::pi * k / n);
                values[k] = f(0.5 * (lo + hi) + 0.5 * (hi - lo) * x);
            }
            std::vector<double> coeffs(n + 1);
            for (int k = 0; k <= n; ++k) {
                double s = 0.0;
                for (int i2 = 0; i2 <= n; ++i2) {
                    const double wgt = (i2 == 0 || i2 == n) ? 0.5 : 1.0;
                    s += wgt * values[i2] * std::cos(std::numbers::pi * k * i2 / n);
                }
                coeffs[k] = 2.0 * s / n;
            }
            coeffs[0] *= 0.5;
            coeffs[n] *= 0.5;
            cdf.coeffs_.push_back(std::move(coeffs));
        }
        return cdf;
    }

    int degree() const noexcept { return degree_; }
    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<std::vector<double>>& coefficients() const noexcept { return coeffs_; }

    double operator()(double t) const
    {
        if (knots_.empty())
            return 0.0;
        if (degree_ == 0)
            return t > knots_.back() ? 1.0 : 0.0;
        if (t <= knots_.front())
            return 0.0;
        if (t >= knots_.back())
            return 1.0;
        const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
        const double lo = knots_[i];
        const double hi = knots_[i + 1];
        const double x = (2.0 * t - lo - hi) / (hi - lo);
        // Clenshaw recurrence.
        const auto& c = coeffs_[i];
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = c.size() - 1; k >= 1; --k) {
            const double b0 = 2.0 * x * b1 - b2 + c[k];
            b2 = b1;
            b1 = b0;
        }
        return std::clamp(x * b1 - b2 + c[0], 0.0, 1.0);
    }

private:
    int degree_ = 0;
    std::vector<double> knots_;
    std::vector<std::vector<double>> coeffs_;
};

/**
 * @brief Evaluates P_m through P_m(t) = int_0^t m (1-u)^{m-1} P_{m-1}((t+u)/(1-u)) du.
 *
 * Each level is computed by quadrature from the previous one and memoized as
 * an exact piecewise interpolant, so building up to degree M costs O(M^4)
 * integrand evaluations rather than an exponential recursion. Knots are
 * derived from the recursion itself: the integrand changes form where
 * (t+u)/(1-u) hits a knot c of P_{m-1}, which moves a knot to c / (2 + c).
 */
class PmRecursion {
public:
    explicit PmRecursion(int max_degree, double tol = kDefaultPmTol) : tol_(tol)
    {
        if (max_degree < 0)
            throw std::domain_error("PmRecursion: degree must be nonnegative");
        levels_.push_back(PiecewiseCdf::interpolate(0, {1.0}, [](double) { return 0.0; }));
        for (int m = 1; m < max_degree; ++m) {
            std::vector<double> knots = levels_.back().knots();
            knots.push_back(knots.front() / (2.0 + knots.front()));
            levels_.push_back(
                PiecewiseCdf::interpolate(m, knots, [&](double t) { return evaluate(m, t).value; }));
        }
        max_degree_ = max_degree;
    }

    int max_degree() const noexcept { return max_degree_; }

    /// Memoized level m, available for m < max_degree().
    const PiecewiseCdf& table(int m) const { return levels_.at(static_cast<std::size_t>(m)); }

    /// P_m(t) by one quadrature over the memoized P_{m-1}; requires 1 <= m <= max_degree().
    QuadratureResult evaluate(int m, double t) const
    {
        if (m < 1 || m > static_cast<int>(levels_.size()))
            throw std::out_of_range("PmRecursion::evaluate: degree not available");
        if (!(t >= 0.0))
            throw std::domain_error("PmRecursion::evaluate: t must be nonnegative");
        if (t >= 1.0)
            return QuadratureResult{1.0, 0.0, 0};
        const PiecewiseCdf& prev = levels_[static_cast<std::size_t>(m - 1)];
        auto integrand = [&](double u) {
            const double arg = (t + u) / (1.0 - u);
            const double inner = m == 1 ? (arg > 1.0 ? 1.0 : 0.0) : prev(arg);
            return m * std::pow(1.0 - u, m - 1) * inner;
        };
        // Below the lowest knot the integrand vanishes.
        const double c_low = prev.knots().front();
        const double start = std::max(0.0, (c_low - t) / (1.0 + c_low));
        std::vector<double> cuts;
        for (double c : prev.knots())
            cuts.push_back((c - t) / (1.0 + c));
        QuadratureOptions opt;
        opt.abs_tol = tol_;
        return integrate_piecewise(integrand, start, t, cuts, opt);
    }

private:
    double tol_;
    int max_degree_ = 0;
    std::vector<PiecewiseCdf> levels_;
};

/// P_m(t) via the recursion, memoizing lower levels for this call.
inline QuadratureResult pm_recursive(int m, double t, double tol = kDefaultPmTol)
{
    if (m < 1)
        throw std::domain_error("pm_recursive: m must be at least 1");
    PmRecursion rec(m, tol);
    return rec.evaluate(m, t);
}

/**
 * @brief P_0..P_{max_degree} for repeated evaluation: interpolated tables of
 * the closed form up to kMaxClosedFormDegree, memoized recursion above it.
 */
class PmFamily {
public:
    explicit PmFamily(int max_degree, double tol = kDefaultPmTol) : max_degree_(max_degree)
    {
        const int closed_top = std::min(max_degree, kMaxClosedFormDegree);
        for (int m = 1; m <= closed_top; ++m) {
            std::vector<double> knots;
            for (int j = 1; j <= m + 1; ++j)
                knots.push_back(detail::weight_c(j));
            closed_.push_back(PiecewiseCdf::interpolate(m, knots, [m](double t) { return pm_closed_form(m, t); }));
        }
        if (max_degree > kMaxClosedFormDegree)
            recursion_ = std::make_unique<PmRecursion>(max_degree + 1, tol);
    }

    double operator()(int m, double t) const
    {
        if (m == 0)
            return t > 1.0 ? 1.0 : 0.0;
        if (m <= kMaxClosedFormDegree)
            return closed_.at(static_cast<std::size_t>(m - 1))(t);
        return recursion_->table(m)(t);
    }

    int max_degree() const noexcept { return max_degree_; }

private:
    int max_degree_;
    std::vector<PiecewiseCdf> closed_;
    std::unique_ptr<PmRecursion> recursion_;
};

/**
 * @brief P(T_n >= 1 - t) for 0 <= t <= 1.
 *
 * Conditions on the last item before 1/2 (at distance u from the start going
 * counterclockwise) and the first item after it (at distance v going
 * clockwise). The indicator 1[1 - v - u - min(u, v) <= t] is turned into
 * integration limits, and both the outer (u) and inner (v) ranges are split at
 * every point where a factor P_k(t/u) or P_k(t/v) changes polynomial piece,
 * so each cell carries a polynomial integrand.
 */
inline QuadratureResult tn_cdf(std::size_t n, double t, double tol = kDefaultCdfTol)
{
    if (n < 1)
        throw std::domain_error("tn_cdf: n must be at least 1");
    if (!(t >= 0.0 && t <= 1.0))
        throw std::domain_error("tn_cdf: t must lie in [0, 1]");
    if (t == 0.0)
        return QuadratureResult{};

    const int top = static_cast<int>(n) - 1;
    const PmFamily pm(top);
    auto p_scaled = [&](int k, double x) { return x <= 0.0 ? 1.0 : pm(k, std::min(t / x, 2.0)); };

    // Points where t / x crosses a knot c_j of P_0..P_{n-1}.
    std::vector<double> kinks;
    for (int j = 1; j <= static_cast<int>(n); ++j) {
        const double x = t / detail::weight_c(j);
        if (x < 0.5)
            kinks.push_back(x);
    }

    std::vector<double> binom_coeff(n + 1, 1.0);
    for (std::size_t k = 1; k <= n; ++k)
        binom_coeff[k] = binom_coeff[k - 1] * static_cast<double>(n - k + 1) / static_cast<double>(k);

    auto density = [&](double u, double v) {
        double s = 0.0;
        for (std::size_t k = 1; k + 1 <= n; ++k) {
            const double w = binom_coeff[k] * static_cast<double>(k) * static_cast<double>(n - k) *
                             std::pow(u, static_cast<double>(k - 1)) *
                             std::pow(v, static_cast<double>(n - k - 1));
            if (w == 0.0)
                continue;
            s += w * p_scaled(static_cast<int>(k) - 1, u) * p_scaled(static_cast<int>(n - k) - 1, v);
        }
        return s;
    };

    const double half_tol = 0.5 * tol;
    QuadratureOptions inner_opt;
    inner_opt.abs_tol = 0.25 * tol;
    double inner_err = 0.0;
    // A piece that misses its tolerance contributes its partial value; the
    // whole evaluation then fails with the assembled partial result.
    bool missed = false;
    auto attempt = [&](auto&& f, double a, double b, const std::vector<double>& cuts, const QuadratureOptions& opt) {
        try {
            return integrate_piecewise(f, a, b, cuts, opt);
        } catch (const quadrature_error& e) {
            missed = true;
            return e.partial();
        }
    };

    // Inner integral over v for fixed u: the cell v >= u needs v >= 1 - t - 2u,
    // the cell v < u needs v >= (1 - t - u) / 2.
    auto inner = [&](double u) {
        double total = 0.0;
        auto in_v = [&](double v) { return density(u, v); };
        const double lo_a = std::max(u, 1.0 - t - 2.0 * u);
        if (lo_a < 0.5) {
            const auto r = attempt(in_v, lo_a, 0.5, kinks, inner_opt);
            total += r.value;
            inner_err = std::max(inner_err, r.abs_error_estimate);
        }
        const double lo_b = std::max(0.0, 0.5 * (1.0 - t - u));
        if (lo_b < u) {
            const auto r = attempt(in_v, lo_b, u, kinks, inner_opt);
            total += r.value;
            inner_err = std::max(inner_err, r.abs_error_estimate);
        }
        return total;
    };

    std::vector<double> outer_cuts = kinks;
    outer_cuts.push_back((1.0 - t) / 3.0);
    outer_cuts.push_back(1.0 - t);
    outer_cuts.push_back(0.5 * (0.5 - t));
    for (double kink : kinks) {
        outer_cuts.push_back(0.5 * (1.0 - t - kink));
        outer_cuts.push_back(1.0 - t - 2.0 * kink);
    }

    QuadratureResult result;
    if (n >= 2) {
        QuadratureOptions outer_opt;
        outer_opt.abs_tol = half_tol;
        result = attempt(inner, 0.0, 0.5, outer_cuts, outer_opt);
        result.abs_error_estimate += 0.5 * inner_err;
    }

    if (t > 0.5) {
        auto edge = [&](double u) {
            return static_cast<double>(n) * std::pow(u, static_cast<double>(n - 1)) * p_scaled(top, u);
        };
        QuadratureOptions edge_opt;
        edge_opt.abs_tol = 0.25 * tol;
        const auto r = attempt(edge, 1.0 - t, 0.5, kinks, edge_opt);
        result.value += 2.0 * r.value;
        result.abs_error_estimate += 2.0 * r.abs_error_estimate;
        result.subdivisions += r.subdivisions;
    }
    if (missed)
        throw quadrature_error("tn_cdf: tolerance not reached at t = " + std::to_string(t), result);
    return result;
}

/// Known closed forms of P(T_n >= 1 - t) for n = 1, 2, 3 and 0 <= t <= 1.
inline double tn_cdf_closed_form(std::size_t n, double t)
{
    using carousel::detail::positive_part;
    const double a = positive_part(2.0 * t - 1.0);
    const double b = positive_part(4.0 * t - 1.0);
    switch (n) {
    case 1:
        return a;
    case 2:
        return b * b / 3.0 - 2.0 * a * a;
    case 3: {
        const double c = positive_part(6.0 * t - 1.0);
        return 0.25 * c * c * c - 41.0 / 36.0 * b * b * b - 0.25 * b * b + 2.75 * a * a * a;
    }
    default:
        throw std::out_of_range("tn_cdf_closed_form: only n <= 3 is available");
    }
}

/// Mean of T_n^* = sum_{j=2}^{n+1} (1 - alpha_j) D_{j,n}.
inline double tn_star_mean(std::size_t n)
{
    if (n < 1)
        throw std::domain_error("tn_star_mean: n must be at least 1");
    double s = 0.0;
    for (std::size_t j = 2; j <= n + 1; ++j)
        s += 1.0 - alpha(j);
    return s / static_cast<double>(n + 1);
}

/// Upper estimate of E(T_n): E(T_n^*) + 0.09 / (n + 1).
inline double upper_estimate_mean(std::size_t n)
{
    return tn_star_mean(n) + 0.09 / static_cast<double>(n + 1);
}

} // namespace carousel::exact
