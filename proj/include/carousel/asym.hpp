#pragma once

// Small-t behaviour of P(t) = P(J <= t) and of the related q-series
// functionals I^(q) = sum_j q^{j-1} X_j and J^(q).
//
// The tilt parameter lambda is written as 2^{k + theta} with integer k and
// theta in [0, 1). The oscillating constants A(theta), B(theta), C(theta)
// and the theta-function correction enter the exact asymptotics.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "carousel/detail/numeric.hpp"

namespace carousel::asym {

/// Upper end of the range in which the asymptotic formulas are offered.
inline constexpr double kAsymptoticMaxT = 0.2;

struct SaddleFrame {
    double lambda = 0.0;
    int k = 0;
    double theta = 0.0;
    double m_lambda = 0.0;  ///< sum_j 1/(2^j - 1 + lambda)
    double s2_lambda = 0.0; ///< sum_j 1/(2^j - 1 + lambda)^2
    double phi_J = 0.0;     ///< prod_j (2^j - 1)/(2^j - 1 + lambda)
    double log_phi_J = 0.0;
};

struct ThetaParams {
    double q = 0.5;
    double theta = 0.0;
};

struct ThetaTerms {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
};

struct Prop51Check {
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_gap = 0.0;
};

namespace detail {

using carousel::detail::CompensatedSum;
using carousel::detail::pow2_minus_one;

inline constexpr double kLog2 = std::numbers::ln2;

// Stop a j-series when the current term is below 1e-17 of the running value;
// all series here decay at least geometrically with ratio 1/2 beyond the
// point where 2^j dominates, so this bounds the remainder by 2e-17 relative.
inline bool negligible(double term, double acc) { return std::abs(term) < 1e-17 * std::abs(acc); }

/// A(theta) without reducing theta modulo 1.
inline double a_term_raw(double theta)
{
    const double p1 = std::exp2(1.0 - theta);
    const double p0 = std::exp2(theta);
    CompensatedSum s;
    for (int j = 1; j < 2000; ++j) {
        const double two_j = std::ldexp(1.0, j);
        const double term = -p1 / (two_j + p1) + p0 / (two_j + p0);
        s += term;
        if (j > 4 && std::abs(term) < 1e-18 && std::ldexp(1.0, -j) * (p0 + p1) < 1e-18)
            break;
    }
    return s.value() - theta;
}

/// log of prod_j (1 - 2^{-j}) / ((1 + 2^{theta-j}) (1 + 2^{1-theta-j})).
inline double log_theta_product(double theta)
{
    CompensatedSum s;
    for (int j = 1; j < 2000; ++j) {
        const double term = std::log1p(-std::exp2(-j)) - std::log1p(std::exp2(theta - j)) -
                            std::log1p(std::exp2(1.0 - theta - j));
        s += term;
        if (j > 4 && std::abs(term) < 1e-18)
            break;
    }
    return s.value();
}

/// B(theta) without reducing theta modulo 1.
inline double b_term_raw(double theta)
{
    return log_theta_product(theta) - 0.5 * theta * (1.0 - theta) * kLog2;
}

/// C(theta) without reducing theta modulo 1.
inline double c_term_raw(double theta)
{
    return std::exp(b_term_raw(theta)) / std::sqrt(2.0 * std::numbers::pi);
}

} // namespace detail

/// prod_{j>=1} (1 - q^j), the q-Pochhammer symbol (q; q)_inf.
inline double q_pochhammer(double q)
{
    if (!(q > 0.0 && q < 1.0))
        throw std::domain_error("q_pochhammer: q must lie in (0, 1)");
    double log_prod = 0.0;
    double qj = q;
    for (int j = 1; j < 100000; ++j) {
        log_prod += std::log1p(-qj);
        if (qj < 1e-18)
            break;
        qj *= q;
    }
    return std::exp(log_prod);
}

/// m_lambda, S_lambda^2 and phi_J(lambda) by direct summation.
inline SaddleFrame saddle_quantities(double lambda)
{
    if (!(lambda > 1.0))
        throw std::domain_error("saddle_quantities: lambda must exceed 1");
    SaddleFrame f;
    f.lambda = lambda;
    const double l2 = std::log2(lambda);
    f.k = static_cast<int>(std::floor(l2));
    f.theta = l2 - f.k;

    detail::CompensatedSum m, s2, logphi;
    for (int j = 1; j < 2000; ++j) {
        const double c = detail::pow2_minus_one(j);
        const double inv = 1.0 / (c + lambda);
        m += inv;
        s2 += inv * inv;
        logphi += -std::log1p(lambda / c);
        if (j > f.k + 2 && detail::negligible(inv, m.value()) && detail::negligible(lambda / c, logphi.value()))
            break;
    }
    f.m_lambda = m.value();
    f.s2_lambda = s2.value();
    f.log_phi_J = logphi.value();
    f.phi_J = std::exp(f.log_phi_J);
    return f;
}

inline double a_term(double theta) { return detail::a_term_raw(carousel::detail::fractional_part(theta)); }
inline double b_term(double theta) { return detail::b_term_raw(carousel::detail::fractional_part(theta)); }
inline double c_term(double theta) { return detail::c_term_raw(carousel::detail::fractional_part(theta)); }

inline ThetaTerms abc_theta_terms(double theta)
{
    return ThetaTerms{a_term(theta), b_term(theta), c_term(theta)};
}

/**
 * @brief Theta correction 1 + 2 sum_k exp(-2 k^2 pi^2 / log(1/q)) cos(2 k pi (1/2 - theta)).
 *
 * At q = 1/2 the first correction is about 4.3e-13, so the value is 1 to
 * twelve digits while still depending on theta.
 */
inline double theta_fn(const ThetaParams& p)
{
    if (!(p.q > 0.0 && p.q < 1.0))
        throw std::domain_error("theta_fn: q must lie in (0, 1)");
    const double log_inv_q = -std::log(p.q);
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k < 10000; ++k) {
        const double decay = std::exp(-2.0 * k * k * pi * pi / log_inv_q);
        if (decay < 1e-30)
            break;
        sum += decay * std::cos(2.0 * k * pi * (0.5 - p.theta));
    }
    return 1.0 + 2.0 * sum;
}

/// The constant sqrt(log 2) prod_j (1 - 2^{-j})^2 / (2^{1/8} 2 pi), about 0.01013.
inline double c_theta_constant()
{
    const double poch = q_pochhammer(0.5);
    return std::sqrt(detail::kLog2) * poch * poch / (std::exp2(0.125) * 2.0 * std::numbers::pi);
}

/**
 * @brief Both sides of the product identity
 * prod_j (1 + 2^{theta-j})(1 + 2^{1-theta-j})
 *   = 2^{-theta(1-theta)/2} theta3(theta) 2^{1/8} sqrt(2 pi) / sqrt(log 2) prod_j (1 - 2^{-j})^{-1}.
 */
inline Prop51Check check_prop51(double theta)
{
    detail::CompensatedSum log_lhs;
    for (int j = 1; j < 2000; ++j) {
        const double term = std::log1p(std::exp2(theta - j)) + std::log1p(std::exp2(1.0 - theta - j));
        log_lhs += term;
        if (j > 4 && std::abs(term) < 1e-18)
            break;
    }
    Prop51Check r;
    r.lhs = std::exp(log_lhs.value());
    r.rhs = std::exp2(-0.5 * theta * (1.0 - theta)) * theta_fn(ThetaParams{0.5, theta}) * std::exp2(0.125) *
            std::sqrt(2.0 * std::numbers::pi) / std::sqrt(detail::kLog2) / q_pochhammer(0.5);
    r.rel_gap = std::abs(r.lhs - r.rhs) / std::abs(r.rhs);
    return r;
}

/// psi^(q)(t) = [log(1/t) + log log(1/t) - log log(1/q)] / log(1/q); q = 1/2 by default.
inline double psi(double t, double q = 0.5)
{
    if (!(t > 0.0 && t < std::exp(-1.0)))
        throw std::domain_error("psi: t must lie in (0, 1/e)");
    if (!(q > 0.0 && q < 1.0))
        throw std::domain_error("psi: q must lie in (0, 1)");
    const double log_inv_t = std::log(1.0 / t);
    const double log_inv_q = std::log(1.0 / q);
    return (log_inv_t + std::log(log_inv_t) - std::log(log_inv_q)) / log_inv_q;
}

namespace detail {

inline void check_asymptotic_range(double t, const char* who)
{
    if (!(t > 0.0 && t < kAsymptoticMaxT))
        throw std::domain_error(std::string(who) + ": t must lie in (0, 0.2)");
}

// frac(psi); values within 1e-9 of an integer are snapped to 0 so that both
// sides of the branch evaluate the same (C and theta3 are 1-periodic).
inline double psi_fraction(double value)
{
    double f = carousel::detail::fractional_part(value);
    if (f < 1e-9 || f > 1.0 - 1e-9)
        f = 0.0;
    return f;
}

} // namespace detail

/// Exact small-t asymptotic of P(J <= t), assembled with the theta correction.
inline double asymptotic_cdf_J(double t)
{
    detail::check_asymptotic_range(t, "asymptotic_cdf_J");
    const double p = psi(t);
    const double theta = detail::psi_fraction(p);
    return c_theta_constant() / theta_fn(ThetaParams{0.5, theta}) *
           std::exp(-0.5 * detail::kLog2 * p * p) * std::pow(t, -(0.5 + 1.0 / detail::kLog2));
}

/// The same asymptotic assembled from C(frac psi(t)) directly.
inline double asymptotic_cdf_J_via_c(double t)
{
    detail::check_asymptotic_range(t, "asymptotic_cdf_J_via_c");
    const double p = psi(t);
    const double theta = detail::psi_fraction(p);
    return c_term(theta) * std::exp(-0.5 * detail::kLog2 * p * p) *
           std::pow(t, -(0.5 + 1.0 / detail::kLog2));
}

/// Small-t asymptotic of P(q I^(q) <= t) where q I^(q) = sum_j q^j X_j.
inline double asymptotic_cdf_qI(double t, double q)
{
    detail::check_asymptotic_range(t, "asymptotic_cdf_qI");
    if (!(q > 0.0 && q < 1.0))
        throw std::domain_error("asymptotic_cdf_qI: q must lie in (0, 1)");
    const double log_inv_q = std::log(1.0 / q);
    const double p = psi(t, q);
    const double theta = detail::psi_fraction(p);
    return std::pow(q, 0.125) * std::sqrt(log_inv_q) * q_pochhammer(q) / (2.0 * std::numbers::pi) *
           std::pow(t, -(0.5 + 1.0 / log_inv_q)) * std::exp(-0.5 * log_inv_q * p * p) /
           theta_fn(ThetaParams{q, theta});
}

/// Small-t asymptotic of P((q/(1-q)) J^(q) <= t), the sum sum_j X_j / (q^{-j} - 1).
inline double asymptotic_cdf_Jq(double t, double q)
{
    return asymptotic_cdf_qI(t, q) * q_pochhammer(q);
}

/// Saddle-point value exp(lambda m) phi_J(lambda) / (lambda S sqrt(2 pi)) for P(m_lambda).
inline double saddle_point_cdf(const SaddleFrame& f)
{
    return std::exp(f.lambda * f.m_lambda + f.log_phi_J) /
           (f.lambda * std::sqrt(f.s2_lambda) * std::sqrt(2.0 * std::numbers::pi));
}

/// Residuals of the three large-lambda expansions at a given lambda.
struct ExpansionResiduals {
    double mean;     ///< lambda m - log2(lambda) - A(theta)
    double log_phi;  ///< log phi_J + (log lambda)^2 / (2 log 2) - (log lambda)/2 - B(theta)
    double variance; ///< S^2 - log(lambda) / (lambda^2 log 2)
};

inline ExpansionResiduals expansion_residuals(double lambda)
{
    const SaddleFrame f = saddle_quantities(lambda);
    const double ll = std::log(lambda);
    ExpansionResiduals r;
    r.mean = lambda * f.m_lambda - ll / detail::kLog2 - a_term(f.theta);
    r.log_phi = f.log_phi_J + ll * ll / (2.0 * detail::kLog2) - 0.5 * ll - b_term(f.theta);
    r.variance = f.s2_lambda - ll / (lambda * lambda * detail::kLog2);
    return r;
}

} // namespace carousel::asym
