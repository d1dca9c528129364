#pragma once

// Seeded Monte Carlo engine.
//
// A run of `reps` replications is cut into chunks of `chunk_size`; chunk c
// draws from stream_for(seed, c) and writes its results into its own slice of
// the output. Workers pick chunks round-robin, and all reductions run over
// the output in replication order, so every estimate is a pure function of
// (seed, chunk_size) and does not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "carousel/core.hpp"
#include "carousel/limit.hpp"
#include "carousel/random.hpp"

namespace carousel::sim {

struct BatchLayout {
    std::size_t workers = 1;
    std::size_t chunk_size = 1u << 14;
};

struct McSummary {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    BatchLayout layout;
};

/// Sorted sample with F(t) = fraction of values <= t.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> values) : values_(std::move(values))
    {
        std::sort(values_.begin(), values_.end());
    }

    double operator()(double t) const
    {
        if (values_.empty())
            return 0.0;
        const auto it = std::upper_bound(values_.begin(), values_.end(), t);
        return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
    }

    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

/// Which strategy the picker follows.
struct Strategy {
    enum class Kind { optimal, mstep, nearest, split };
    Kind kind = Kind::optimal;
    std::size_t m = 0;

    static Strategy optimal() { return {Kind::optimal, 0}; }
    static Strategy mstep(std::size_t m) { return {Kind::mstep, m}; }
    static Strategy nearest() { return {Kind::nearest, 0}; }
    static Strategy split() { return {Kind::split, 0}; }

    /// Parses "optimal", "nearest", "split" or "mstep:<m>".
    static Strategy parse(const std::string& text)
    {
        if (text == "optimal")
            return optimal();
        if (text == "nearest")
            return nearest();
        if (text == "split")
            return split();
        if (text.rfind("mstep:", 0) == 0) {
            const std::string digits = text.substr(6);
            if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
                throw std::invalid_argument("bad m-step strategy: " + text);
            return mstep(std::stoul(digits));
        }
        throw std::invalid_argument("unknown strategy: " + text);
    }

    std::string to_string() const
    {
        switch (kind) {
        case Kind::optimal:
            return "optimal";
        case Kind::mstep:
            return "mstep:" + std::to_string(m);
        case Kind::nearest:
            return "nearest";
        case Kind::split:
            return "split";
        }
        return "unknown";
    }
};

/// Route outcome of one strategy on one instance.
inline RoutePlan run_strategy(const CircleInstance& inst, const Strategy& s)
{
    switch (s.kind) {
    case Strategy::Kind::optimal:
        return optimal_travel_time(inst);
    case Strategy::Kind::mstep:
        return mstep_travel_time(inst, s.m).plan;
    case Strategy::Kind::split:
        return split_travel_time(inst);
    case Strategy::Kind::nearest:
        return RoutePlan{0, Direction::clockwise, nearest_item_travel_time(inst)};
    }
    throw std::logic_error("unreachable strategy");
}

/// n i.i.d. uniform positions on [0, 1).
inline CircleInstance sample_instance(std::size_t n, Xoshiro256& rng)
{
    if (n < 1)
        throw std::domain_error("sample_instance: n must be at least 1");
    std::vector<double> positions(n);
    for (auto& u : positions)
        u = uniform01(rng);
    return CircleInstance::from_positions(std::move(positions));
}

/// k unit-mean exponentials and their partial sums.
inline ExpSample sample_exponentials(std::size_t k, Xoshiro256& rng)
{
    std::vector<double> x(k);
    for (auto& v : x)
        v = exponential1(rng);
    return ExpSample::from_variates(std::move(x));
}

namespace detail {

inline void validate_layout(const BatchLayout& layout)
{
    if (layout.workers < 1)
        throw std::invalid_argument("batch layout needs at least one worker");
    if (layout.chunk_size < 1)
        throw std::invalid_argument("batch layout needs a positive chunk size");
}

} // namespace detail

/// Start states of the per-chunk streams: jump^c of the seeded generator.
inline std::vector<Xoshiro256> chunk_streams(std::uint64_t seed, std::size_t chunks)
{
    std::vector<Xoshiro256> streams;
    streams.reserve(chunks);
    Xoshiro256 g(seed);
    for (std::size_t c = 0; c < chunks; ++c) {
        streams.push_back(g);
        g.jump();
    }
    return streams;
}

/// out[i] = sample(rng) where rng is the stream of the chunk holding i.
template <class Sample>
std::vector<double> sample_values(std::size_t reps, std::uint64_t seed, const BatchLayout& layout, Sample sample)
{
    detail::validate_layout(layout);
    std::vector<double> out(reps);
    const std::size_t chunks = (reps + layout.chunk_size - 1) / layout.chunk_size;
    const auto streams = chunk_streams(seed, chunks);
    const std::size_t workers = std::min(layout.workers, std::max<std::size_t>(chunks, 1));
    auto work = [&](std::size_t worker) {
        for (std::size_t c = worker; c < chunks; c += workers) {
            Xoshiro256 rng = streams[c];
            const std::size_t begin = c * layout.chunk_size;
            const std::size_t end = std::min(reps, begin + layout.chunk_size);
            for (std::size_t i = begin; i < end; ++i)
                out[i] = sample(rng);
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back(work, w);
        for (auto& t : pool)
            t.join();
    }
    return out;
}

/// Mean and standard error of a sample (two-pass, replication order).
inline McSummary summarize(const std::vector<double>& values, std::uint64_t seed, const BatchLayout& layout)
{
    if (values.size() < 2)
        throw std::invalid_argument("summarize: at least two replications are needed");
    double sum = 0.0;
    for (double v : values)
        sum += v;
    const double n = static_cast<double>(values.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return McSummary{mean, sd / std::sqrt(n), values.size(), seed, layout};
}

/// Travel times of `reps` random instances under a strategy.
inline std::vector<double> sample_travel_times(std::size_t n, const Strategy& strategy, std::size_t reps,
                                               std::uint64_t seed, const BatchLayout& layout = {})
{
    const double bound = 1.0 - alpha(n + 1);
    const bool check_bound = strategy.kind == Strategy::Kind::optimal;
    auto values = sample_values(reps, seed, layout, [&](Xoshiro256& rng) {
        return run_strategy(sample_instance(n, rng), strategy).travel_time;
    });
    if (check_bound) {
        for (double v : values)
            if (v > bound + 1e-12)
                throw std::logic_error("optimal travel time exceeded the worst-case bound 1 - alpha_{n+1}");
    }
    return values;
}

/// Mean travel time under a strategy; optimal runs also assert T_n <= 1 - alpha_{n+1}.
inline McSummary estimate_mean_travel_time(std::size_t n, const Strategy& strategy, std::size_t reps,
                                           std::uint64_t seed, const BatchLayout& layout = {})
{
    if (reps < 1000)
        throw std::invalid_argument("estimate_mean_travel_time: reps must be at least 1000");
    if (n < 1)
        throw std::domain_error("estimate_mean_travel_time: n must be at least 1");
    return summarize(sample_travel_times(n, strategy, reps, seed, layout), seed, layout);
}

struct TurnFrequency {
    std::size_t k = 0;
    double frequency = 0.0;
    double std_error = 0.0;
};

/**
 * @brief Empirical distribution of the turn count K.
 *
 * For m-step strategies the closed-form law needs 2m < n; that is enforced.
 */
inline std::vector<TurnFrequency> estimate_turn_count_pmf(std::size_t n, const Strategy& strategy,
                                                          std::size_t reps, std::uint64_t seed,
                                                          const BatchLayout& layout = {})
{
    if (strategy.kind == Strategy::Kind::nearest)
        throw std::invalid_argument("turn counts are not defined for the nearest-item strategy");
    if (strategy.kind == Strategy::Kind::mstep && 2 * strategy.m >= n)
        throw std::invalid_argument("m-step turn-count law requires 2m < n");
    if (reps < 2)
        throw std::invalid_argument("estimate_turn_count_pmf: reps must be at least 2");
    const auto ks = sample_values(reps, seed, layout, [&](Xoshiro256& rng) {
        return static_cast<double>(run_strategy(sample_instance(n, rng), strategy).turn_count);
    });
    std::vector<std::size_t> counts(n, 0);
    for (double k : ks)
        ++counts[static_cast<std::size_t>(k)];
    std::vector<TurnFrequency> pmf;
    const double r = static_cast<double>(reps);
    for (std::size_t k = 0; k < n; ++k) {
        const double p = static_cast<double>(counts[k]) / r;
        pmf.push_back(TurnFrequency{k, p, std::sqrt(p * (1.0 - p) / r)});
    }
    return pmf;
}

/// P(K = k) = 1 / (2^{k+1} - 2^{k-m}) for the m-step strategy with 2m < n.
inline double mstep_turn_probability(std::size_t k, std::size_t m)
{
    if (k > m)
        return 0.0;
    return 1.0 / (std::ldexp(1.0, static_cast<int>(k) + 1) -
                  std::ldexp(1.0, static_cast<int>(k) - static_cast<int>(m)));
}

// ---------------------------------------------------------------------------
// Distribution distances

/// sup_t |F_a(t) - F_b(t)| for two sorted samples.
inline double ks_two_sample(const std::vector<double>& a, const std::vector<double>& b)
{
    std::size_t i = 0, j = 0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Asymptotic two-sample KS critical value at level `level`.
inline double ks_critical_two_sample(std::size_t n1, std::size_t n2, double level = 0.01)
{
    const double c = std::sqrt(-0.5 * std::log(level / 2.0));
    const double a = static_cast<double>(n1), b = static_cast<double>(n2);
    return c * std::sqrt((a + b) / (a * b));
}

/// Asymptotic one-sample KS critical value at level `level`.
inline double ks_critical_one_sample(std::size_t n, double level = 0.01)
{
    return std::sqrt(-0.5 * std::log(level / 2.0)) / std::sqrt(static_cast<double>(n));
}

/// sup_t |F_n(t) - F(t)| against a continuous distribution function.
template <class Cdf>
double ks_one_sample(const EmpiricalCdf& ecdf, Cdf&& cdf)
{
    const auto& v = ecdf.values();
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Exponential identity

struct Lemma11Check {
    double ks_distance = 0.0;
    double critical_value = 0.0;
    std::vector<double> moment_gaps; ///< LHS minus RHS sample raw moments, orders 1..3
    double lhs_mean = 0.0;
    double rhs_mean = 0.0;
    double lhs_std_error = 0.0;
    double rhs_mean_exact = 0.0;
};

/**
 * @brief Samples both sides of
 *   max_{j<=m+1} {X_j - (1/q - 1) S_{j-1}}  =d  (1/q - 1) sum_{j<=m+1} q^j/(1 - q^j) X_j
 * from independent streams and compares them.
 */
inline Lemma11Check check_lemma11_identity(std::size_t m, double q, std::size_t reps, std::uint64_t seed,
                                           const BatchLayout& layout = {})
{
    if (!(q > 0.0 && q < 1.0))
        throw std::domain_error("check_lemma11_identity: q must lie in (0, 1)");
    const double r = 1.0 / q - 1.0;
    auto lhs = sample_values(reps, derive_seed(seed, 1), layout, [&](Xoshiro256& rng) {
        double best = -std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (std::size_t j = 1; j <= m + 1; ++j) {
            const double x = exponential1(rng);
            best = std::max(best, x - r * s);
            s += x;
        }
        return best;
    });
    std::vector<double> weights;
    double exact_mean = 0.0;
    for (std::size_t j = 1; j <= m + 1; ++j) {
        const double qj = std::pow(q, static_cast<double>(j));
        weights.push_back(r * qj / (1.0 - qj));
        exact_mean += weights.back();
    }
    auto rhs = sample_values(reps, derive_seed(seed, 2), layout, [&](Xoshiro256& rng) {
        double s = 0.0;
        for (double w : weights)
            s += w * exponential1(rng);
        return s;
    });

    Lemma11Check c;
    for (int order = 1; order <= 3; ++order) {
        double ml = 0.0, mr = 0.0;
        for (std::size_t i = 0; i < reps; ++i) {
            ml += std::pow(lhs[i], order);
            mr += std::pow(rhs[i], order);
        }
        c.moment_gaps.push_back((ml - mr) / static_cast<double>(reps));
    }
    const auto ls = summarize(lhs, seed, layout);
    c.lhs_mean = ls.estimate;
    c.lhs_std_error = ls.std_error;
    c.rhs_mean = summarize(rhs, seed, layout).estimate;
    c.rhs_mean_exact = exact_mean;
    std::sort(lhs.begin(), lhs.end());
    std::sort(rhs.begin(), rhs.end());
    c.ks_distance = ks_two_sample(lhs, rhs);
    c.critical_value = ks_critical_two_sample(reps, reps);
    return c;
}

// ---------------------------------------------------------------------------
// Limit functionals

enum class LimitFunctional {
    J,        ///< sum_j X_j / (2^j - 1)
    I_q,      ///< sum_j q^{j-1} X_j
    J_q,      ///< (1/q - 1) sum_j X_j / (q^{-j} - 1)
    limit_max ///< max of two independent copies of J
};

inline constexpr double kDefaultTailBound = 1e-10;

/**
 * @brief Samples a truncated series functional.
 *
 * The number of terms is the smallest N whose expected remainder is below
 * the tail bound, from the closed forms
 *   I^(q):  sum_{j>N} q^{j-1} = q^N / (1 - q),
 *   J^(q):  sum_{j>N} (1-q) q^{j-1} / (1 - q^j) <= q^N / (1 - q^{N+1}),
 * so the sampling cost is fixed in advance.
 */
class LimitSampler {
public:
    LimitSampler(LimitFunctional which, double q = 0.5, double tail_bound = kDefaultTailBound)
        : which_(which)
    {
        if (which == LimitFunctional::J || which == LimitFunctional::limit_max)
            q = 0.5;
        if (!(q > 0.0 && q < 1.0))
            throw std::domain_error("LimitSampler: q must lie in (0, 1)");
        if (!(tail_bound > 0.0))
            throw std::domain_error("LimitSampler: tail bound must be positive");
        const bool poisson = which == LimitFunctional::I_q;
        std::size_t terms = 1;
        for (;; ++terms) {
            const double qn = std::pow(q, static_cast<double>(terms));
            const double tail = poisson ? qn / (1.0 - q) : qn / (1.0 - qn * q);
            if (tail < tail_bound)
                break;
        }
        for (std::size_t j = 1; j <= terms; ++j) {
            const double qj1 = std::pow(q, static_cast<double>(j - 1));
            if (poisson)
                weights_.push_back(qj1);
            else
                weights_.push_back((1.0 - q) * qj1 / (1.0 - qj1 * q));
        }
    }

    std::size_t terms() const noexcept { return weights_.size(); }

    double operator()(Xoshiro256& rng) const
    {
        if (which_ == LimitFunctional::limit_max) {
            const double a = draw(rng);
            const double b = draw(rng);
            return std::max(a, b);
        }
        return draw(rng);
    }

private:
    double draw(Xoshiro256& rng) const
    {
        double s = 0.0;
        for (double w : weights_)
            s += w * exponential1(rng);
        return s;
    }

    LimitFunctional which_;
    std::vector<double> weights_;
};

inline double sample_limit_functional(LimitFunctional which, double q, double tail_bound, Xoshiro256& rng)
{
    return LimitSampler(which, q, tail_bound)(rng);
}

inline std::vector<double> sample_limit_values(LimitFunctional which, double q, std::size_t reps,
                                               std::uint64_t seed, const BatchLayout& layout = {},
                                               double tail_bound = kDefaultTailBound)
{
    const LimitSampler sampler(which, q, tail_bound);
    return sample_values(reps, seed, layout, [&](Xoshiro256& rng) { return sampler(rng); });
}

// ---------------------------------------------------------------------------
// Convergence to the limit law

/// sup-distance between the empirical law of (n + 1)(1 - T_n) and [P(t)]^2.
inline double check_convergence_to_limit(std::size_t n, std::size_t reps, std::uint64_t seed,
                                         const BatchLayout& layout = {})
{
    if (n < 4)
        throw std::domain_error("check_convergence_to_limit: n must be at least 4");
    auto times = sample_travel_times(n, Strategy::optimal(), reps, seed, layout);
    for (double& t : times)
        t = static_cast<double>(n + 1) * (1.0 - t);
    const EmpiricalCdf ecdf(std::move(times));
    return ks_one_sample(ecdf, [](double t) {
        const double p = limit::limit_cdf_absolute(t);
        return p * p;
    });
}

/// Two-sample KS distance between (n + 1)(1 - T_n^NI) and sampled I^(1/2).
inline double check_nearest_convergence(std::size_t n, std::size_t reps, std::uint64_t seed,
                                        const BatchLayout& layout = {})
{
    auto times = sample_travel_times(n, Strategy::nearest(), reps, derive_seed(seed, 1), layout);
    for (double& t : times)
        t = static_cast<double>(n + 1) * (1.0 - t);
    auto limit_values = sample_limit_values(LimitFunctional::I_q, 0.5, reps, derive_seed(seed, 2), layout);
    std::sort(times.begin(), times.end());
    std::sort(limit_values.begin(), limit_values.end());
    return ks_two_sample(times, limit_values);
}

/// Fraction of instances on which the split route differs from the optimal one.
inline double estimate_split_disagreement(std::size_t n, std::size_t reps, std::uint64_t seed,
                                          const BatchLayout& layout = {})
{
    const auto flags = sample_values(reps, seed, layout, [&](Xoshiro256& rng) {
        const auto inst = sample_instance(n, rng);
        return optimal_travel_time(inst).travel_time != split_travel_time(inst).travel_time ? 1.0 : 0.0;
    });
    double s = 0.0;
    for (double f : flags)
        s += f;
    return s / static_cast<double>(reps);
}

/**
 * @brief Mean of 1 - max{sum_{j<=m+1} c_j D_j, sum_{j<=m'+1} c_j D_{n+2-j}}
 * with c_j = 1/(2^j - 1), sampled from normalized exponentials.
 *
 * With m = m' and 2m < n this is the m-step travel time in distribution; with
 * m + m' = n - 1 it is the split-route travel time.
 */
inline McSummary estimate_mean_weighted_spacings(std::size_t n, std::size_t m, std::size_t m_prime,
                                                 std::size_t reps, std::uint64_t seed,
                                                 const BatchLayout& layout = {})
{
    if (m + m_prime > n - 1)
        throw std::invalid_argument("weighted spacing sums must not overlap (m + m' <= n - 1)");
    const auto values = sample_values(reps, seed, layout, [&](Xoshiro256& rng) {
        const auto e = sample_exponentials(n + 1, rng);
        const double total = e.partial_sums.back();
        double front = 0.0, back = 0.0;
        for (std::size_t j = 1; j <= m + 1; ++j)
            front += e.x[j - 1] / carousel::detail::pow2_minus_one(static_cast<int>(j));
        for (std::size_t j = 1; j <= m_prime + 1; ++j)
            back += e.x[n + 1 - j] / carousel::detail::pow2_minus_one(static_cast<int>(j));
        return 1.0 - std::max(front, back) / total;
    });
    return summarize(values, seed, layout);
}

} // namespace carousel::sim
