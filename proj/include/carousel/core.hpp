#pragma once

// Route geometry for a single picker on a circle of circumference 1.
//
// The picker starts at 0 and moves with unit speed. Positions increase in the
// counterclockwise direction. An optimal route changes direction at most
// once, so every candidate route is described by the number k of items
// collected before the turn and the direction in which the route ends.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "carousel/detail/numeric.hpp"

namespace carousel {

enum class Direction { clockwise, counterclockwise };

inline Direction opposite(Direction d)
{
    return d == Direction::clockwise ? Direction::counterclockwise : Direction::clockwise;
}

inline const char* to_string(Direction d)
{
    return d == Direction::clockwise ? "clockwise" : "counterclockwise";
}

/**
 * @brief Item positions on the unit circle and the spacings they induce.
 *
 * With U_{0:n} = 0 and U_{n+1:n} = 1, spacing i (0-based) is
 * sorted[i] - sorted[i-1]; there are n + 1 of them and they sum to 1.
 */
class CircleInstance {
public:
    CircleInstance() : spacings_{1.0} {}

    static CircleInstance from_positions(std::vector<double> positions)
    {
        for (double u : positions) {
            if (!(u >= 0.0 && u < 1.0))
                throw std::invalid_argument("item position outside [0, 1): " + std::to_string(u));
        }
        CircleInstance inst;
        inst.positions_ = std::move(positions);
        inst.sorted_ = inst.positions_;
        std::sort(inst.sorted_.begin(), inst.sorted_.end());
        inst.spacings_.resize(inst.sorted_.size() + 1);
        double prev = 0.0;
        for (std::size_t i = 0; i < inst.sorted_.size(); ++i) {
            inst.spacings_[i] = inst.sorted_[i] - prev;
            prev = inst.sorted_[i];
        }
        inst.spacings_.back() = 1.0 - prev;
        return inst;
    }

    /// Builds the instance whose n + 1 spacings are given (they must sum to 1).
    static CircleInstance from_spacings(std::span<const double> spacings)
    {
        if (spacings.empty())
            throw std::invalid_argument("at least one spacing is required");
        detail::CompensatedSum total;
        for (double d : spacings) {
            if (!(d >= 0.0))
                throw std::invalid_argument("spacings must be nonnegative");
            total += d;
        }
        if (std::abs(total.value() - 1.0) > 1e-12)
            throw std::invalid_argument("spacings must sum to 1");
        std::vector<double> positions;
        positions.reserve(spacings.size() - 1);
        detail::CompensatedSum acc;
        for (std::size_t i = 0; i + 1 < spacings.size(); ++i) {
            acc += spacings[i];
            positions.push_back(std::min(acc.value(), std::nextafter(1.0, 0.0)));
        }
        return from_positions(std::move(positions));
    }

    std::size_t size() const noexcept { return positions_.size(); }
    std::span<const double> positions() const noexcept { return positions_; }
    std::span<const double> sorted_positions() const noexcept { return sorted_; }
    std::span<const double> spacings() const noexcept { return spacings_; }

    /// The mirror image u -> (1 - u) mod 1.
    CircleInstance reflected() const
    {
        std::vector<double> mirrored;
        mirrored.reserve(positions_.size());
        for (double u : positions_)
            mirrored.push_back(u == 0.0 ? 0.0 : 1.0 - u);
        return from_positions(std::move(mirrored));
    }

private:
    std::vector<double> positions_;
    std::vector<double> sorted_;
    std::vector<double> spacings_;
};

/// A one-turn route: k items collected before the single turn (0 = no turn).
struct RoutePlan {
    std::size_t turn_count = 0;
    Direction final_direction = Direction::clockwise;
    double travel_time = 0.0;
};

/// Result of a restricted-turn strategy; `clamped` is set when the requested
/// turn limit exceeded n - 1 and was reduced.
struct MstepResult {
    RoutePlan plan;
    bool clamped = false;
};

/// Independent unit-mean exponentials X_1..X_k and their partial sums S_0..S_k.
struct ExpSample {
    std::vector<double> x;
    std::vector<double> partial_sums;

    static ExpSample from_variates(std::vector<double> variates)
    {
        ExpSample s;
        s.partial_sums.reserve(variates.size() + 1);
        s.partial_sums.push_back(0.0);
        double acc = 0.0;
        for (double v : variates) {
            if (!(v > 0.0))
                throw std::invalid_argument("exponential variates must be positive");
            acc += v;
            s.partial_sums.push_back(acc);
        }
        s.x = std::move(variates);
        return s;
    }

    /// Normalized spacings X_i / S_{k}, which are distributed as uniform spacings.
    std::vector<double> normalized() const
    {
        std::vector<double> d(x.size());
        const double total = partial_sums.back();
        for (std::size_t i = 0; i < x.size(); ++i)
            d[i] = x[i] / total;
        return d;
    }
};

namespace detail {

// Items at position 0 are collected at the start and do not count as turns.
inline std::span<const double> positive_items(std::span<const double> sorted)
{
    auto first = std::upper_bound(sorted.begin(), sorted.end(), 0.0);
    return sorted.subspan(static_cast<std::size_t>(first - sorted.begin()));
}

// Scans the two gain families with at most `max_k_cw` items collected before
// a turn that ends clockwise and `max_k_ccw` for counterclockwise endings.
// Ties go to the smaller k, then to the clockwise ending.
inline RoutePlan scan_one_turn_routes(std::span<const double> sorted_all, std::size_t max_k_cw,
                                      std::size_t max_k_ccw)
{
    const auto u = positive_items(sorted_all);
    const std::size_t n = u.size();
    if (n == 0)
        return RoutePlan{0, Direction::clockwise, 0.0};

    // U_i with U_0 = 0 and U_{n+1} = 1, i in [0, n + 1].
    auto at = [&](std::size_t i) -> double {
        if (i == 0)
            return 0.0;
        if (i == n + 1)
            return 1.0;
        return u[i - 1];
    };

    double best_gain = -std::numeric_limits<double>::infinity();
    RoutePlan best;
    const std::size_t limit = std::max(max_k_cw, max_k_ccw);
    for (std::size_t k = 0; k <= limit && k < n; ++k) {
        if (k <= max_k_cw) {
            // Skip spacing D_{k+1}: forward to U_k, back through 0 to U_{k+1}.
            const double gain = (at(k + 1) - at(k)) - at(k);
            if (gain > best_gain) {
                best_gain = gain;
                best = RoutePlan{k, Direction::clockwise, 0.0};
            }
        }
        if (k <= max_k_ccw) {
            // Skip spacing D_{n+1-k}: backward to U_{n+1-k}, then forward to U_{n-k}.
            const std::size_t i = n + 1 - k;
            const double gain = (at(i) - at(i - 1)) - (1.0 - at(i));
            if (gain > best_gain) {
                best_gain = gain;
                best = RoutePlan{k, Direction::counterclockwise, 0.0};
            }
        }
    }
    best.travel_time = 1.0 - best_gain;
    return best;
}

} // namespace detail

/// Minimal travel time over all one-turn routes, with the route achieving it.
/// An empty instance has travel time 0.
inline RoutePlan optimal_travel_time(const CircleInstance& inst)
{
    const std::size_t n = inst.size();
    if (n == 0)
        return RoutePlan{};
    return detail::scan_one_turn_routes(inst.sorted_positions(), n - 1, n - 1);
}

/// Best of the 2(m + 1) routes that turn after at most m collected items.
inline MstepResult mstep_travel_time(const CircleInstance& inst, std::size_t m)
{
    const std::size_t n = inst.size();
    MstepResult r;
    if (n == 0)
        return r;
    if (m > n - 1) {
        m = n - 1;
        r.clamped = true;
    }
    r.plan = detail::scan_one_turn_routes(inst.sorted_positions(), m, m);
    return r;
}

/**
 * @brief Travel time of the route that splits the items into two disjoint
 * halves: at most m items before a clockwise-ending turn and at most m'
 * before a counterclockwise-ending one, with m + m' = n - 1.
 *
 * For odd n, m = m' = (n - 1) / 2; for even n, m = n / 2 and m' = n / 2 - 1.
 * It upper-bounds the optimal time and coincides with it unless the optimal
 * route turns late.
 */
inline RoutePlan split_travel_time(const CircleInstance& inst)
{
    const std::size_t n = inst.size();
    if (n == 0)
        return RoutePlan{};
    const std::size_t m = n / 2;
    const std::size_t m_prime = (n - 1) - m;
    return detail::scan_one_turn_routes(inst.sorted_positions(), m, m_prime);
}

/**
 * @brief Exhaustive enumeration of one-turn routes by direct geometry.
 *
 * For each initial direction and each k in [0, max_turn], the picker walks to
 * the k-th item in that direction, reverses, and walks until every remaining
 * item is covered. Coverage is checked item by item, so this shares nothing
 * with the gain formulas used by optimal_travel_time.
 */
inline double brute_force_route_oracle(const CircleInstance& inst,
                                       std::size_t max_turn = std::numeric_limits<std::size_t>::max())
{
    std::vector<double> items;
    for (double u : inst.positions())
        if (u > 0.0)
            items.push_back(u);
    const std::size_t n = items.size();
    if (n == 0)
        return 0.0;
    max_turn = std::min(max_turn, n - 1);

    double best = std::numeric_limits<double>::infinity();
    for (Direction initial : {Direction::counterclockwise, Direction::clockwise}) {
        auto ahead = [&](double x) { return initial == Direction::counterclockwise ? x : 1.0 - x; };
        auto behind = [&](double x) { return initial == Direction::counterclockwise ? 1.0 - x : x; };

        std::vector<double> reach;
        reach.reserve(n);
        for (double x : items)
            reach.push_back(ahead(x));
        std::sort(reach.begin(), reach.end());

        for (std::size_t k = 0; k <= max_turn; ++k) {
            const double turn_at = k == 0 ? 0.0 : reach[k - 1];
            double back = 0.0;
            bool uncovered = false;
            for (double x : items) {
                if (ahead(x) > turn_at) {
                    uncovered = true;
                    back = std::max(back, behind(x));
                }
            }
            const double length = uncovered ? 2.0 * turn_at + back : turn_at;
            best = std::min(best, length);
        }
    }
    return best;
}

/**
 * @brief Greedy route that always moves to the closest uncollected item.
 *
 * The collected items always form an arc containing 0, so the two candidates
 * are the first uncollected item on either side. Exact distance ties go
 * counterclockwise.
 */
inline double nearest_item_travel_time(const CircleInstance& inst)
{
    const auto u = detail::positive_items(inst.sorted_positions());
    if (u.empty())
        return 0.0;
    std::size_t lo = 0;            // smallest uncollected index
    std::size_t hi = u.size() - 1; // largest uncollected index
    double here = 0.0;
    double total = 0.0;
    std::size_t remaining = u.size();
    while (remaining > 0) {
        double ccw = u[lo] - here;
        if (ccw < 0.0)
            ccw += 1.0;
        double cw = here - u[hi];
        if (cw < 0.0)
            cw += 1.0;
        if (ccw <= cw) {
            total += ccw;
            here = u[lo];
            ++lo;
        } else {
            total += cw;
            here = u[hi];
            if (hi > 0)
                --hi;
        }
        --remaining;
    }
    return total;
}

/**
 * @brief Worst-case gain alpha_{n+1}: no configuration of n items needs more
 * than 1 - alpha_{n+1} travel time.
 *
 * @param index the subscript n + 1 (must be at least 2).
 */
inline double alpha(std::size_t index)
{
    if (index < 2)
        throw std::domain_error("alpha index must be at least 2 (n >= 1)");
    const std::size_t n = index - 1;
    const int m = static_cast<int>(n / 2);
    if (n % 2 == 0)
        return 1.0 / (std::ldexp(1.0, m + 1) + std::ldexp(1.0, m) - 2.0);
    return 1.0 / (2.0 * std::ldexp(1.0, m + 1) - 2.0);
}

/// The configuration d_j = d_{n+2-j} = 2^{j-1} alpha_{n+1} on which the worst
/// case 1 - alpha_{n+1} is attained.
inline CircleInstance tightness_instance(std::size_t n)
{
    if (n < 1)
        throw std::domain_error("tightness_instance requires n >= 1");
    const double a = alpha(n + 1);
    std::vector<double> d(n + 1, 0.0);
    const std::size_t half = n / 2; // m, with n = 2m or 2m + 1
    for (std::size_t j = 1; j <= half + 1; ++j) {
        const double v = std::ldexp(a, static_cast<int>(j - 1));
        d[j - 1] = v;
        d[n + 1 - j] = v;
    }
    return CircleInstance::from_spacings(d);
}

} // namespace carousel
