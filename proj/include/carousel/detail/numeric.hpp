#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

namespace carousel::detail {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double pow2(double e) { return std::exp2(e); }

/// 2^j - 1 for integer j, exact while 2^j fits the mantissa.
inline double pow2_minus_one(int j) { return std::ldexp(1.0, j) - 1.0; }

/// c_j = 1 / (2^j - 1).
inline double weight_c(int j) { return 1.0 / pow2_minus_one(j); }

inline double positive_part(double x) noexcept { return x > 0.0 ? x : 0.0; }

inline double fractional_part(double x) { return x - std::floor(x); }

inline bool nearly_equal(double a, double b, double tol)
{
    return std::abs(a - b) <= tol;
}

} // namespace carousel::detail
