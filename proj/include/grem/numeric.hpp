#pragma once

#include <cstddef>
#include <vector>

namespace grem {

/// Kahan compensated accumulator; keeps long sums accurate to a few ulps.
struct kahan_accumulator {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }

    double value() const { return sum; }
};

inline double kahan_total(const std::vector<double>& v) {
    kahan_accumulator acc;
    for (double x : v) acc.add(x);
    return acc.value();
}

inline double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : kahan_total(v) / static_cast<double>(v.size());
}

/// Unbiased sample variance.
inline double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    kahan_accumulator acc;
    for (double x : v) acc.add((x - m) * (x - m));
    return acc.value() / static_cast<double>(v.size() - 1);
}

} // namespace grem
