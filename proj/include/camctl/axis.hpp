#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "camctl/error.hpp"

namespace camctl {

// Uniformly sampled physical parameter range. Sample i (1-based) sits at
// a + (b-a)/n * (i-1): the low end is hit exactly, the high end never is.
struct AxisSpec {
    double a = 0.0;
    double b = 0.0;
    std::size_t n = 8;
    std::string unit;  // "ms" or "dB"

    bool operator==(const AxisSpec&) const = default;
};

inline void ensure_valid_axis(const AxisSpec& axis) {
    if (!(std::isfinite(axis.a) && std::isfinite(axis.b) && axis.a < axis.b) || axis.n < 2) {
        throw InvalidInput("invalid axis: a=" + std::to_string(axis.a) +
                           " b=" + std::to_string(axis.b) + " n=" + std::to_string(axis.n));
    }
}

inline double axis_value(const AxisSpec& axis, std::size_t i) {
    ensure_valid_axis(axis);
    if (i < 1 || i > axis.n) {
        throw InvalidInput("axis index " + std::to_string(i) + " out of range [1," +
                           std::to_string(axis.n) + "]");
    }
    return axis.a + (axis.b - axis.a) / static_cast<double>(axis.n) * static_cast<double>(i - 1);
}

// Index of the sample closest to v; ties go to the lower index and values
// outside the range clamp to the first or last sample.
inline std::size_t axis_nearest_index(const AxisSpec& axis, double v) {
    ensure_valid_axis(axis);
    if (!std::isfinite(v)) throw InvalidInput("axis_nearest_index: non-finite value");
    std::size_t best = 1;
    double best_dist = std::abs(v - axis_value(axis, 1));
    for (std::size_t i = 2; i <= axis.n; ++i) {
        const double d = std::abs(v - axis_value(axis, i));
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    return best;
}

inline double axis_max_sample(const AxisSpec& axis) { return axis_value(axis, axis.n); }

// Flea3-style ranges used throughout as defaults.
inline AxisSpec default_shutter_axis(std::size_t n = 8) { return {0.016, 24.973, n, "ms"}; }
inline AxisSpec default_gain_axis(std::size_t n = 8) { return {0.0, 24.014, n, "dB"}; }

}  // namespace camctl
