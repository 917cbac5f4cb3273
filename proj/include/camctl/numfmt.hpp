#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "camctl/error.hpp"

namespace camctl {

// Fixed 6 fractional digits, correctly rounded (ties to even under the
// default FP environment). This is the one formatting used for grid
// entries and all tab-separated numeric output, so files diff cleanly.
inline std::string fixed6(double v) {
    char buf[64];
    int n = std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

// Shortest decimal string that parses back to exactly the same double.
// Used for header fields (axis bounds, lux, sigma) where byte-stable
// round-tripping matters more than aligned columns.
inline std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Strict full-string double parse; rejects trailing garbage and empty input.
inline double parse_double(std::string_view s, const std::string& what) {
    double out = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError("bad " + what + ": '" + std::string(s) + "'");
    }
    return out;
}

inline long parse_long(std::string_view s, const std::string& what) {
    long out = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError("bad " + what + ": '" + std::string(s) + "'");
    }
    return out;
}

}  // namespace camctl
