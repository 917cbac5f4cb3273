#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "camctl/error.hpp"
#include "camctl/numfmt.hpp"
#include "camctl/perf_table.hpp"

namespace camctl {

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        std::string_view line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = pos + 1;
    }
    return lines;
}

inline bool valid_identifier(std::string_view id) {
    if (id.empty()) return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

inline std::string_view expect_key(std::string_view token, std::string_view key,
                                   std::size_t line_no) {
    if (token.size() < key.size() + 1 || token.substr(0, key.size()) != key ||
        token[key.size()] != '=') {
        throw ParseError(line_no, "expected '" + std::string(key) + "=...'");
    }
    return token.substr(key.size() + 1);
}

inline AxisSpec parse_axis_line(std::string_view line, std::string_view key,
                                std::string_view unit, std::size_t line_no) {
    const std::string_view body = expect_key(line, key, line_no);
    const auto parts = split(body, ',');
    if (parts.size() != 4) throw ParseError(line_no, "axis needs 'a,b,n,unit'");
    AxisSpec axis;
    axis.a = parse_double(parts[0], "axis low");
    axis.b = parse_double(parts[1], "axis high");
    const long n = parse_long(parts[2], "axis sample count");
    if (n < 2) throw ParseError(line_no, "axis sample count must be >= 2");
    axis.n = static_cast<std::size_t>(n);
    if (parts[3] != unit) {
        throw ParseError(line_no, "axis unit must be '" + std::string(unit) + "'");
    }
    axis.unit = std::string(unit);
    ensure_valid_axis(axis);
    return axis;
}

}  // namespace detail

// Serializes a table to the versioned text format. Grid entries carry
// exactly six fractional digits; header reals use the shortest decimal
// that round-trips, so saving the same table twice is byte-identical.
inline std::string save_table(const PerformanceTable& t) {
    validate_table(t);
    if (!detail::valid_identifier(t.algorithm_id)) {
        throw InvalidInput("algorithm id must be nonempty [A-Za-z0-9_.-]: '" + t.algorithm_id +
                           "'");
    }
    std::string out = "perftable v1\n";
    out += "algorithm=" + t.algorithm_id + " lux=" + shortest(t.illumination) + " smoothing=";
    out += t.smoothing_sigma ? "gaussian:" + shortest(*t.smoothing_sigma) : std::string("none");
    out += "\n";
    out += "shutter=" + shortest(t.shutter_axis.a) + "," + shortest(t.shutter_axis.b) + "," +
           std::to_string(t.shutter_axis.n) + ",ms\n";
    out += "gain=" + shortest(t.gain_axis.a) + "," + shortest(t.gain_axis.b) + "," +
           std::to_string(t.gain_axis.n) + ",dB\n";
    const std::size_t n = t.n();
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            out += fixed6(t.at(i, j));
            out += (j == n) ? '\n' : '\t';
        }
    }
    return out;
}

// Parses the v1 format back. Lines after the grid starting with '#' are
// tolerated and ignored (the eval command appends a missing-cell note).
inline PerformanceTable load_table(std::string_view bytes) {
    const auto lines = detail::split_lines(bytes);
    if (lines.empty() || lines[0] != "perftable v1") {
        throw ParseError(1, "bad header: expected 'perftable v1'");
    }
    if (lines.size() < 4) throw ParseError(lines.size(), "truncated table file");

    const auto meta = detail::split(lines[1], ' ');
    if (meta.size() != 3) throw ParseError(2, "expected 'algorithm=... lux=... smoothing=...'");
    PerformanceTable t;
    t.algorithm_id = std::string(detail::expect_key(meta[0], "algorithm", 2));
    if (!detail::valid_identifier(t.algorithm_id)) throw ParseError(2, "bad algorithm id");
    t.illumination = parse_double(detail::expect_key(meta[1], "lux", 2), "lux");
    const std::string_view smoothing = detail::expect_key(meta[2], "smoothing", 2);
    if (smoothing == "none") {
        t.smoothing_sigma.reset();
    } else if (smoothing.substr(0, 9) == "gaussian:") {
        t.smoothing_sigma = parse_double(smoothing.substr(9), "smoothing sigma");
    } else {
        throw ParseError(2, "smoothing must be 'none' or 'gaussian:<sigma>'");
    }

    t.shutter_axis = detail::parse_axis_line(lines[2], "shutter", "ms", 3);
    t.gain_axis = detail::parse_axis_line(lines[3], "gain", "dB", 4);
    if (t.shutter_axis.n != t.gain_axis.n) throw ParseError(4, "axes sample counts differ");

    const std::size_t n = t.shutter_axis.n;
    if (lines.size() < 4 + n) throw ParseError(lines.size(), "grid truncated");
    t.values.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t line_no = 5 + i;
        const auto fields = detail::split(lines[4 + i], '\t');
        if (fields.size() != n) {
            throw ParseError(line_no, "malformed grid row: expected " + std::to_string(n) +
                                          " columns, got " + std::to_string(fields.size()));
        }
        for (const auto& f : fields) {
            const double v = parse_double(f, "grid entry");
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ParseError(line_no, "grid entry " + std::string(f) + " outside [0,1]");
            }
            t.values.push_back(v);
        }
    }
    for (std::size_t i = 4 + n; i < lines.size(); ++i) {
        if (lines[i].empty() || lines[i][0] == '#') continue;
        throw ParseError(i + 1, "unexpected content after grid");
    }
    validate_table(t);
    return t;
}

}  // namespace camctl
