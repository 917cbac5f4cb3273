#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "camctl/error.hpp"
#include "camctl/metrics.hpp"
#include "camctl/numfmt.hpp"
#include "camctl/perf_table.hpp"
#include "camctl/table_io.hpp"

namespace camctl {

// One captured image: where it sits on the acquisition grid and what it shows.
struct ManifestRow {
    std::string image_id;
    std::string object_class;
    double lux = 0.0;
    std::size_t shutter_idx = 0;  // 1-based grid indices
    std::size_t gain_idx = 0;
    std::optional<std::string> path;
};

struct DatasetSplit {
    std::set<std::string> train;
    std::set<std::string> test;
};

namespace detail {

inline void expect_header(std::string_view line, std::string_view want) {
    if (line != want) {
        throw ParseError(1, "bad header: expected '" + std::string(want) + "', got '" +
                                std::string(line) + "'");
    }
}

inline BoundingBox parse_box(const std::vector<std::string_view>& f, std::size_t first,
                             std::size_t line_no) {
    BoundingBox b;
    b.x_min = parse_double(f[first], "x_min");
    b.y_min = parse_double(f[first + 1], "y_min");
    b.x_max = parse_double(f[first + 2], "x_max");
    b.y_max = parse_double(f[first + 3], "y_max");
    if (!b.valid()) {
        throw ParseError(line_no, "degenerate box (" + std::string(f[first]) + "," +
                                      std::string(f[first + 1]) + "," + std::string(f[first + 2]) +
                                      "," + std::string(f[first + 3]) + ")");
    }
    return b;
}

}  // namespace detail

inline constexpr std::string_view kManifestHeader =
    "image_id\tobject_class\tlux\tshutter_idx\tgain_idx\tpath";
inline constexpr std::string_view kDetectionsHeader =
    "image_id\tclass\tscore\tx_min\ty_min\tx_max\ty_max";
inline constexpr std::string_view kAnnotationsHeader =
    "image_id\tclass\tx_min\ty_min\tx_max\ty_max";

inline std::vector<ManifestRow> parse_manifest(std::string_view bytes, std::size_t grid_n = 8) {
    const auto lines = detail::split_lines(bytes);
    if (lines.empty()) throw ParseError(1, "empty manifest");
    detail::expect_header(lines[0], kManifestHeader);
    std::vector<ManifestRow> rows;
    std::map<std::string, std::size_t> first_line;  // image_id -> line number
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        const auto f = detail::split(lines[li], '\t');
        if (f.size() != 6) {
            throw ParseError(line_no, "expected 6 tab-separated fields, got " +
                                          std::to_string(f.size()));
        }
        try {
            ManifestRow row;
            row.image_id = std::string(f[0]);
            row.object_class = std::string(f[1]);
            if (row.image_id.empty()) throw ParseError("empty image_id");
            if (row.object_class.empty()) throw ParseError("empty object_class");
            row.lux = parse_double(f[2], "lux");
            if (!(row.lux > 0.0) || !std::isfinite(row.lux)) {
                throw ParseError("lux must be positive");
            }
            const long si = parse_long(f[3], "shutter_idx");
            const long gi = parse_long(f[4], "gain_idx");
            if (si < 1 || static_cast<std::size_t>(si) > grid_n) {
                throw ParseError("shutter_idx " + std::to_string(si) + " out of range [1," +
                                 std::to_string(grid_n) + "]");
            }
            if (gi < 1 || static_cast<std::size_t>(gi) > grid_n) {
                throw ParseError("gain_idx " + std::to_string(gi) + " out of range [1," +
                                 std::to_string(grid_n) + "]");
            }
            row.shutter_idx = static_cast<std::size_t>(si);
            row.gain_idx = static_cast<std::size_t>(gi);
            if (!f[5].empty()) row.path = std::string(f[5]);
            const auto [it, fresh] = first_line.emplace(row.image_id, line_no);
            if (!fresh) {
                throw ParseError("duplicate image_id '" + row.image_id + "' (first seen at line " +
                                 std::to_string(it->second) + ")");
            }
            rows.push_back(std::move(row));
        } catch (const ParseError& e) {
            if (e.line() != 0) throw;
            throw ParseError(line_no, e.what());
        }
    }
    return rows;
}

inline std::vector<Detection> parse_detections(std::string_view bytes) {
    const auto lines = detail::split_lines(bytes);
    if (lines.empty()) throw ParseError(1, "empty detections file");
    detail::expect_header(lines[0], kDetectionsHeader);
    std::vector<Detection> dets;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        const auto f = detail::split(lines[li], '\t');
        if (f.size() != 7) {
            throw ParseError(line_no, "expected 7 tab-separated fields, got " +
                                          std::to_string(f.size()));
        }
        try {
            Detection d;
            d.image_id = std::string(f[0]);
            d.class_label = std::string(f[1]);
            if (d.image_id.empty()) throw ParseError("empty image_id");
            if (d.class_label.empty()) throw ParseError("empty class");
            d.score = parse_double(f[2], "score");
            if (!std::isfinite(d.score)) throw ParseError("non-finite score");
            d.box = detail::parse_box(f, 3, line_no);
            dets.push_back(std::move(d));
        } catch (const ParseError& e) {
            if (e.line() != 0) throw;
            throw ParseError(line_no, e.what());
        }
    }
    return dets;
}

inline std::vector<Annotation> parse_annotations(std::string_view bytes) {
    const auto lines = detail::split_lines(bytes);
    if (lines.empty()) throw ParseError(1, "empty annotations file");
    detail::expect_header(lines[0], kAnnotationsHeader);
    std::vector<Annotation> anns;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        const auto f = detail::split(lines[li], '\t');
        if (f.size() != 6) {
            throw ParseError(line_no, "expected 6 tab-separated fields, got " +
                                          std::to_string(f.size()));
        }
        try {
            Annotation a;
            a.image_id = std::string(f[0]);
            a.class_label = std::string(f[1]);
            if (a.image_id.empty()) throw ParseError("empty image_id");
            if (a.class_label.empty()) throw ParseError("empty class");
            a.box = detail::parse_box(f, 2, line_no);
            anns.push_back(std::move(a));
        } catch (const ParseError& e) {
            if (e.line() != 0) throw;
            throw ParseError(line_no, e.what());
        }
    }
    return anns;
}

inline std::string write_manifest(const std::vector<ManifestRow>& rows) {
    std::string out(kManifestHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += r.image_id + '\t' + r.object_class + '\t' + fixed6(r.lux) + '\t' +
               std::to_string(r.shutter_idx) + '\t' + std::to_string(r.gain_idx) + '\t' +
               (r.path ? *r.path : "") + '\n';
    }
    return out;
}

inline std::string write_detections(const std::vector<Detection>& dets) {
    std::string out(kDetectionsHeader);
    out += '\n';
    for (const auto& d : dets) {
        out += d.image_id + '\t' + d.class_label + '\t' + fixed6(d.score) + '\t' +
               fixed6(d.box.x_min) + '\t' + fixed6(d.box.y_min) + '\t' + fixed6(d.box.x_max) +
               '\t' + fixed6(d.box.y_max) + '\n';
    }
    return out;
}

inline std::string write_annotations(const std::vector<Annotation>& anns) {
    std::string out(kAnnotationsHeader);
    out += '\n';
    for (const auto& a : anns) {
        out += a.image_id + '\t' + a.class_label + '\t' + fixed6(a.box.x_min) + '\t' +
               fixed6(a.box.y_min) + '\t' + fixed6(a.box.x_max) + '\t' + fixed6(a.box.y_max) +
               '\n';
    }
    return out;
}

// Buckets detections and annotations by grid cell for one illumination
// level. Every input referencing an image of that level lands in exactly
// one cell; anything referencing an unknown image is an error. Cells come
// out sorted by (shutter_idx, gain_idx).
inline std::vector<CellRuns> group_cells(const std::vector<ManifestRow>& manifest,
                                         const std::vector<Detection>& detections,
                                         const std::vector<Annotation>& annotations,
                                         double lux_level) {
    std::map<std::string, const ManifestRow*> by_id;
    for (const auto& row : manifest) by_id.emplace(row.image_id, &row);

    std::map<std::pair<std::size_t, std::size_t>, CellRuns> cells;
    for (const auto& row : manifest) {
        if (row.lux != lux_level) continue;
        auto& cell = cells[{row.shutter_idx, row.gain_idx}];
        cell.shutter_idx = row.shutter_idx;
        cell.gain_idx = row.gain_idx;
    }
    for (const auto& d : detections) {
        const auto it = by_id.find(d.image_id);
        if (it == by_id.end()) {
            throw InvalidInput("detection references unknown image_id '" + d.image_id + "'");
        }
        const ManifestRow& row = *it->second;
        if (row.lux != lux_level) continue;
        cells[{row.shutter_idx, row.gain_idx}].detections.push_back(d);
    }
    for (const auto& a : annotations) {
        const auto it = by_id.find(a.image_id);
        if (it == by_id.end()) {
            throw InvalidInput("annotation references unknown image_id '" + a.image_id + "'");
        }
        const ManifestRow& row = *it->second;
        if (row.lux != lux_level) continue;
        cells[{row.shutter_idx, row.gain_idx}].annotations.push_back(a);
    }

    std::vector<CellRuns> out;
    out.reserve(cells.size());
    for (auto& [key, cell] : cells) {
        cell.shutter_idx = key.first;
        cell.gain_idx = key.second;
        out.push_back(std::move(cell));
    }
    return out;
}

inline void validate_split(const std::vector<ManifestRow>& manifest, const DatasetSplit& split) {
    for (const auto& id : split.train) {
        if (split.test.count(id)) throw InvalidInput("split not disjoint: '" + id + "'");
    }
    for (const auto& row : manifest) {
        if (!split.train.count(row.image_id) && !split.test.count(row.image_id)) {
            throw InvalidInput("split does not cover image_id '" + row.image_id + "'");
        }
    }
}

}  // namespace camctl
