#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "camctl/axis.hpp"
#include "camctl/error.hpp"
#include "camctl/metrics.hpp"

namespace camctl {

// The n x n AP grid for one (algorithm, illumination). Row index follows the
// shutter axis (longer shutter = larger row index), column index the gain
// axis; both are 1-based to keep them aligned with the sampling formula.
struct PerformanceTable {
    std::string algorithm_id;
    double illumination = 0.0;  // lux
    AxisSpec shutter_axis;
    AxisSpec gain_axis;
    std::optional<double> smoothing_sigma;  // empty = raw table
    std::vector<double> values;             // row-major, shutter rows

    std::size_t n() const { return shutter_axis.n; }

    double at(std::size_t i, std::size_t j) const { return values[(i - 1) * n() + (j - 1)]; }
    double& at(std::size_t i, std::size_t j) { return values[(i - 1) * n() + (j - 1)]; }
};

inline PerformanceTable make_table(std::string algorithm_id, double illumination,
                                   const AxisSpec& shutter, const AxisSpec& gain) {
    ensure_valid_axis(shutter);
    ensure_valid_axis(gain);
    if (shutter.n != gain.n) throw InvalidInput("table axes must have equal sample counts");
    PerformanceTable t;
    t.algorithm_id = std::move(algorithm_id);
    t.illumination = illumination;
    t.shutter_axis = shutter;
    t.gain_axis = gain;
    t.values.assign(shutter.n * gain.n, 0.0);
    return t;
}

inline void validate_table(const PerformanceTable& t) {
    ensure_valid_axis(t.shutter_axis);
    ensure_valid_axis(t.gain_axis);
    if (t.shutter_axis.n != t.gain_axis.n) {
        throw InvalidInput("table axes must have equal sample counts");
    }
    if (t.values.size() != t.n() * t.n()) throw InvalidInput("table grid size mismatch");
    if (!(t.illumination > 0.0) || !std::isfinite(t.illumination)) {
        throw InvalidInput("table illumination must be positive");
    }
    for (double v : t.values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidInput("table entry " + std::to_string(v) + " outside [0,1]");
        }
    }
    if (t.smoothing_sigma && !(*t.smoothing_sigma > 0.0)) {
        throw InvalidInput("smoothing sigma must be positive");
    }
}

// Everything recorded for one grid cell: the detector output and the ground
// truth over all images captured at that (shutter, gain) sample.
struct CellRuns {
    std::size_t shutter_idx = 0;  // 1-based
    std::size_t gain_idx = 0;
    std::vector<Detection> detections;
    std::vector<Annotation> annotations;
};

struct BuildOptions {
    bool allow_missing = false;
    double iou_threshold = 0.5;
};

// Fills the grid with per-cell AP. Every cell must appear exactly once
// unless allow_missing is set, in which case absent cells are zero and
// reported through missing_out.
inline PerformanceTable build_table(
    const std::vector<CellRuns>& cells, std::string algorithm_id, double illumination,
    const AxisSpec& shutter, const AxisSpec& gain, const BuildOptions& opts = {},
    std::vector<std::pair<std::size_t, std::size_t>>* missing_out = nullptr) {
    PerformanceTable t = make_table(std::move(algorithm_id), illumination, shutter, gain);
    const std::size_t n = t.n();
    std::vector<bool> seen(n * n, false);
    for (const auto& cell : cells) {
        if (cell.shutter_idx < 1 || cell.shutter_idx > n || cell.gain_idx < 1 ||
            cell.gain_idx > n) {
            throw InvalidInput("cell index (" + std::to_string(cell.shutter_idx) + "," +
                               std::to_string(cell.gain_idx) + ") out of range");
        }
        const std::size_t flat = (cell.shutter_idx - 1) * n + (cell.gain_idx - 1);
        if (seen[flat]) {
            throw InvalidInput("duplicate cell (" + std::to_string(cell.shutter_idx) + "," +
                               std::to_string(cell.gain_idx) + ")");
        }
        seen[flat] = true;
        t.values[flat] = evaluate_ap(cell.detections, cell.annotations, opts.iou_threshold);
    }
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (seen[(i - 1) * n + (j - 1)]) continue;
            if (!opts.allow_missing) {
                throw InvalidInput("missing cell (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")");
            }
            if (missing_out) missing_out->emplace_back(i, j);
        }
    }
    return t;
}

// 3x3 Gaussian smoothing with the kernel cropped at the borders and the
// surviving weights renormalized to sum to 1, so border cells stay convex
// combinations of their in-bounds neighborhood.
inline PerformanceTable gaussian_smooth(const PerformanceTable& t, double sigma) {
    validate_table(t);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidInput("gaussian_smooth: sigma must be positive");
    }
    if (t.smoothing_sigma) throw InvalidInput("table already smoothed; refusing to smooth twice");

    const std::size_t n = t.n();
    double w[3][3];
    for (int dk = -1; dk <= 1; ++dk) {
        for (int dl = -1; dl <= 1; ++dl) {
            w[dk + 1][dl + 1] =
                std::exp(-(static_cast<double>(dk * dk + dl * dl)) / (2.0 * sigma * sigma));
        }
    }

    PerformanceTable out = t;
    out.smoothing_sigma = sigma;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            double num = 0.0;
            double den = 0.0;
            for (int dk = -1; dk <= 1; ++dk) {
                for (int dl = -1; dl <= 1; ++dl) {
                    const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(i) + dk;
                    const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(j) + dl;
                    if (ii < 1 || jj < 1 || ii > static_cast<std::ptrdiff_t>(n) ||
                        jj > static_cast<std::ptrdiff_t>(n)) {
                        continue;
                    }
                    num += w[dk + 1][dl + 1] *
                           t.at(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj));
                    den += w[dk + 1][dl + 1];
                }
            }
            out.at(i, j) = num / den;
        }
    }
    return out;
}

}  // namespace camctl
