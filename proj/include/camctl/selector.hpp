#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "camctl/axis.hpp"
#include "camctl/error.hpp"
#include "camctl/numfmt.hpp"
#include "camctl/perf_table.hpp"

namespace camctl {

struct LightReading {
    double lux = 0.0;
    std::optional<std::string> timestamp;
};

// Continuous physical camera parameters; components live inside the sampled
// span of their axes, [a, axis_value(n)].
struct CameraConfig {
    double shutter_ms = 0.0;
    double gain_db = 0.0;
};

// Per-algorithm family of tables indexed by illumination. Levels are
// strictly increasing in lux and share axes and smoothing.
struct TableSet {
    std::string algorithm_id;
    std::vector<PerformanceTable> levels;
};

struct Selection {
    std::string algorithm_id;
    CameraConfig config;
    double predicted_ap = 0.0;
    double lux_used = 0.0;  // reading clamped into the level span
    double level_lo = 0.0;  // bracketing levels actually consulted
    double level_hi = 0.0;
};

// Grid argmax with deterministic tie-breaking: among equal values prefer the
// smallest gain index, then the smallest shutter index (less amplifier noise,
// then less exposure).
inline std::pair<std::size_t, std::size_t> argmax_cell(const PerformanceTable& t) {
    validate_table(t);
    std::size_t best_i = 1;
    std::size_t best_j = 1;
    double best = t.at(1, 1);
    for (std::size_t i = 1; i <= t.n(); ++i) {
        for (std::size_t j = 1; j <= t.n(); ++j) {
            const double v = t.at(i, j);
            if (v > best || (v == best && (j < best_j || (j == best_j && i < best_i)))) {
                best = v;
                best_i = i;
                best_j = j;
            }
        }
    }
    return {best_i, best_j};
}

struct LevelOptimum {
    CameraConfig config;
    double predicted_ap = 0.0;
};

inline LevelOptimum optimum_at_level(const PerformanceTable& t) {
    const auto [i, j] = argmax_cell(t);
    return {{axis_value(t.shutter_axis, i), axis_value(t.gain_axis, j)}, t.at(i, j)};
}

inline void validate_table_set(const TableSet& set) {
    if (set.levels.empty()) throw InvalidInput("table set '" + set.algorithm_id + "' is empty");
    const PerformanceTable& first = set.levels.front();
    for (std::size_t k = 0; k < set.levels.size(); ++k) {
        const PerformanceTable& t = set.levels[k];
        validate_table(t);
        if (t.algorithm_id != set.algorithm_id) {
            throw InvalidInput("table algorithm '" + t.algorithm_id + "' does not match set '" +
                               set.algorithm_id + "'");
        }
        if (t.shutter_axis != first.shutter_axis || t.gain_axis != first.gain_axis) {
            throw InvalidInput("tables in set '" + set.algorithm_id + "' use different axes");
        }
        if (t.smoothing_sigma != first.smoothing_sigma) {
            throw InvalidInput("tables in set '" + set.algorithm_id +
                               "' use different smoothing");
        }
        if (k > 0 && !(set.levels[k - 1].illumination < t.illumination)) {
            throw InvalidInput("levels in set '" + set.algorithm_id +
                               "' must be strictly increasing in lux");
        }
    }
}

// Framework steps 3-4: clamp the reading into the stored level span, find
// the bracketing levels, interpolate each algorithm's per-level optimum
// linearly in lux, and return the algorithm with the highest predicted AP
// (registration order wins ties). Readings at a stored level reproduce that
// level's optimum bit-for-bit.
inline Selection select_for_illumination(const std::vector<TableSet>& sets,
                                         const LightReading& reading) {
    if (sets.empty()) throw InvalidInput("no table sets registered");
    if (!(reading.lux > 0.0) || !std::isfinite(reading.lux)) {
        throw InvalidInput("light reading must be positive and finite");
    }
    for (const auto& set : sets) {
        validate_table_set(set);
        if (set.levels.size() != sets.front().levels.size()) {
            throw InvalidInput("table sets disagree on illumination levels");
        }
        for (std::size_t k = 0; k < set.levels.size(); ++k) {
            if (set.levels[k].illumination != sets.front().levels[k].illumination) {
                throw InvalidInput("table sets disagree on illumination levels");
            }
        }
    }

    const auto& grid = sets.front().levels;
    const double lo_lux = grid.front().illumination;
    const double hi_lux = grid.back().illumination;
    const double lux = std::clamp(reading.lux, lo_lux, hi_lux);

    std::size_t hi = 0;
    while (grid[hi].illumination < lux) ++hi;
    const std::size_t lo = (grid[hi].illumination == lux) ? hi : hi - 1;

    std::optional<Selection> best;
    for (const auto& set : sets) {
        Selection s;
        s.algorithm_id = set.algorithm_id;
        s.lux_used = lux;
        s.level_lo = set.levels[lo].illumination;
        s.level_hi = set.levels[hi].illumination;
        if (lo == hi) {
            const LevelOptimum opt = optimum_at_level(set.levels[lo]);
            s.config = opt.config;
            s.predicted_ap = opt.predicted_ap;
        } else {
            const LevelOptimum o0 = optimum_at_level(set.levels[lo]);
            const LevelOptimum o1 = optimum_at_level(set.levels[hi]);
            const double t = (lux - s.level_lo) / (s.level_hi - s.level_lo);
            s.config.shutter_ms = (1.0 - t) * o0.config.shutter_ms + t * o1.config.shutter_ms;
            s.config.gain_db = (1.0 - t) * o0.config.gain_db + t * o1.config.gain_db;
            s.predicted_ap = (1.0 - t) * o0.predicted_ap + t * o1.predicted_ap;
        }
        if (!best || s.predicted_ap > best->predicted_ap) best = s;
    }
    return *best;
}

// Groups loose tables into per-algorithm sets ordered by lux. Sets come out
// sorted by algorithm id, which is the registration (tie-break) order the
// CLI documents.
inline std::vector<TableSet> make_table_sets(std::vector<PerformanceTable> tables) {
    std::map<std::string, std::vector<PerformanceTable>> groups;
    for (auto& t : tables) {
        validate_table(t);
        groups[t.algorithm_id].push_back(std::move(t));
    }
    std::vector<TableSet> sets;
    for (auto& [algorithm_id, levels] : groups) {
        std::sort(levels.begin(), levels.end(),
                  [](const PerformanceTable& a, const PerformanceTable& b) {
                      return a.illumination < b.illumination;
                  });
        for (std::size_t k = 1; k < levels.size(); ++k) {
            if (levels[k - 1].illumination == levels[k].illumination) {
                throw InvalidInput("duplicate level " + shortest(levels[k].illumination) +
                                   " lux for algorithm '" + algorithm_id + "'");
            }
        }
        TableSet set;
        set.algorithm_id = algorithm_id;
        set.levels = std::move(levels);
        validate_table_set(set);
        sets.push_back(std::move(set));
    }
    if (sets.empty()) throw InvalidInput("no tables to group");
    return sets;
}

}  // namespace camctl
