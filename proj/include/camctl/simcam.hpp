#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "camctl/axis.hpp"
#include "camctl/error.hpp"
#include "camctl/metrics.hpp"
#include "camctl/numfmt.hpp"
#include "camctl/perf_table.hpp"
#include "camctl/rng.hpp"
#include "camctl/selector.hpp"
#include "camctl/table_io.hpp"

namespace camctl {

// Two-region analytic scene: one object patch over a uniform background.
// The simulation works on region statistics, never on pixel rasters.
struct SceneSpec {
    double illumination = 800.0;  // lux
    double object_reflectance = 0.7;
    double background_reflectance = 0.08;
    BoundingBox object_box{131.0, 94.0, 509.0, 378.0};
    double frame_width = 640.0;
    double frame_height = 480.0;
    std::uint64_t seed = 0;
};

// pixel = clip(k * lux * reflectance * shutter_ms * 10^(gain_db/20), 0, full_scale)
// with additive zero-mean read noise of sigma = read_noise_sigma * 10^(gain_db/20).
struct ExposureModel {
    double k = 0.008;  // counts per lux*ms at unit reflectance, 0 dB
    double full_scale = 255.0;
    double read_noise_sigma = 2.0;  // counts at 0 dB
};

struct ImageStats {
    double mean_brightness = 0.0;     // counts
    double clipped_fraction = 0.0;    // fraction of pixels at full scale
    double effective_noise_sigma = 0.0;
    double object_contrast = 0.0;     // |object - background| region means
};

inline void validate_scene(const SceneSpec& s) {
    if (!(s.illumination > 0.0) || !std::isfinite(s.illumination)) {
        throw InvalidInput("scene illumination must be positive");
    }
    if (!(s.object_reflectance > 0.0 && s.object_reflectance <= 1.0) ||
        !(s.background_reflectance > 0.0 && s.background_reflectance <= 1.0)) {
        throw InvalidInput("reflectances must be in (0,1]");
    }
    ensure_valid_box(s.object_box);
    if (!(s.frame_width > 0.0 && s.frame_height > 0.0)) {
        throw InvalidInput("frame dimensions must be positive");
    }
    if (s.object_box.x_min < 0.0 || s.object_box.y_min < 0.0 ||
        s.object_box.x_max > s.frame_width || s.object_box.y_max > s.frame_height) {
        throw InvalidInput("object box must lie within the frame");
    }
}

inline void validate_model(const ExposureModel& m) {
    if (!(m.k > 0.0) || !(m.full_scale > 0.0) || !(m.read_noise_sigma >= 0.0)) {
        throw InvalidInput("exposure model: need k > 0, full_scale > 0, read_noise_sigma >= 0");
    }
}

inline double linear_gain(double gain_db) { return std::pow(10.0, gain_db / 20.0); }

namespace detail {

inline double overlap_area(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    return (ix > 0.0 && iy > 0.0) ? ix * iy : 0.0;
}

struct RegionLevels {
    double object_unclipped = 0.0;
    double background_unclipped = 0.0;
    double object = 0.0;
    double background = 0.0;
};

inline RegionLevels region_levels(const SceneSpec& scene, const CameraConfig& config,
                                  const ExposureModel& model) {
    if (!(config.shutter_ms > 0.0) || !std::isfinite(config.shutter_ms) ||
        !std::isfinite(config.gain_db)) {
        throw InvalidInput("camera config must have positive shutter and finite gain");
    }
    const double exposure =
        model.k * scene.illumination * config.shutter_ms * linear_gain(config.gain_db);
    RegionLevels r;
    r.object_unclipped = exposure * scene.object_reflectance;
    r.background_unclipped = exposure * scene.background_reflectance;
    r.object = std::min(r.object_unclipped, model.full_scale);
    r.background = std::min(r.background_unclipped, model.full_scale);
    return r;
}

}  // namespace detail

// Renders the scene down to exposure statistics. The noise term is folded in
// analytically (zero-mean, so the means are exact); seeded sampling only
// happens later in the detector, which keeps this a pure function.
inline ImageStats render(const SceneSpec& scene, const CameraConfig& config,
                         const ExposureModel& model) {
    validate_scene(scene);
    validate_model(model);
    const auto r = detail::region_levels(scene, config, model);
    const double frame_area = scene.frame_width * scene.frame_height;
    const double f = scene.object_box.area() / frame_area;

    ImageStats stats;
    stats.mean_brightness = f * r.object + (1.0 - f) * r.background;
    stats.clipped_fraction = f * (r.object_unclipped >= model.full_scale ? 1.0 : 0.0) +
                             (1.0 - f) * (r.background_unclipped >= model.full_scale ? 1.0 : 0.0);
    stats.effective_noise_sigma = model.read_noise_sigma * linear_gain(config.gain_db);
    stats.object_contrast = std::abs(r.object - r.background);
    return stats;
}

// Mean brightness over a region of interest (clamped to the frame).
inline double roi_mean_brightness(const SceneSpec& scene, const CameraConfig& config,
                                  const ExposureModel& model, const BoundingBox& roi) {
    validate_scene(scene);
    validate_model(model);
    ensure_valid_box(roi);
    const BoundingBox frame{0.0, 0.0, scene.frame_width, scene.frame_height};
    const double roi_area = detail::overlap_area(roi, frame);
    if (roi_area <= 0.0) throw InvalidInput("ROI does not intersect the frame");
    const auto r = detail::region_levels(scene, config, model);
    const double f = detail::overlap_area(roi, scene.object_box) / roi_area;
    return f * r.object + (1.0 - f) * r.background;
}

struct AutoExposeOptions {
    double target_mean = 118.0;  // counts, mid-gray of an 8-bit range
    std::optional<BoundingBox> roi;  // default: full frame
    double tolerance = 5.0;          // counts
    int max_iterations = 50;
    AxisSpec shutter_axis = default_shutter_axis();
    AxisSpec gain_axis = default_gain_axis();
};

struct AutoExposeResult {
    CameraConfig config;
    bool converged = false;
    double mean_brightness = 0.0;
    int iterations = 0;
};

// Mean-brightness auto-exposure baseline: proportional control of the total
// exposure, paid out shutter-first. Gain only rises once the shutter rails
// at its largest sampled value, and only drops once the shutter rails at its
// smallest. Railed components sit exactly on the axis sample values.
inline AutoExposeResult auto_expose(const SceneSpec& scene, const ExposureModel& model,
                                    const AutoExposeOptions& opts = {}) {
    validate_scene(scene);
    validate_model(model);
    ensure_valid_axis(opts.shutter_axis);
    ensure_valid_axis(opts.gain_axis);
    if (!(opts.target_mean > 0.0 && opts.target_mean < model.full_scale)) {
        throw InvalidInput("auto_expose target must be inside (0, full_scale)");
    }
    if (!(opts.tolerance > 0.0) || opts.max_iterations < 1) {
        throw InvalidInput("auto_expose needs positive tolerance and at least one iteration");
    }
    const BoundingBox roi =
        opts.roi.value_or(BoundingBox{0.0, 0.0, scene.frame_width, scene.frame_height});

    const double sh_lo = opts.shutter_axis.a;
    const double sh_hi = axis_max_sample(opts.shutter_axis);
    const double g_db_lo = opts.gain_axis.a;
    const double g_db_hi = axis_max_sample(opts.gain_axis);
    const double g_lin_lo = linear_gain(g_db_lo);
    const double g_lin_hi = linear_gain(g_db_hi);

    double shutter = axis_value(opts.shutter_axis, (opts.shutter_axis.n + 1) / 2);
    double gain_db = g_db_lo;
    double gain_lin = g_lin_lo;

    AutoExposeResult result;
    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        result.iterations = iter;
        const double mean = roi_mean_brightness(scene, {shutter, gain_db}, model, roi);
        result.mean_brightness = mean;
        if (std::abs(mean - opts.target_mean) <= opts.tolerance) {
            result.converged = true;
            break;
        }
        double new_shutter;
        double new_gain_db;
        double new_gain_lin;
        if (mean <= 0.0) {
            // Nothing measurable; jump straight to maximum exposure.
            new_shutter = sh_hi;
            new_gain_db = g_db_hi;
            new_gain_lin = g_lin_hi;
        } else {
            const double desired = shutter * gain_lin * (opts.target_mean / mean);
            new_shutter = std::clamp(desired, sh_lo, sh_hi);
            const double want_gain = desired / new_shutter;
            if (want_gain >= g_lin_hi) {
                new_gain_db = g_db_hi;
                new_gain_lin = g_lin_hi;
            } else if (want_gain <= g_lin_lo) {
                new_gain_db = g_db_lo;
                new_gain_lin = g_lin_lo;
            } else {
                new_gain_lin = want_gain;
                new_gain_db = 20.0 * std::log10(want_gain);
            }
        }
        if (new_shutter == shutter && new_gain_lin == gain_lin) break;  // railed, no progress
        shutter = new_shutter;
        gain_db = new_gain_db;
        gain_lin = new_gain_lin;
    }
    result.config = {shutter, gain_db};
    return result;
}

// Synthetic detector response model. Quality multiplies a saturating
// contrast term, a clipping penalty and a noise penalty; all constants are
// free parameters of the profile.
struct DetectorProfile {
    double contrast_scale = 15.0;  // counts; q_contrast = 1 - exp(-contrast/scale)
    double noise_scale = 15.0;     // counts; q_noise = exp(-(sigma/scale)^2)
    double clip_exponent = 2.0;    // (1 - clipped_fraction)^alpha
    double good_quality = 0.5;     // at or above: the exact box, nothing else
    double jitter_rate = 1.2;      // box offset fraction per unit quality deficit
    int max_false_positives = 4;
};

inline double detection_quality(const ImageStats& stats, const DetectorProfile& profile = {}) {
    const double q_contrast = 1.0 - std::exp(-stats.object_contrast / profile.contrast_scale);
    const double q_noise =
        std::exp(-(stats.effective_noise_sigma / profile.noise_scale) *
                 (stats.effective_noise_sigma / profile.noise_scale));
    const double q_clip = std::pow(1.0 - stats.clipped_fraction, profile.clip_exponent);
    return q_contrast * q_clip * q_noise;
}

// Deterministic synthetic detector. At high quality it reports the ground
// truth box with the quality as score. Below good_quality the reported box
// drifts off the target (axis-aligned, so IoU = (1-d)/(1+d) for offset
// fraction d) and seeded false positives scoring above the true detection
// appear, one more for every ~0.17 of missing quality. At quality zero no
// true detection is emitted at all.
inline std::vector<Detection> synthetic_detect(const ImageStats& stats, const Annotation& gt,
                                               std::uint64_t seed,
                                               const DetectorProfile& profile = {}) {
    ensure_valid_box(gt.box);
    const double q = detection_quality(stats, profile);
    std::vector<Detection> out;
    if (q >= profile.good_quality) {
        out.push_back({gt.image_id, gt.class_label, gt.box, q});
        return out;
    }

    std::mt19937_64 rng(seed);
    const double deficit = profile.good_quality - q;
    if (q > 0.0) {
        const double d = profile.jitter_rate * deficit;
        BoundingBox box = gt.box;
        switch (rng() & 3u) {
            case 0: box.x_min += d * gt.box.width(); box.x_max += d * gt.box.width(); break;
            case 1: box.x_min -= d * gt.box.width(); box.x_max -= d * gt.box.width(); break;
            case 2: box.y_min += d * gt.box.height(); box.y_max += d * gt.box.height(); break;
            default: box.y_min -= d * gt.box.height(); box.y_max -= d * gt.box.height(); break;
        }
        out.push_back({gt.image_id, gt.class_label, box, q});
    }

    const int n_fp =
        1 + std::min(profile.max_false_positives - 1, static_cast<int>(std::floor(6.0 * deficit)));
    for (int i = 0; i < n_fp; ++i) {
        // Far-offset clutter box: guaranteed disjoint from the ground truth.
        const double off = (2.0 + uniform01(rng)) * gt.box.width();
        const double scale = 0.8 + 0.4 * uniform01(rng);
        const bool horizontal = (rng() & 1u) != 0;
        const double sign = (rng() & 1u) ? 1.0 : -1.0;
        BoundingBox box = gt.box;
        if (horizontal) {
            box.x_min += sign * off;
            box.x_max = box.x_min + scale * gt.box.width();
        } else {
            const double voff = (2.0 + uniform01(rng)) * gt.box.height();
            box.y_min += sign * voff;
            box.y_max = box.y_min + scale * gt.box.height();
        }
        const double score = q + deficit * uniform01(rng);
        out.push_back({gt.image_id, gt.class_label, box, score});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-loop harness
// ---------------------------------------------------------------------------

struct ClosedLoopOptions {
    DetectorProfile detector;
    AutoExposeOptions auto_exposure;
    int trials = 1;  // detection draws averaged per scene
    double iou_threshold = 0.5;
};

struct SceneOutcome {
    SceneSpec scene;
    CameraConfig auto_config;
    bool auto_converged = false;
    double auto_ap = 0.0;
    Selection active;
    double active_ap = 0.0;
};

struct ClosedLoopReport {
    double auto_map = 0.0;
    double active_map = 0.0;
    std::vector<SceneOutcome> per_scene;
};

inline Annotation scene_ground_truth(const SceneSpec& scene, std::size_t index) {
    return {"scene-" + std::to_string(index), "object", scene.object_box};
}

namespace detail {

inline double scene_ap(const SceneSpec& scene, const CameraConfig& config,
                       const ExposureModel& model, const Annotation& gt,
                       std::uint64_t seed_stream, const ClosedLoopOptions& opts) {
    const ImageStats stats = render(scene, config, model);
    std::vector<double> aps;
    aps.reserve(static_cast<std::size_t>(opts.trials));
    for (int t = 0; t < opts.trials; ++t) {
        const std::uint64_t seed =
            derive_seed(scene.seed, seed_stream + 2ull * static_cast<std::uint64_t>(t));
        const auto dets = synthetic_detect(stats, gt, seed, opts.detector);
        aps.push_back(evaluate_ap(dets, {gt}, opts.iou_threshold));
    }
    return mean_average_precision(aps);
}

}  // namespace detail

// Runs every scene through both pipelines: light reading -> table lookup ->
// render -> detect -> evaluate, against auto-exposure -> render -> detect ->
// evaluate, and aggregates mAP for each.
inline ClosedLoopReport run_closed_loop(const std::vector<SceneSpec>& scenes,
                                        const ExposureModel& model,
                                        const std::vector<TableSet>& sets,
                                        const ClosedLoopOptions& opts = {}) {
    if (scenes.empty()) throw InvalidInput("run_closed_loop: no scenes");
    if (opts.trials < 1) throw InvalidInput("run_closed_loop: trials must be >= 1");
    for (const auto& set : sets) {
        validate_table_set(set);
        if (set.levels.front().shutter_axis != opts.auto_exposure.shutter_axis ||
            set.levels.front().gain_axis != opts.auto_exposure.gain_axis) {
            throw InvalidInput("table axes do not match the configured camera ranges");
        }
    }

    ClosedLoopReport report;
    std::vector<double> auto_aps;
    std::vector<double> active_aps;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        const SceneSpec& scene = scenes[s];
        const Annotation gt = scene_ground_truth(scene, s);

        SceneOutcome outcome;
        outcome.scene = scene;

        const AutoExposeResult ae = auto_expose(scene, model, opts.auto_exposure);
        outcome.auto_config = ae.config;
        outcome.auto_converged = ae.converged;
        outcome.auto_ap = detail::scene_ap(scene, ae.config, model, gt, 0, opts);

        outcome.active = select_for_illumination(sets, {scene.illumination, std::nullopt});
        outcome.active_ap = detail::scene_ap(scene, outcome.active.config, model, gt, 1, opts);

        auto_aps.push_back(outcome.auto_ap);
        active_aps.push_back(outcome.active_ap);
        report.per_scene.push_back(std::move(outcome));
    }
    report.auto_map = mean_average_precision(auto_aps);
    report.active_map = mean_average_precision(active_aps);
    return report;
}

// ---------------------------------------------------------------------------
// Shipped simulator fixture and its config file
// ---------------------------------------------------------------------------

// Everything the `simulate` command needs: exposure model, detector response,
// scene geometry, the illumination levels, and the smoothing sigma used when
// building tables. Defaults are tuned so the published lux levels span
// under- to over-exposure across the sampled shutter/gain ranges.
struct SimConfig {
    ExposureModel model;
    DetectorProfile detector;
    std::vector<double> levels{50.0, 200.0, 400.0, 800.0, 1600.0, 3200.0};
    std::vector<double> object_reflectances{0.55, 0.7, 0.85};
    double background_reflectance = 0.08;
    BoundingBox object_box{131.0, 94.0, 509.0, 378.0};
    double frame_width = 640.0;
    double frame_height = 480.0;
    AxisSpec shutter_axis = default_shutter_axis();
    AxisSpec gain_axis = default_gain_axis();
    double smoothing_sigma = 1.0;
    // Recorded for provenance; the statistics-level model does not use them.
    double aperture = 4.0;
    double wb_red = 500.0;
    double wb_blue = 800.0;
};

inline SimConfig parse_sim_config(std::string_view bytes) {
    SimConfig cfg;
    std::set<std::string> seen;
    const auto lines = detail::split_lines(bytes);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        std::string_view line = lines[li];
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected key=value");
        const std::string key(line.substr(0, eq));
        const std::string_view value = line.substr(eq + 1);
        if (!seen.insert(key).second) throw ParseError(line_no, "duplicate key '" + key + "'");
        try {
            if (key == "k") {
                cfg.model.k = parse_double(value, key);
            } else if (key == "read_noise_sigma") {
                cfg.model.read_noise_sigma = parse_double(value, key);
            } else if (key == "full_scale") {
                cfg.model.full_scale = parse_double(value, key);
            } else if (key == "contrast_scale") {
                cfg.detector.contrast_scale = parse_double(value, key);
            } else if (key == "noise_scale") {
                cfg.detector.noise_scale = parse_double(value, key);
            } else if (key == "clip_exponent") {
                cfg.detector.clip_exponent = parse_double(value, key);
            } else if (key == "background_reflectance") {
                cfg.background_reflectance = parse_double(value, key);
            } else if (key == "frame_width") {
                cfg.frame_width = parse_double(value, key);
            } else if (key == "frame_height") {
                cfg.frame_height = parse_double(value, key);
            } else if (key == "smoothing_sigma") {
                cfg.smoothing_sigma = parse_double(value, key);
            } else if (key == "aperture") {
                cfg.aperture = parse_double(value, key);
            } else if (key == "wb_red") {
                cfg.wb_red = parse_double(value, key);
            } else if (key == "wb_blue") {
                cfg.wb_blue = parse_double(value, key);
            } else if (key == "levels" || key == "object_reflectances") {
                std::vector<double> vals;
                for (const auto& part : detail::split(value, ',')) {
                    vals.push_back(parse_double(part, key));
                }
                if (key == "levels") {
                    cfg.levels = std::move(vals);
                } else {
                    cfg.object_reflectances = std::move(vals);
                }
            } else if (key == "object_box") {
                const auto parts = detail::split(value, ',');
                if (parts.size() != 4) throw ParseError("object_box needs x0,y0,x1,y1");
                cfg.object_box = {parse_double(parts[0], key), parse_double(parts[1], key),
                                  parse_double(parts[2], key), parse_double(parts[3], key)};
            } else {
                throw ParseError("unknown key '" + key + "'");
            }
        } catch (const ParseError& e) {
            if (e.line() != 0) throw;
            throw ParseError(line_no, e.what());
        }
    }
    if (cfg.levels.empty()) throw ParseError("levels must not be empty");
    for (std::size_t i = 1; i < cfg.levels.size(); ++i) {
        if (!(cfg.levels[i - 1] < cfg.levels[i])) {
            throw ParseError("levels must be strictly increasing");
        }
    }
    if (cfg.object_reflectances.empty()) throw ParseError("object_reflectances must not be empty");
    validate_model(cfg.model);
    return cfg;
}

inline SceneSpec scene_from_config(const SimConfig& cfg, double lux, double object_reflectance,
                                   std::uint64_t seed) {
    SceneSpec s;
    s.illumination = lux;
    s.object_reflectance = object_reflectance;
    s.background_reflectance = cfg.background_reflectance;
    s.object_box = cfg.object_box;
    s.frame_width = cfg.frame_width;
    s.frame_height = cfg.frame_height;
    s.seed = seed;
    return s;
}

// Builds one smoothed table per illumination level by rendering every grid
// cell for every object and pooling the detections, i.e. the simulated
// version of the dataset-then-evaluate pipeline.
inline std::vector<PerformanceTable> build_training_tables(const SimConfig& cfg,
                                                           const std::string& algorithm_id,
                                                           std::uint64_t seed) {
    std::vector<PerformanceTable> tables;
    const std::size_t n = cfg.shutter_axis.n;
    for (std::size_t level = 0; level < cfg.levels.size(); ++level) {
        const double lux = cfg.levels[level];
        std::vector<CellRuns> cells;
        cells.reserve(n * n);
        for (std::size_t i = 1; i <= n; ++i) {
            for (std::size_t j = 1; j <= n; ++j) {
                CellRuns cell;
                cell.shutter_idx = i;
                cell.gain_idx = j;
                const CameraConfig config{axis_value(cfg.shutter_axis, i),
                                          axis_value(cfg.gain_axis, j)};
                for (std::size_t obj = 0; obj < cfg.object_reflectances.size(); ++obj) {
                    const std::uint64_t stream =
                        ((level * n + (i - 1)) * n + (j - 1)) * cfg.object_reflectances.size() +
                        obj;
                    const SceneSpec scene = scene_from_config(
                        cfg, lux, cfg.object_reflectances[obj], derive_seed(seed, stream));
                    Annotation gt{"train-" + std::to_string(level) + "-" + std::to_string(i) +
                                      "-" + std::to_string(j) + "-" + std::to_string(obj),
                                  "object", scene.object_box};
                    const ImageStats stats = render(scene, config, cfg.model);
                    auto dets =
                        synthetic_detect(stats, gt, derive_seed(scene.seed, 7), cfg.detector);
                    cell.annotations.push_back(std::move(gt));
                    for (auto& d : dets) cell.detections.push_back(std::move(d));
                }
                cells.push_back(std::move(cell));
            }
        }
        PerformanceTable raw =
            build_table(cells, algorithm_id, lux, cfg.shutter_axis, cfg.gain_axis);
        tables.push_back(gaussian_smooth(raw, cfg.smoothing_sigma));
    }
    return tables;
}

}  // namespace camctl
