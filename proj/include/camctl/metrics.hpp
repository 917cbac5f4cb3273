#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "camctl/error.hpp"

namespace camctl {

// Axis-aligned box in real-valued pixel coordinates. Area convention is
// (x_max - x_min) * (y_max - y_min); no inclusive-pixel +1.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool valid() const {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
               std::isfinite(y_max) && x_min < x_max && y_min < y_max;
    }
    double area() const { return (x_max - x_min) * (y_max - y_min); }
    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
};

struct Detection {
    std::string image_id;
    std::string class_label;
    BoundingBox box;
    double score = 0.0;
};

struct Annotation {
    std::string image_id;
    std::string class_label;
    BoundingBox box;
};

// One point of a cumulative precision-recall curve.
struct PRPoint {
    double recall = 0.0;
    double precision = 0.0;
};

inline void ensure_valid_box(const BoundingBox& b) {
    if (!b.valid()) {
        throw InvalidInput("degenerate bounding box (" + std::to_string(b.x_min) + "," +
                           std::to_string(b.y_min) + "," + std::to_string(b.x_max) + "," +
                           std::to_string(b.y_max) + ")");
    }
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
    ensure_valid_box(a);
    ensure_valid_box(b);
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

// Canonical detection order: score descending, ties broken lexicographically
// by (image_id, class_label, x_min, y_min) so repeated runs are bit-identical.
inline bool score_order(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.image_id, a.class_label, a.box.x_min, a.box.y_min) <
           std::tie(b.image_id, b.class_label, b.box.x_min, b.box.y_min);
}

inline std::vector<Detection> sorted_by_score(std::vector<Detection> dets) {
    std::stable_sort(dets.begin(), dets.end(), score_order);
    return dets;
}

// Greedy class-wise non-maximum suppression over detections of one image.
// Keeps the highest-scored detection, drops same-class detections whose IoU
// with it reaches `overlap`, repeats. Output stays sorted by score.
inline std::vector<Detection> nms(const std::vector<Detection>& dets, double overlap = 0.5) {
    if (!(overlap > 0.0 && overlap < 1.0)) {
        throw InvalidInput("nms overlap must be in (0,1)");
    }
    for (const auto& d : dets) {
        ensure_valid_box(d.box);
        if (d.image_id != dets.front().image_id) {
            throw InvalidInput("nms expects detections from a single image");
        }
    }
    std::vector<Detection> order = sorted_by_score(dets);
    std::vector<Detection> kept;
    kept.reserve(order.size());
    std::vector<bool> dead(order.size(), false);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (dead[i]) continue;
        kept.push_back(order[i]);
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (dead[j] || order[j].class_label != order[i].class_label) continue;
            if (iou(order[j].box, order[i].box) >= overlap) dead[j] = true;
        }
    }
    return kept;
}

// Evaluates detections against ground truth: processes detections in the
// canonical score order and flags each TP or FP. A detection is a TP when a
// not-yet-matched annotation with the same (image_id, class_label) overlaps
// it with IoU >= threshold; each annotation matches at most once. Returned
// flags are aligned with sorted_by_score(dets); true = TP.
inline std::vector<bool> match_detections(const std::vector<Detection>& dets,
                                          const std::vector<Annotation>& gts,
                                          double threshold = 0.5) {
    for (const auto& g : gts) ensure_valid_box(g.box);
    std::vector<Detection> order = sorted_by_score(dets);
    std::vector<bool> used(gts.size(), false);
    std::vector<bool> flags(order.size(), false);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Detection& d = order[k];
        ensure_valid_box(d.box);
        double best = -1.0;
        std::size_t best_g = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || gts[g].image_id != d.image_id || gts[g].class_label != d.class_label)
                continue;
            const double ov = iou(d.box, gts[g].box);
            if (ov > best) {
                best = ov;
                best_g = g;
            }
        }
        if (best_g < gts.size() && best >= threshold) {
            flags[k] = true;
            used[best_g] = true;
        }
    }
    return flags;
}

// Cumulative precision/recall after each of the ranked detections.
// n_gt == 0 yields an empty curve regardless of flags.
inline std::vector<PRPoint> precision_recall(const std::vector<bool>& flags, std::size_t n_gt) {
    std::vector<PRPoint> curve;
    if (n_gt == 0) return curve;
    curve.reserve(flags.size());
    std::size_t tp = 0;
    for (std::size_t k = 0; k < flags.size(); ++k) {
        if (flags[k]) ++tp;
        curve.push_back({static_cast<double>(tp) / static_cast<double>(n_gt),
                         static_cast<double>(tp) / static_cast<double>(k + 1)});
    }
    return curve;
}

// 11-point interpolated average precision: mean over recall thresholds
// {0, 0.1, ..., 1.0} of the maximum precision at recall >= threshold,
// with an empty maximum counting as 0.
inline double average_precision(const std::vector<PRPoint>& curve) {
    double sum = 0.0;
    for (int j = 0; j <= 10; ++j) {
        const double r = static_cast<double>(j) / 10.0;
        double best = 0.0;
        for (const auto& p : curve) {
            if (p.recall >= r && p.precision > best) best = p.precision;
        }
        sum += best;
    }
    return sum / 11.0;
}

inline double mean_average_precision(const std::vector<double>& aps) {
    if (aps.empty()) throw InvalidInput("mean_average_precision over empty list");
    double sum = 0.0;
    for (double ap : aps) {
        if (!(ap >= 0.0 && ap <= 1.0)) throw InvalidInput("AP outside [0,1]");
        sum += ap;
    }
    return sum / static_cast<double>(aps.size());
}

// match -> curve -> AP in one step; the building block for table cells.
inline double evaluate_ap(const std::vector<Detection>& dets, const std::vector<Annotation>& gts,
                          double threshold = 0.5) {
    const std::vector<bool> flags = match_detections(dets, gts, threshold);
    return average_precision(precision_recall(flags, gts.size()));
}

}  // namespace camctl
