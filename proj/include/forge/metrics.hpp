#pragma once

// Pseudo-label evaluation: pixel IoU, target-level detection probability
// (Pd) with a centroid deviation threshold, pixel false-alarm ratio (Fa)
// and the false annotated target ratio Fat = T_false / N_all.
//
// Dataset figures are micro-averages: counts are summed over images before
// forming ratios.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "forge/core_types.hpp"
#include "forge/postprocess.hpp"

namespace forge {

struct MetricConfig {
    double deviation_px = 3.0;
    double fa_scale = 1e6;

    void validate() const {
        if (!(deviation_px > 0.0)) throw config_error("deviation_px must be positive, got " + std::to_string(deviation_px));
    }
};

struct MetricCounts {
    std::uint64_t intersection = 0;
    std::uint64_t union_px = 0;
    std::uint64_t n_all = 0;       // ground-truth targets
    std::uint64_t n_pred = 0;      // predicted targets
    std::uint64_t detected = 0;    // matched ground-truth targets
    std::uint64_t t_false = 0;     // unmatched predicted targets
    std::uint64_t false_px = 0;    // pred=1 and gt=0
    std::uint64_t total_px = 0;

    MetricCounts& operator+=(const MetricCounts& o) {
        intersection += o.intersection;
        union_px += o.union_px;
        n_all += o.n_all;
        n_pred += o.n_pred;
        detected += o.detected;
        t_false += o.t_false;
        false_px += o.false_px;
        total_px += o.total_px;
        return *this;
    }
    friend bool operator==(const MetricCounts&, const MetricCounts&) = default;
};

struct MetricValues {
    double iou = 1.0;
    double pd = 1.0;
    double fa = 0.0;   // ratio in [0,1]; multiply by fa_scale for reporting
    double fat = 0.0;
    bool fat_defined = true;  // false when N_all = 0

    static MetricValues from(const MetricCounts& c) {
        MetricValues v;
        v.iou = c.union_px == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.union_px);
        v.pd = c.n_all == 0 ? 1.0 : static_cast<double>(c.detected) / static_cast<double>(c.n_all);
        v.fa = c.total_px == 0 ? 0.0 : static_cast<double>(c.false_px) / static_cast<double>(c.total_px);
        v.fat_defined = c.n_all > 0;
        v.fat = v.fat_defined ? static_cast<double>(c.t_false) / static_cast<double>(c.n_all) : 0.0;
        return v;
    }
};

struct ImageMetrics {
    std::string image_id;
    MetricCounts counts;
    MetricValues values;
};

struct MetricReport {
    MetricConfig config;
    MetricCounts counts;
    MetricValues values;
    std::vector<ImageMetrics> per_image;
};

namespace detail {

inline void intersection_union(const BinaryMask& pred, const BinaryMask& gt, MetricCounts& c) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0;
        const bool g = gt[i] != 0;
        c.intersection += p && g;
        c.union_px += p || g;
        c.false_px += p && !g;
    }
    c.total_px += pred.size();
}

}  // namespace detail

inline double iou(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_shape(pred, gt, "iou");
    MetricCounts c;
    detail::intersection_union(pred, gt, c);
    return MetricValues::from(c).iou;
}

struct TargetMatch {
    int pred_label = 0;
    int gt_label = 0;
    double distance = 0.0;
    friend bool operator==(const TargetMatch&, const TargetMatch&) = default;
};

/// One-to-one greedy centroid matching: candidate pairs within the deviation
/// threshold are accepted by ascending distance, ties by (gt label, pred label).
inline std::vector<TargetMatch> match_targets(const ClusterSet& pred, const ClusterSet& gt, const MetricConfig& cfg = {}) {
    cfg.validate();
    if (pred.width() != gt.width() || pred.height() != gt.height()) throw shape_error("match_targets: cluster sets differ in shape");
    std::vector<TargetMatch> pairs;
    for (const auto& g : gt.clusters()) {
        for (const auto& p : pred.clusters()) {
            const double d = distance(p.centroid, g.centroid);
            if (d <= cfg.deviation_px) pairs.push_back({p.label, g.label, d});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const TargetMatch& a, const TargetMatch& b) {
        return std::tie(a.distance, a.gt_label, a.pred_label) < std::tie(b.distance, b.gt_label, b.pred_label);
    });
    std::vector<bool> pred_used(pred.size() + 1, false);
    std::vector<bool> gt_used(gt.size() + 1, false);
    std::vector<TargetMatch> out;
    for (const auto& m : pairs) {
        if (pred_used[static_cast<std::size_t>(m.pred_label)] || gt_used[static_cast<std::size_t>(m.gt_label)]) continue;
        pred_used[static_cast<std::size_t>(m.pred_label)] = true;
        gt_used[static_cast<std::size_t>(m.gt_label)] = true;
        out.push_back(m);
    }
    return out;
}

/// Per-image metric fragment (all counts plus IoU, Pd, Fa and Fat).
inline ImageMetrics pd_fa_fat(const BinaryMask& pred, const BinaryMask& gt, const MetricConfig& cfg = {}, std::string image_id = {}) {
    require_same_shape(pred, gt, "pd_fa_fat");
    ImageMetrics m;
    m.image_id = std::move(image_id);
    detail::intersection_union(pred, gt, m.counts);
    const auto pred_clusters = cluster8(pred);
    const auto gt_clusters = cluster8(gt);
    const auto matches = match_targets(pred_clusters, gt_clusters, cfg);
    m.counts.n_all = gt_clusters.size();
    m.counts.n_pred = pred_clusters.size();
    m.counts.detected = matches.size();
    m.counts.t_false = pred_clusters.size() - matches.size();
    m.values = MetricValues::from(m.counts);
    return m;
}

inline MetricReport aggregate(std::vector<ImageMetrics> images, const MetricConfig& cfg = {}) {
    if (images.empty()) throw domain_error("aggregate: no images to aggregate");
    MetricReport r;
    r.config = cfg;
    for (const auto& im : images) r.counts += im.counts;
    r.values = MetricValues::from(r.counts);
    r.per_image = std::move(images);
    return r;
}

namespace detail {

inline nlohmann::json counts_json(const MetricCounts& c) {
    return {{"intersection", c.intersection}, {"union", c.union_px}, {"n_all", c.n_all},       {"n_pred", c.n_pred},
            {"detected", c.detected},         {"t_false", c.t_false},  {"false_px", c.false_px}, {"total_px", c.total_px}};
}

inline nlohmann::json values_json(const MetricValues& v, const MetricConfig& cfg) {
    return {{"iou", v.iou},           {"pd", v.pd},   {"fa", v.fa}, {"fa_scaled", v.fa * cfg.fa_scale},
            {"fat", v.fat},           {"fat_defined", v.fat_defined}};
}

}  // namespace detail

inline nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json per_image = nlohmann::json::array();
    for (const auto& im : r.per_image) {
        auto j = detail::values_json(im.values, r.config);
        j["image_id"] = im.image_id;
        j["counts"] = detail::counts_json(im.counts);
        per_image.push_back(std::move(j));
    }
    auto summary = detail::values_json(r.values, r.config);
    summary["counts"] = detail::counts_json(r.counts);
    return {{"config", {{"deviation_px", r.config.deviation_px}, {"fa_scale", r.config.fa_scale}}},
            {"aggregate", std::move(summary)},
            {"per_image", std::move(per_image)}};
}

/// One row per image: image_id,iou,pd,fa,fat,n_all,t_false. Fa is the raw
/// pixel ratio.
inline std::string to_csv(const MetricReport& r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "image_id,iou,pd,fa,fat,n_all,t_false\n";
    for (const auto& im : r.per_image) {
        out << im.image_id << ',' << im.values.iou << ',' << im.values.pd << ',' << im.values.fa << ',' << im.values.fat << ','
            << im.counts.n_all << ',' << im.counts.t_false << '\n';
    }
    return out.str();
}

}  // namespace forge
