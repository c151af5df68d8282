#pragma once

// Saliency binarization, eight-neighbourhood clustering and the false-alarm
// eliminators that turn candidate regions into a pseudo label: bounding-box
// matching (bbm) plus the three-pixel (tpm) and connected-region (erm)
// baselines.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "forge/core_types.hpp"

namespace forge {

enum class Matcher { bbm, tpm, erm, none };

inline const char* to_string(Matcher m) {
    switch (m) {
        case Matcher::bbm: return "bbm";
        case Matcher::tpm: return "tpm";
        case Matcher::erm: return "erm";
        case Matcher::none: return "none";
    }
    return "?";
}

inline Matcher matcher_from_string(const std::string& s) {
    if (s == "bbm") return Matcher::bbm;
    if (s == "tpm") return Matcher::tpm;
    if (s == "erm") return Matcher::erm;
    if (s == "none") return Matcher::none;
    throw config_error("unknown matcher '" + s + "' (expected bbm, tpm, erm or none)");
}

struct PostprocessConfig {
    double tau_s = 0.5;
    Matcher matcher = Matcher::bbm;
    double tpm_radius = 3.0;

    void validate() const {
        if (!(tau_s > 0.0 && tau_s < 1.0)) throw config_error("tau_s must lie in (0,1), got " + std::to_string(tau_s));
        if (!(tpm_radius > 0.0)) throw config_error("tpm_radius must be positive, got " + std::to_string(tpm_radius));
    }
};

/// A cluster retained by a matcher. `prompt` is empty for Matcher::none.
struct KeptCluster {
    std::optional<std::size_t> prompt;
    int label = 0;
    friend bool operator==(const KeptCluster&, const KeptCluster&) = default;
};

struct MatchOutcome {
    std::vector<KeptCluster> kept;          // in claim order
    std::vector<int> removed;               // ascending labels
    std::vector<std::size_t> unmatched_prompts;

    bool is_kept(int label) const {
        return std::any_of(kept.begin(), kept.end(), [&](const KeptCluster& k) { return k.label == label; });
    }
    std::vector<int> kept_labels() const {
        std::vector<int> out;
        for (const auto& k : kept) out.push_back(k.label);
        std::sort(out.begin(), out.end());
        return out;
    }
};

struct MatchResult {
    BinaryMask label;
    MatchOutcome outcome;
};

/// O_c: 1 where saliency strictly exceeds tau_s.
inline BinaryMask binarize(const FloatMap& saliency, double tau_s) {
    if (!(tau_s > 0.0 && tau_s < 1.0)) throw config_error("tau_s must lie in (0,1), got " + std::to_string(tau_s));
    std::vector<std::uint8_t> out(saliency.size());
    for (std::size_t i = 0; i < saliency.size(); ++i) out[i] = saliency[i] > tau_s ? 1 : 0;
    return BinaryMask(saliency.width(), saliency.height(), std::move(out));
}

namespace detail {

class DisjointSets {
public:
    int make() {
        parent_.push_back(static_cast<int>(parent_.size()));
        return parent_.back();
    }
    int find(int a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<int> parent_;
};

}  // namespace detail

/// Partition of foreground pixels into maximal eight-connected components.
/// Labels follow the raster-scan order of each component's first pixel.
inline ClusterSet cluster8(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    std::vector<int> provisional(mask.size(), -1);
    detail::DisjointSets sets;

    // First pass: provisional labels from the already-scanned neighbours
    // (W, NW, N, NE).
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            int assigned = -1;
            constexpr int dx[] = {-1, -1, 0, 1};
            constexpr int dy[] = {0, -1, -1, -1};
            for (int k = 0; k < 4; ++k) {
                const int nx = x + dx[k];
                const int ny = y + dy[k];
                if (nx < 0 || ny < 0 || nx >= w) continue;
                const int n = provisional[static_cast<std::size_t>(ny) * w + nx];
                if (n < 0) continue;
                if (assigned < 0) {
                    assigned = n;
                } else {
                    sets.unite(assigned, n);
                }
            }
            if (assigned < 0) assigned = sets.make();
            provisional[static_cast<std::size_t>(y) * w + x] = assigned;
        }
    }

    // Second pass: dense labels in order of first appearance.
    std::vector<int> final_of_root;
    std::vector<int> labels(mask.size(), 0);
    int next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (provisional[i] < 0) continue;
        const int root = sets.find(provisional[i]);
        if (static_cast<std::size_t>(root) >= final_of_root.size()) final_of_root.resize(root + 1, 0);
        if (final_of_root[root] == 0) final_of_root[root] = ++next;
        labels[i] = final_of_root[root];
    }
    return ClusterSet(w, h, std::move(labels));
}

namespace detail {

inline void require_same_image(const ClusterSet& candidates, const PromptSet& prompts) {
    prompts.validate_bounds(candidates.width(), candidates.height());
}

inline MatchResult finish(const ClusterSet& candidates, const PromptSet& prompts, std::vector<KeptCluster> kept) {
    std::vector<bool> kept_label(candidates.size() + 1, false);
    std::vector<bool> prompt_used(prompts.size(), false);
    std::vector<Pixel> pixels;
    for (const auto& k : kept) {
        kept_label[static_cast<std::size_t>(k.label)] = true;
        if (k.prompt) prompt_used[*k.prompt] = true;
        const auto& c = candidates.by_label(k.label);
        pixels.insert(pixels.end(), c.pixels.begin(), c.pixels.end());
    }
    MatchOutcome outcome;
    outcome.kept = std::move(kept);
    for (const auto& c : candidates.clusters()) {
        if (!kept_label[static_cast<std::size_t>(c.label)]) outcome.removed.push_back(c.label);
    }
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        if (!prompt_used[i]) outcome.unmatched_prompts.push_back(i);
    }
    return {mask_from_pixels(candidates.width(), candidates.height(), pixels), std::move(outcome)};
}

}  // namespace detail

/// Bounding box matching. Each prompt, in order, claims the first unclaimed
/// cluster (label order) whose inclusive bounding box contains it. A prompt
/// is its own single-point cluster, so its centre is the prompt itself.
inline MatchResult bbm(const ClusterSet& candidates, const PromptSet& prompts) {
    detail::require_same_image(candidates, prompts);
    std::vector<bool> claimed(candidates.size() + 1, false);
    std::vector<KeptCluster> kept;
    for (std::size_t k = 0; k < prompts.size(); ++k) {
        const auto center = prompts[k].point();
        for (const auto& c : candidates.clusters()) {
            if (claimed[static_cast<std::size_t>(c.label)]) continue;
            if (c.bbox.contains(center.x, center.y)) {
                claimed[static_cast<std::size_t>(c.label)] = true;
                kept.push_back({k, c.label});
                break;
            }
        }
    }
    return detail::finish(candidates, prompts, std::move(kept));
}

/// Three-pixel matching: a cluster survives when a prompt lies within
/// `radius` (Euclidean, inclusive) of its centroid. Pairs are claimed
/// greedily by ascending distance, ties by (prompt index, label), one
/// cluster per prompt and one prompt per cluster.
inline MatchResult tpm(const ClusterSet& candidates, const PromptSet& prompts, double radius) {
    if (!(radius > 0.0)) throw config_error("tpm radius must be positive");
    detail::require_same_image(candidates, prompts);
    struct Pair {
        double d;
        std::size_t prompt;
        int label;
    };
    std::vector<Pair> pairs;
    for (std::size_t k = 0; k < prompts.size(); ++k) {
        for (const auto& c : candidates.clusters()) {
            const double d = distance(prompts[k].point(), c.centroid);
            if (d <= radius) pairs.push_back({d, k, c.label});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::tie(a.d, a.prompt, a.label) < std::tie(b.d, b.prompt, b.label);
    });
    std::vector<bool> prompt_done(prompts.size(), false);
    std::vector<bool> claimed(candidates.size() + 1, false);
    std::vector<KeptCluster> kept;
    for (const auto& p : pairs) {
        if (prompt_done[p.prompt] || claimed[static_cast<std::size_t>(p.label)]) continue;
        prompt_done[p.prompt] = true;
        claimed[static_cast<std::size_t>(p.label)] = true;
        kept.push_back({p.prompt, p.label});
    }
    return detail::finish(candidates, prompts, std::move(kept));
}

/// Connected-region matching: a cluster survives when a prompt pixel is one
/// of its pixels. The first such prompt is recorded as the claimant.
inline MatchResult erm(const ClusterSet& candidates, const PromptSet& prompts) {
    detail::require_same_image(candidates, prompts);
    std::vector<bool> claimed(candidates.size() + 1, false);
    std::vector<KeptCluster> kept;
    for (std::size_t k = 0; k < prompts.size(); ++k) {
        const int label = candidates.label_at(prompts[k].x, prompts[k].y);
        if (label == 0 || claimed[static_cast<std::size_t>(label)]) continue;
        claimed[static_cast<std::size_t>(label)] = true;
        kept.push_back({k, label});
    }
    return detail::finish(candidates, prompts, std::move(kept));
}

/// No false-alarm elimination: every candidate is kept.
inline MatchResult keep_all(const ClusterSet& candidates, const PromptSet& prompts) {
    detail::require_same_image(candidates, prompts);
    std::vector<KeptCluster> kept;
    for (const auto& c : candidates.clusters()) kept.push_back({std::nullopt, c.label});
    auto result = detail::finish(candidates, prompts, std::move(kept));
    result.outcome.unmatched_prompts.clear();
    return result;
}

inline MatchResult match(const ClusterSet& candidates, const PromptSet& prompts, const PostprocessConfig& cfg) {
    switch (cfg.matcher) {
        case Matcher::bbm: return bbm(candidates, prompts);
        case Matcher::tpm: return tpm(candidates, prompts, cfg.tpm_radius);
        case Matcher::erm: return erm(candidates, prompts);
        case Matcher::none: return keep_all(candidates, prompts);
    }
    throw config_error("unhandled matcher");
}

}  // namespace forge
