#pragma once

// Target energy initialization: every click prompt is expanded into an
// isotropic Gaussian blob, and the blobs of one image are accumulated into
// a single energy map. Also derives centroid/coarse prompts from labeled
// ground truth for benchmark runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "forge/core_types.hpp"
#include "forge/postprocess.hpp"

namespace forge {

enum class BlobCombine { sum, max };

struct TeiConfig {
    double sigma = 4.0;
    /// Blob support radius; defaults to ceil(3 sigma).
    std::optional<double> truncation_radius;
    BlobCombine combine = BlobCombine::sum;

    double radius() const { return truncation_radius.value_or(std::ceil(3.0 * sigma)); }

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw config_error("TEI sigma must be positive, got " + std::to_string(sigma));
        if (!(radius() >= 1.0)) throw config_error("TEI truncation radius must be >= 1, got " + std::to_string(radius()));
    }
};

struct EnergyMap {
    FloatMap map;
    PromptSet prompts;
};

/// Gaussian blob value at offset (dx, dy); exactly zero beyond `truncation_radius`.
inline double gaussian_at(double dx, double dy, double sigma, double truncation_radius) {
    if (!(sigma > 0.0)) throw config_error("gaussian_at: sigma must be positive, got " + std::to_string(sigma));
    const double r2 = dx * dx + dy * dy;
    if (std::sqrt(r2) > truncation_radius) return 0.0;
    return std::exp(-r2 / (2.0 * sigma * sigma));
}

inline double gaussian_at(double dx, double dy, const TeiConfig& cfg) {
    cfg.validate();
    return gaussian_at(dx, dy, cfg.sigma, cfg.radius());
}

inline EnergyMap tei_encode(const PromptSet& prompts, int width, int height, const TeiConfig& cfg = {}) {
    cfg.validate();
    prompts.validate_bounds(width, height);
    const double radius = cfg.radius();
    const int reach = static_cast<int>(std::floor(radius));
    std::vector<double> data(static_cast<std::size_t>(width) * height, 0.0);
    for (const auto& p : prompts) {
        const int x0 = std::max(0, p.x - reach);
        const int x1 = std::min(width - 1, p.x + reach);
        const int y0 = std::max(0, p.y - reach);
        const int y1 = std::min(height - 1, p.y + reach);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double v = gaussian_at(x - p.x, y - p.y, cfg.sigma, radius);
                if (v == 0.0) continue;
                double& cell = data[static_cast<std::size_t>(y) * width + x];
                cell = cfg.combine == BlobCombine::sum ? cell + v : std::max(cell, v);
            }
        }
    }
    return {FloatMap(width, height, std::move(data)), prompts};
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

/// One prompt per eight-connected ground-truth component.
///
/// centroid: the component centroid rounded to the nearest pixel; when that
/// pixel is not part of the component, the closest component pixel to it is
/// used (ties resolved by raster order).
/// coarse: a uniformly drawn component pixel from an mt19937_64 stream
/// seeded by (seed, image_id, component label).
inline PromptSet derive_prompts(const BinaryMask& gt, PromptKind mode, std::uint64_t seed, const std::string& image_id = {}) {
    const auto components = cluster8(gt);
    std::vector<Prompt> prompts;
    prompts.reserve(components.size());
    for (const auto& c : components.clusters()) {
        Pixel chosen{};
        if (mode == PromptKind::centroid) {
            const Pixel rounded{static_cast<int>(std::lround(c.centroid.x)), static_cast<int>(std::lround(c.centroid.y))};
            if (gt.in_bounds(rounded.x, rounded.y) && components.label_at(rounded.x, rounded.y) == c.label) {
                chosen = rounded;
            } else {
                long best = std::numeric_limits<long>::max();
                for (const auto& p : c.pixels) {
                    const long dx = p.x - rounded.x;
                    const long dy = p.y - rounded.y;
                    const long d2 = dx * dx + dy * dy;
                    if (d2 < best) {
                        best = d2;
                        chosen = p;
                    }
                }
            }
        } else {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(detail::fnv1a(image_id)),
                              static_cast<std::uint32_t>(detail::fnv1a(image_id) >> 32),
                              static_cast<std::uint32_t>(c.label)};
            std::mt19937_64 rng(seq);
            // Plain modulo keeps the draw identical across standard libraries;
            // the bias is negligible for component sizes far below 2^64.
            chosen = c.pixels[static_cast<std::size_t>(rng() % c.pixels.size())];
        }
        prompts.push_back({chosen.x, chosen.y, mode});
    }
    return PromptSet(image_id, std::move(prompts));
}

}  // namespace forge
