#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "forge/core_types.hpp"
#include "forge/prompt_encoding.hpp"

namespace forge {

/// Sobel gradient magnitude with clamp-to-edge borders, scaled by its global
/// maximum into [0,1]. A flat image yields an all-zero map.
inline FloatMap sobel(const RasterImage& image) {
    const int w = image.width();
    const int h = image.height();
    auto px = [&](int x, int y) { return image.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };

    std::vector<double> mag(image.size(), 0.0);
    double peak = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                              (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            const double m = std::sqrt(gx * gx + gy * gy);
            mag[static_cast<std::size_t>(y) * w + x] = m;
            peak = std::max(peak, m);
        }
    }
    if (peak > 0.0) {
        for (auto& m : mag) m /= peak;
    }
    return FloatMap(w, h, std::move(mag));
}

/// Three-channel backbone input in fixed order: image, edge map, energy map.
class ModelInput {
public:
    static constexpr int channel_count = 3;
    enum Channel { image_channel = 0, edge_channel = 1, energy_channel = 2 };

    ModelInput(FloatMap image, FloatMap edges, FloatMap energy)
        : channels_{std::move(image), std::move(edges), std::move(energy)} {
        require_same_shape(channels_[0], channels_[1], "ModelInput edge channel");
        require_same_shape(channels_[0], channels_[2], "ModelInput energy channel");
    }

    int width() const noexcept { return channels_[0].width(); }
    int height() const noexcept { return channels_[0].height(); }
    const FloatMap& channel(int c) const { return channels_.at(static_cast<std::size_t>(c)); }
    const FloatMap& image() const noexcept { return channels_[image_channel]; }
    const FloatMap& edges() const noexcept { return channels_[edge_channel]; }
    const FloatMap& energy() const noexcept { return channels_[energy_channel]; }
    const std::array<FloatMap, 3>& channels() const noexcept { return channels_; }

    friend bool operator==(const ModelInput&, const ModelInput&) = default;

private:
    std::array<FloatMap, 3> channels_;
};

inline FloatMap to_float_map(const RasterImage& image) { return FloatMap(image.width(), image.height(), image.vector()); }

inline RasterImage to_raster(const FloatMap& map) { return RasterImage(map.width(), map.height(), map.vector()); }

inline ModelInput assemble(const RasterImage& image, const EnergyMap& energy) {
    if (!image.same_shape(energy.map)) {
        throw shape_error("assemble: image is " + image.shape_string() + " but energy map is " + energy.map.shape_string());
    }
    return ModelInput(to_float_map(image), sobel(image), energy.map);
}

/// What every saliency backend promises. The energy map is handed to the
/// backend again alongside the assembled input so that it can condition its
/// final mapping stage on it at full resolution; the output is a single
/// [0,1] map with the input's dimensions.
struct BackendContract {
    static constexpr int input_channels = ModelInput::channel_count;
    static constexpr bool energy_at_tail = true;

    /// Throws contract_error instead of clamping.
    static void check_output(const ModelInput& input, const FloatMap& saliency, const std::string& backend) {
        if (saliency.width() != input.width() || saliency.height() != input.height()) {
            throw contract_error(backend + " returned a " + saliency.shape_string() + " saliency map for a " +
                                 input.image().shape_string() + " input");
        }
        for (std::size_t i = 0; i < saliency.size(); ++i) {
            if (!(saliency[i] >= 0.0 && saliency[i] <= 1.0)) {
                throw contract_error(backend + " returned saliency " + std::to_string(saliency[i]) + " outside [0,1] at index " +
                                     std::to_string(i));
            }
        }
    }
};

}  // namespace forge
