#pragma once

// Raster, mask, geometry and prompt types shared by every stage of the
// pseudo-label pipeline. Coordinates are 0-based, x = column, y = row,
// and all rasters are stored row-major.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forge/errors.hpp"

namespace forge {

struct unit_interval_values {
    static constexpr const char* name = "RasterImage";
    static bool valid(double v) { return v >= 0.0 && v <= 1.0; }
};

struct binary_values {
    static constexpr const char* name = "BinaryMask";
    static bool valid(std::uint8_t v) { return v <= 1; }
};

struct finite_values {
    static constexpr const char* name = "FloatMap";
    static bool valid(double v) { return std::isfinite(v); }
};

/// Immutable W x H raster whose element invariant is enforced by `Values`.
template <typename T, typename Values>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    Grid(int width, int height) : Grid(width, height, std::vector<T>(checked_area(width, height), T{})) {}

    Grid(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_area(width, height)) {
            throw shape_error(std::string(Values::name) + ": data length " + std::to_string(data_.size()) +
                              " does not match " + std::to_string(width) + "x" + std::to_string(height));
        }
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!Values::valid(data_[i])) {
                throw domain_error(std::string(Values::name) + ": invalid value at index " + std::to_string(i));
            }
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool in_bounds(long x, long y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    T at(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    T operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<const T> values() const noexcept { return data_; }
    const std::vector<T>& vector() const noexcept { return data_; }

    template <typename U, typename V>
    bool same_shape(const Grid<U, V>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    std::string shape_string() const { return std::to_string(width_) + "x" + std::to_string(height_); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static std::size_t checked_area(int width, int height) {
        if (width < 1 || height < 1) {
            throw shape_error(std::string(Values::name) + ": dimensions must be positive, got " +
                              std::to_string(width) + "x" + std::to_string(height));
        }
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Single-channel intensity image normalized to [0,1].
using RasterImage = Grid<double, unit_interval_values>;
/// Row-major {0,1} mask.
using BinaryMask = Grid<std::uint8_t, binary_values>;
/// Row-major real-valued map (energy, edge and saliency maps).
using FloatMap = Grid<double, finite_values>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (!a.same_shape(b)) {
        throw shape_error(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    }
}

inline std::size_t count_nonzero(const BinaryMask& mask) {
    return static_cast<std::size_t>(std::count(mask.values().begin(), mask.values().end(), std::uint8_t{1}));
}

struct Pixel {
    int x = 0;
    int y = 0;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class PromptKind { centroid, coarse };

inline const char* to_string(PromptKind kind) { return kind == PromptKind::centroid ? "centroid" : "coarse"; }

inline PromptKind prompt_kind_from_string(const std::string& s) {
    if (s == "centroid") return PromptKind::centroid;
    if (s == "coarse") return PromptKind::coarse;
    throw format_error("unknown prompt kind '" + s + "' (expected centroid or coarse)");
}

struct Prompt {
    int x = 0;
    int y = 0;
    PromptKind kind = PromptKind::centroid;

    Pixel pixel() const noexcept { return {x, y}; }
    Point2 point() const noexcept { return {static_cast<double>(x), static_cast<double>(y)}; }
    friend bool operator==(const Prompt&, const Prompt&) = default;
};

/// Ordered click prompts for one image. Two prompts never share coordinates.
class PromptSet {
public:
    PromptSet() = default;

    PromptSet(std::string image_id, std::vector<Prompt> prompts)
        : image_id_(std::move(image_id)), prompts_(std::move(prompts)) {
        for (std::size_t i = 0; i < prompts_.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (prompts_[i].x == prompts_[j].x && prompts_[i].y == prompts_[j].y) {
                    throw domain_error("duplicate prompt at (" + std::to_string(prompts_[i].x) + "," +
                                       std::to_string(prompts_[i].y) + ") in image '" + image_id_ + "'");
                }
            }
        }
    }

    const std::string& image_id() const noexcept { return image_id_; }
    const std::vector<Prompt>& prompts() const noexcept { return prompts_; }
    std::size_t size() const noexcept { return prompts_.size(); }
    bool empty() const noexcept { return prompts_.empty(); }
    const Prompt& operator[](std::size_t i) const { return prompts_[i]; }
    auto begin() const noexcept { return prompts_.begin(); }
    auto end() const noexcept { return prompts_.end(); }

    PromptSet with_added(Prompt p) const {
        auto next = prompts_;
        next.push_back(p);
        return PromptSet(image_id_, std::move(next));
    }

    PromptSet without_last() const {
        auto next = prompts_;
        if (!next.empty()) next.pop_back();
        return PromptSet(image_id_, std::move(next));
    }

    /// Throws coordinate_error naming the first prompt outside [0,W)x[0,H).
    void validate_bounds(int width, int height) const {
        for (std::size_t i = 0; i < prompts_.size(); ++i) {
            const auto& p = prompts_[i];
            if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) {
                throw coordinate_error("prompt #" + std::to_string(i) + " at (" + std::to_string(p.x) + "," +
                                           std::to_string(p.y) + ") lies outside the " + std::to_string(width) +
                                           "x" + std::to_string(height) + " image",
                                       p.x, p.y);
            }
        }
    }

    friend bool operator==(const PromptSet&, const PromptSet&) = default;

private:
    std::string image_id_;
    std::vector<Prompt> prompts_;
};

/// Inclusive pixel extent of a region.
struct BoundingBox {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    bool contains(double x, double y) const noexcept { return x1 <= x && x <= x2 && y1 <= y && y <= y2; }
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline BoundingBox bbox_of(std::span<const Pixel> pixels) {
    if (pixels.empty()) throw domain_error("bbox_of: empty pixel list");
    BoundingBox box{pixels[0].x, pixels[0].y, pixels[0].x, pixels[0].y};
    for (const auto& p : pixels.subspan(1)) {
        box.x1 = std::min(box.x1, p.x);
        box.y1 = std::min(box.y1, p.y);
        box.x2 = std::max(box.x2, p.x);
        box.y2 = std::max(box.y2, p.y);
    }
    return box;
}

/// Mean pixel coordinate. Sums are accumulated in integers so the result is
/// the correctly rounded quotient.
inline Point2 centroid_of(std::span<const Pixel> pixels) {
    if (pixels.empty()) throw domain_error("centroid_of: empty pixel list");
    std::int64_t sx = 0;
    std::int64_t sy = 0;
    for (const auto& p : pixels) {
        sx += p.x;
        sy += p.y;
    }
    const auto n = static_cast<double>(pixels.size());
    return {static_cast<double>(sx) / n, static_cast<double>(sy) / n};
}

struct Cluster {
    int label = 0;
    std::vector<Pixel> pixels;  // raster order
    BoundingBox bbox;
    Point2 centroid;
};

/// Labeled regions of one image. Labels are dense 1..m; label 0 is background.
class ClusterSet {
public:
    ClusterSet() = default;

    /// Builds clusters from a label map. Connectivity is the producer's
    /// responsibility; density of labels and shape are checked here.
    ClusterSet(int width, int height, std::vector<int> label_map) : width_(width), height_(height), labels_(std::move(label_map)) {
        if (width < 1 || height < 1 || labels_.size() != static_cast<std::size_t>(width) * height) {
            throw shape_error("ClusterSet: label map does not match " + std::to_string(width) + "x" + std::to_string(height));
        }
        int max_label = 0;
        for (int l : labels_) {
            if (l < 0) throw domain_error("ClusterSet: negative label");
            max_label = std::max(max_label, l);
        }
        clusters_.resize(static_cast<std::size_t>(max_label));
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const int l = labels_[static_cast<std::size_t>(y) * width + x];
                if (l > 0) clusters_[static_cast<std::size_t>(l - 1)].pixels.push_back({x, y});
            }
        }
        for (std::size_t i = 0; i < clusters_.size(); ++i) {
            auto& c = clusters_[i];
            if (c.pixels.empty()) throw domain_error("ClusterSet: labels are not dense, missing " + std::to_string(i + 1));
            c.label = static_cast<int>(i + 1);
            c.bbox = bbox_of(c.pixels);
            c.centroid = centroid_of(c.pixels);
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const std::vector<Cluster>& clusters() const noexcept { return clusters_; }
    std::size_t size() const noexcept { return clusters_.size(); }
    const Cluster& by_label(int label) const { return clusters_.at(static_cast<std::size_t>(label - 1)); }
    const std::vector<int>& label_map() const noexcept { return labels_; }
    int label_at(int x, int y) const noexcept { return labels_[static_cast<std::size_t>(y) * width_ + x]; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Cluster> clusters_;
    std::vector<int> labels_;
};

/// Prompt map: 1 exactly at each prompt coordinate.
inline BinaryMask mask_from_prompts(const PromptSet& prompts, int width, int height) {
    prompts.validate_bounds(width, height);
    std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height, 0);
    for (const auto& p : prompts) data[static_cast<std::size_t>(p.y) * width + p.x] = 1;
    return BinaryMask(width, height, std::move(data));
}

/// Mask with the given pixels set; used to materialise cluster unions.
inline BinaryMask mask_from_pixels(int width, int height, std::span<const Pixel> pixels) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height, 0);
    for (const auto& p : pixels) data[static_cast<std::size_t>(p.y) * width + p.x] = 1;
    return BinaryMask(width, height, std::move(data));
}

}  // namespace forge
