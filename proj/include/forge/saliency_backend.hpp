#pragma once

// Providers of the saliency map O_s. Three kinds exist:
//  - reference: a deterministic local-contrast region grower seeded at each
//    prompt, so the whole pipeline runs without a trained model;
//  - precomputed: maps produced offline, loaded per image id;
//  - remote: a trained backbone behind an HTTP endpoint speaking TNSR.
// Every kind's output is checked against BackendContract.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <httplib.h>

#include "forge/core_types.hpp"
#include "forge/input_assembly.hpp"
#include "forge/io.hpp"
#include "forge/prompt_encoding.hpp"

namespace forge {

struct ReferenceSegmenterConfig {
    int window = 8;              // background ring inner radius
    double growth_factor = 0.5;  // k in mu_bg + k (peak - mu_bg)
    int max_radius = 16;         // Chebyshev cap around the seed

    void validate() const {
        if (window < 2) throw config_error("reference window must be >= 2");
        if (!(growth_factor > 0.0 && growth_factor <= 1.0)) throw config_error("reference growth factor must lie in (0,1]");
        if (max_radius < 1) throw config_error("reference max_radius must be >= 1");
    }
};

struct ReferenceBackend {
    ReferenceSegmenterConfig config;
};

/// `pattern` contains "{id}", replaced by the image id. Files ending in
/// ".tnsr" are read as TNSR, anything else as a grayscale PNG.
struct PrecomputedBackend {
    std::string pattern;
};

struct RemoteBackend {
    std::string endpoint;  // e.g. http://127.0.0.1:9000
    int timeout_ms = 10000;
    int retries = 2;
    int max_in_flight = 4;
};

using BackendKind = std::variant<ReferenceBackend, PrecomputedBackend, RemoteBackend>;

/// "reference" | "precomputed:PATTERN" | "remote:URL"
inline BackendKind parse_backend(const std::string& spec) {
    if (spec == "reference") return ReferenceBackend{};
    if (spec.starts_with("precomputed:")) {
        auto pattern = spec.substr(12);
        if (pattern.empty()) throw config_error("precomputed backend needs a path pattern");
        return PrecomputedBackend{pattern};
    }
    if (spec.starts_with("remote:")) {
        auto url = spec.substr(7);
        if (url.empty()) throw config_error("remote backend needs an endpoint URL");
        return RemoteBackend{url};
    }
    throw config_error("unknown backend '" + spec + "' (expected reference, precomputed:PATTERN or remote:URL)");
}

inline std::string describe(const BackendKind& kind) {
    return std::visit(
        [](const auto& k) -> std::string {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ReferenceBackend>) {
                return "reference(window=" + std::to_string(k.config.window) + ",k=" + std::to_string(k.config.growth_factor) +
                       ",max_radius=" + std::to_string(k.config.max_radius) + ")";
            } else if constexpr (std::is_same_v<K, PrecomputedBackend>) {
                return "precomputed:" + k.pattern;
            } else {
                return "remote:" + k.endpoint;
            }
        },
        kind);
}

// ---------------------------------------------------------------------------
// Reference local-contrast segmenter

/// Brightest pixel in the 5x5 neighbourhood of the prompt (first in raster
/// order on ties).
inline Pixel snap_seed(const FloatMap& image, const Prompt& p) {
    Pixel best{p.x, p.y};
    double best_v = -1.0;
    for (int y = std::max(0, p.y - 2); y <= std::min(image.height() - 1, p.y + 2); ++y) {
        for (int x = std::max(0, p.x - 2); x <= std::min(image.width() - 1, p.x + 2); ++x) {
            if (image.at(x, y) > best_v) {
                best_v = image.at(x, y);
                best = {x, y};
            }
        }
    }
    return best;
}

/// Mean intensity over the square ring window <= d <= window+2 (Chebyshev)
/// around the seed, clipped to the image. Empty ring yields NaN.
inline double ring_mean(const FloatMap& image, Pixel seed, int window) {
    const int outer = window + 2;
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = std::max(0, seed.y - outer); y <= std::min(image.height() - 1, seed.y + outer); ++y) {
        for (int x = std::max(0, seed.x - outer); x <= std::min(image.width() - 1, seed.x + outer); ++x) {
            const int d = std::max(std::abs(x - seed.x), std::abs(y - seed.y));
            if (d < window) continue;
            sum += image.at(x, y);
            ++n;
        }
    }
    return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

inline FloatMap reference_segment(const FloatMap& image, const EnergyMap& energy, const ReferenceSegmenterConfig& cfg = {}) {
    cfg.validate();
    require_same_shape(image, energy.map, "reference_segment");
    const int w = image.width();
    const int h = image.height();
    std::vector<double> out(image.size(), 0.0);
    std::vector<int> visited(image.size(), -1);
    int region = 0;
    for (const auto& prompt : energy.prompts) {
        ++region;
        const Pixel seed = snap_seed(image, prompt);
        const double peak = image.at(seed.x, seed.y);
        const double bg = ring_mean(image, seed, cfg.window);
        if (!(peak > bg)) continue;  // flat or inverted neighbourhood: no candidate
        const double span = peak - bg;
        const double threshold = bg + cfg.growth_factor * span;

        std::vector<Pixel> stack{seed};
        visited[static_cast<std::size_t>(seed.y) * w + seed.x] = region;
        while (!stack.empty()) {
            const Pixel p = stack.back();
            stack.pop_back();
            const std::size_t idx = static_cast<std::size_t>(p.y) * w + p.x;
            out[idx] = std::max(out[idx], std::clamp((image[idx] - bg) / span, 0.0, 1.0));
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = p.x + dx;
                    const int ny = p.y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (std::max(std::abs(nx - seed.x), std::abs(ny - seed.y)) > cfg.max_radius) continue;
                    const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
                    if (visited[n] == region || image[n] < threshold) continue;
                    visited[n] = region;
                    stack.push_back({nx, ny});
                }
            }
        }
    }
    return FloatMap(w, h, std::move(out));
}

inline FloatMap reference_segment(const RasterImage& image, const EnergyMap& energy, const ReferenceSegmenterConfig& cfg = {}) {
    return reference_segment(to_float_map(image), energy, cfg);
}

// ---------------------------------------------------------------------------
// Backend dispatch

inline std::string expand_pattern(const std::string& pattern, const std::string& image_id) {
    std::string out = pattern;
    for (auto pos = out.find("{id}"); pos != std::string::npos; pos = out.find("{id}", pos + image_id.size())) {
        out.replace(pos, 4, image_id);
    }
    return out;
}

namespace detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // base path without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = url.find('/', start);
    SplitUrl out{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

}  // namespace detail

/// Callable saliency provider. Safe for concurrent `infer` calls; remote
/// requests are bounded by `max_in_flight`.
class SaliencyBackend {
public:
    explicit SaliencyBackend(BackendKind kind) : kind_(std::move(kind)) {
        if (const auto* r = std::get_if<RemoteBackend>(&kind_)) {
            if (r->timeout_ms <= 0) throw config_error("remote timeout must be positive");
            if (r->retries < 0) throw config_error("remote retry count must be non-negative");
            if (r->max_in_flight < 1) throw config_error("remote in-flight limit must be >= 1");
            in_flight_ = std::make_shared<std::counting_semaphore<>>(r->max_in_flight);
        }
        if (const auto* r = std::get_if<ReferenceBackend>(&kind_)) r->config.validate();
    }

    const BackendKind& kind() const noexcept { return kind_; }
    std::string name() const { return describe(kind_); }
    bool deterministic() const noexcept { return !std::holds_alternative<RemoteBackend>(kind_); }

    FloatMap infer(const ModelInput& input, const EnergyMap& energy) const {
        require_same_shape(input.image(), energy.map, "infer");
        FloatMap out = std::visit([&](const auto& k) { return run(k, input, energy); }, kind_);
        BackendContract::check_output(input, out, name());
        return out;
    }

private:
    static FloatMap run(const ReferenceBackend& k, const ModelInput& input, const EnergyMap& energy) {
        return reference_segment(input.image(), energy, k.config);
    }

    static FloatMap run(const PrecomputedBackend& k, const ModelInput&, const EnergyMap& energy) {
        const fs::path path = expand_pattern(k.pattern, energy.prompts.image_id());
        if (path.extension() == ".tnsr") return load_floatmap(path);
        return to_float_map(load_image(path));
    }

    FloatMap run(const RemoteBackend& k, const ModelInput& input, const EnergyMap&) const {
        const auto url = detail::split_url(k.endpoint);
        const auto body = encode_model_input(input);
        const int attempts = 1 + k.retries;
        std::string last_error;
        in_flight_->acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{*in_flight_};
        for (int attempt = 1; attempt <= attempts; ++attempt) {
            httplib::Client client(url.origin);
            const auto timeout = std::chrono::milliseconds(k.timeout_ms);
            client.set_connection_timeout(timeout);
            client.set_read_timeout(timeout);
            client.set_write_timeout(timeout);
            auto res = client.Post(url.path + "/infer", body, "application/octet-stream");
            if (!res) {
                last_error = httplib::to_string(res.error());
            } else if (res->status != 200) {
                last_error = "HTTP " + std::to_string(res->status);
            } else {
                std::vector<FloatMap> channels;
                try {
                    channels = tnsr::decode(res->body);
                } catch (const error& e) {
                    throw contract_error("remote " + k.endpoint + " returned an invalid TNSR body: " + e.what());
                }
                if (channels.size() != 1) {
                    throw contract_error("remote " + k.endpoint + " returned " + std::to_string(channels.size()) +
                                         " channels, expected 1");
                }
                return std::move(channels.front());
            }
            if (attempt < attempts) std::this_thread::sleep_for(std::chrono::milliseconds(20 * attempt));
        }
        throw transport_error("remote backend " + k.endpoint + " failed after " + std::to_string(attempts) +
                                  " attempt(s): " + last_error,
                              k.endpoint, attempts);
    }

    BackendKind kind_;
    std::shared_ptr<std::counting_semaphore<>> in_flight_;
};

inline FloatMap infer(const ModelInput& input, const EnergyMap& energy, const BackendKind& kind) {
    return SaliencyBackend(kind).infer(input, energy);
}

}  // namespace forge
