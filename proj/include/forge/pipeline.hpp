#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/core_types.hpp"
#include "forge/input_assembly.hpp"
#include "forge/postprocess.hpp"
#include "forge/prompt_encoding.hpp"
#include "forge/saliency_backend.hpp"

namespace forge {

struct PipelineConfig {
    TeiConfig tei;
    PostprocessConfig post;

    void validate() const {
        tei.validate();
        post.validate();
    }
};

struct PipelineResult {
    EnergyMap energy;
    FloatMap saliency;
    BinaryMask candidates;
    ClusterSet clusters;
    BinaryMask label;
    MatchOutcome outcome;
};

/// prompts -> energy map -> model input -> saliency -> candidate map ->
/// clusters -> false-alarm elimination -> pseudo label.
inline PipelineResult run_pipeline(const RasterImage& image, const PromptSet& prompts, const SaliencyBackend& backend,
                                   const PipelineConfig& cfg) {
    cfg.validate();
    auto energy = tei_encode(prompts, image.width(), image.height(), cfg.tei);
    const auto input = assemble(image, energy);
    auto saliency = backend.infer(input, energy);
    auto candidates = binarize(saliency, cfg.post.tau_s);
    auto clusters = cluster8(candidates);
    auto matched = match(clusters, prompts, cfg.post);
    return {std::move(energy),   std::move(saliency),      std::move(candidates), std::move(clusters),
            std::move(matched.label), std::move(matched.outcome)};
}

inline nlohmann::json to_json(const PipelineConfig& cfg) {
    return {{"sigma", cfg.tei.sigma},
            {"truncation_radius", cfg.tei.radius()},
            {"combine", cfg.tei.combine == BlobCombine::sum ? "sum" : "max"},
            {"tau_s", cfg.post.tau_s},
            {"matcher", to_string(cfg.post.matcher)},
            {"tpm_radius", cfg.post.tpm_radius}};
}

/// Row-major run lengths of a mask, alternating background/foreground and
/// starting with a (possibly empty) background run.
struct RunLength {
    int width = 0;
    int height = 0;
    std::vector<std::uint64_t> runs;
    friend bool operator==(const RunLength&, const RunLength&) = default;
};

inline RunLength rle_encode(const BinaryMask& mask) {
    RunLength out{mask.width(), mask.height(), {}};
    std::uint8_t current = 0;
    std::uint64_t n = 0;
    for (auto v : mask.values()) {
        if (v != current) {
            out.runs.push_back(n);
            current = v;
            n = 0;
        }
        ++n;
    }
    out.runs.push_back(n);
    return out;
}

inline BinaryMask rle_decode(const RunLength& rle) {
    std::vector<std::uint8_t> data;
    data.reserve(static_cast<std::size_t>(rle.width) * rle.height);
    std::uint8_t value = 0;
    for (auto n : rle.runs) {
        if (data.size() + n > static_cast<std::size_t>(rle.width) * rle.height) throw format_error("RLE runs exceed mask size");
        data.insert(data.end(), n, value);
        value ^= 1;
    }
    if (data.size() != static_cast<std::size_t>(rle.width) * rle.height) throw format_error("RLE runs do not cover the mask");
    return BinaryMask(rle.width, rle.height, std::move(data));
}

inline nlohmann::json to_json(const RunLength& rle) {
    return {{"width", rle.width}, {"height", rle.height}, {"runs", rle.runs}};
}

}  // namespace forge
