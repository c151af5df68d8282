#pragma once

// Batch entry points behind `forge generate`, `forge evaluate` and
// `forge encode`. Each returns a process exit status; per-image failures
// are logged and counted rather than aborting the run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "forge/io.hpp"
#include "forge/metrics.hpp"
#include "forge/pipeline.hpp"
#include "forge/saliency_backend.hpp"

namespace forge {

/// Log level from FORGE_LOG (trace, debug, info, warn, error, critical, off).
inline void configure_logging() {
    if (const char* level = std::getenv("FORGE_LOG")) {
        spdlog::set_level(spdlog::level::from_str(level));
    } else {
        spdlog::set_level(spdlog::level::info);
    }
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads (0 = hardware).
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < jobs; ++t) {
        workers.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

struct GenerateOptions {
    fs::path manifest;
    BackendKind backend = ReferenceBackend{};
    PipelineConfig pipeline;
    fs::path out;
    unsigned jobs = 0;
};

struct ImageRun {
    std::string image_id;
    bool ok = false;
    double elapsed_ms = 0.0;
    std::size_t prompts = 0;
    std::size_t kept = 0;
    std::size_t candidates = 0;
    std::string error;
};

inline nlohmann::json generate_config_json(const GenerateOptions& opt) {
    auto j = to_json(opt.pipeline);
    j["backend"] = describe(opt.backend);
    return j;
}

/// Writes <out>/<image_id>.png for each manifest image and <out>/summary.json.
inline int cmd_generate(const GenerateOptions& opt) {
    DatasetManifest manifest;
    try {
        opt.pipeline.validate();
        manifest = load_manifest(opt.manifest);
        fs::create_directories(opt.out);
    } catch (const std::exception& e) {
        spdlog::error("generate: {}", e.what());
        return 2;
    }
    const SaliencyBackend backend(opt.backend);
    std::vector<ImageRun> runs(manifest.images.size());
    parallel_for(manifest.images.size(), opt.jobs, [&](std::size_t i) {
        const auto& entry = manifest.images[i];
        auto& run = runs[i];
        run.image_id = entry.image_id;
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto image = load_image(entry.image_path);
            const auto prompts = resolve_prompts(entry);
            const auto result = run_pipeline(image, prompts, backend, opt.pipeline);
            save_mask(result.label, opt.out / (entry.image_id + ".png"));
            run.prompts = prompts.size();
            run.kept = result.outcome.kept.size();
            run.candidates = result.clusters.size();
            run.ok = true;
        } catch (const std::exception& e) {
            run.error = e.what();
            spdlog::error("generate: image '{}' failed: {}", entry.image_id, e.what());
        }
        run.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        spdlog::debug("generate: '{}' done in {:.2f} ms", entry.image_id, run.elapsed_ms);
    });

    const auto config = generate_config_json(opt);
    nlohmann::json images = nlohmann::json::array();
    std::size_t failed = 0;
    for (const auto& r : runs) {
        nlohmann::json j = {{"image_id", r.image_id}, {"ok", r.ok},   {"elapsed_ms", r.elapsed_ms},
                            {"prompts", r.prompts},   {"kept", r.kept}, {"candidates", r.candidates}};
        if (!r.ok) {
            j["error"] = r.error;
            ++failed;
        }
        images.push_back(std::move(j));
    }
    const nlohmann::json summary = {{"config", config},
                                    {"config_hash", hex64(detail::fnv1a(config.dump()))},
                                    {"total", runs.size()},
                                    {"failed", failed},
                                    {"images", std::move(images)}};
    try {
        write_file(opt.out / "summary.json", summary.dump(2) + "\n");
    } catch (const std::exception& e) {
        spdlog::error("generate: {}", e.what());
        return 2;
    }
    spdlog::info("generate: {} image(s), {} failed", runs.size(), failed);
    return failed == 0 ? 0 : 1;
}

/// Image ids of the *.png files directly inside `dir`, sorted.
inline std::map<std::string, fs::path> png_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw io_error("'" + dir.string() + "' is not a directory");
    std::map<std::string, fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".png") out.emplace(e.path().stem().string(), e.path());
    }
    return out;
}

class id_mismatch_error : public domain_error {
public:
    id_mismatch_error(std::vector<std::string> missing_pred, std::vector<std::string> missing_gt)
        : domain_error(describe_missing(missing_pred, missing_gt)),
          missing_pred_(std::move(missing_pred)),
          missing_gt_(std::move(missing_gt)) {}
    const std::vector<std::string>& missing_pred() const noexcept { return missing_pred_; }
    const std::vector<std::string>& missing_gt() const noexcept { return missing_gt_; }

private:
    static std::string describe_missing(const std::vector<std::string>& pred, const std::vector<std::string>& gt) {
        std::string s = "prediction and ground-truth ids differ;";
        if (!pred.empty()) {
            s += " missing predictions:";
            for (const auto& id : pred) s += " " + id;
            s += ";";
        }
        if (!gt.empty()) {
            s += " missing ground truth:";
            for (const auto& id : gt) s += " " + id;
        }
        return s;
    }
    std::vector<std::string> missing_pred_;
    std::vector<std::string> missing_gt_;
};

inline MetricReport evaluate_dirs(const fs::path& pred_dir, const fs::path& gt_dir, const MetricConfig& cfg, unsigned jobs = 0) {
    cfg.validate();
    const auto preds = png_files(pred_dir);
    const auto gts = png_files(gt_dir);
    std::vector<std::string> missing_pred;
    std::vector<std::string> missing_gt;
    for (const auto& [id, _] : gts) {
        if (!preds.contains(id)) missing_pred.push_back(id);
    }
    for (const auto& [id, _] : preds) {
        if (!gts.contains(id)) missing_gt.push_back(id);
    }
    if (!missing_pred.empty() || !missing_gt.empty()) throw id_mismatch_error(missing_pred, missing_gt);
    if (gts.empty()) throw domain_error("no PNG masks found in '" + pred_dir.string() + "' and '" + gt_dir.string() + "'");

    std::vector<std::string> ids;
    for (const auto& [id, _] : gts) ids.push_back(id);
    std::vector<ImageMetrics> per_image(ids.size());
    parallel_for(ids.size(), jobs, [&](std::size_t i) {
        per_image[i] = pd_fa_fat(load_mask(preds.at(ids[i])), load_mask(gts.at(ids[i])), cfg, ids[i]);
    });
    return aggregate(std::move(per_image), cfg);
}

/// Writes the JSON report to `report` and the CSV next to it (".csv").
inline void write_report(const MetricReport& report, const fs::path& path) {
    write_file(path, to_json(report).dump(2) + "\n");
    auto csv = path;
    csv.replace_extension(".csv");
    write_file(csv, to_csv(report));
}

inline int cmd_evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const MetricConfig& cfg, const fs::path& report_path) {
    try {
        const auto report = evaluate_dirs(pred_dir, gt_dir, cfg);
        write_report(report, report_path);
        spdlog::info("evaluate: {} image(s): IoU {:.4f}  Pd {:.4f}  Fa {:.3f}e-6  Fat {:.4f}", report.per_image.size(),
                     report.values.iou, report.values.pd, report.values.fa * 1e6, report.values.fat);
        return 0;
    } catch (const std::exception& e) {
        spdlog::error("evaluate: {}", e.what());
        return 1;
    }
}

/// Emits <out>/<image_id>.tnsr three-channel model inputs.
inline int cmd_encode(const fs::path& manifest_path, const TeiConfig& tei, const fs::path& out, unsigned jobs = 0) {
    DatasetManifest manifest;
    try {
        tei.validate();
        manifest = load_manifest(manifest_path);
        fs::create_directories(out);
    } catch (const std::exception& e) {
        spdlog::error("encode: {}", e.what());
        return 2;
    }
    std::atomic<std::size_t> failed{0};
    parallel_for(manifest.images.size(), jobs, [&](std::size_t i) {
        const auto& entry = manifest.images[i];
        try {
            const auto image = load_image(entry.image_path);
            const auto energy = tei_encode(resolve_prompts(entry), image.width(), image.height(), tei);
            write_file(out / (entry.image_id + ".tnsr"), encode_model_input(assemble(image, energy)));
        } catch (const std::exception& e) {
            ++failed;
            spdlog::error("encode: image '{}' failed: {}", entry.image_id, e.what());
        }
    });
    spdlog::info("encode: {} image(s), {} failed", manifest.images.size(), failed.load());
    return failed == 0 ? 0 : 1;
}

}  // namespace forge
