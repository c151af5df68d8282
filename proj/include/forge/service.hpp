#pragma once

// Annotation HTTP service driving the click-observe-refine loop.
//
//   POST   /v1/sessions                      {"image_id"} or raw image/png body -> 201
//   GET    /v1/sessions/{id}                 current state
//   GET    /v1/sessions/{id}/image.png       8-bit rendering of the image
//   POST   /v1/sessions/{id}/prompts         {"x","y"[,"kind"][,"revision"]} -> label + clusters
//   DELETE /v1/sessions/{id}/prompts/last    undo
//   GET    /v1/sessions/{id}/label.png       current pseudo label
//   POST   /v1/sessions/{id}/finalize        persist label PNG + prompt CSV under out_dir
//   GET    /v1/images                        manifest image ids
//   GET    /v1/healthz
//
// Mutations use optimistic concurrency: the pipeline runs outside the
// session lock and the result is committed only if the revision it started
// from is still current; otherwise the request fails with 409.

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "forge/io.hpp"
#include "forge/pipeline.hpp"
#include "forge/saliency_backend.hpp"

namespace forge {

struct ServiceOptions {
    BackendKind backend = ReferenceBackend{};
    PipelineConfig pipeline;
    fs::path out_dir = "annotations";
    std::optional<DatasetManifest> manifest;
    std::optional<fs::path> static_dir;
};

struct ClusterView {
    int label = 0;
    BoundingBox bbox;
    Point2 centroid;
    bool kept = false;
};

struct Session {
    std::string session_id;
    std::string image_id;
    RasterImage image;
    PromptSet prompts;
    std::optional<BinaryMask> last_label;
    std::vector<ClusterView> clusters;
    std::uint64_t revision = 0;
};

/// HTTP status plus JSON body for one API call.
struct ApiResponse {
    int status = 200;
    nlohmann::json body = nlohmann::json::object();
};

class AnnotationService {
public:
    explicit AnnotationService(ServiceOptions opts) : opts_(std::move(opts)), backend_(opts_.backend) { opts_.pipeline.validate(); }

    void register_routes(httplib::Server& server) {
        using httplib::Request;
        using httplib::Response;
        auto reply = [](Response& res, const ApiResponse& r) {
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        server.Get("/v1/healthz", [reply](const Request&, Response& res) { reply(res, {200, {{"status", "ok"}}}); });
        server.Get("/v1/images", [this, reply](const Request&, Response& res) { reply(res, list_images()); });
        server.Post("/v1/sessions", [this, reply](const Request& req, Response& res) {
            if (req.get_header_value("Content-Type").starts_with("image/png")) {
                reply(res, create_session_from_png(req.body, req.has_param("image_id") ? req.get_param_value("image_id") : ""));
                return;
            }
            const auto body = nlohmann::json::parse(req.body, nullptr, false);
            if (!body.is_object() || !body.contains("image_id") || !body["image_id"].is_string()) {
                reply(res, error_response(400, "expected JSON body {\"image_id\": string} or an image/png upload"));
                return;
            }
            reply(res, create_session(body["image_id"].get<std::string>()));
        });
        server.Get(R"(/v1/sessions/([0-9a-f]+))", [this, reply](const Request& req, Response& res) {
            reply(res, session_state(req.matches[1]));
        });
        server.Get(R"(/v1/sessions/([0-9a-f]+)/image\.png)", [this, reply](const Request& req, Response& res) {
            auto s = find(req.matches[1]);
            if (!s) return reply(res, unknown_session(req.matches[1]));
            std::shared_lock lock(s->mutex);
            res.set_content(encode_image_png(s->session.image), "image/png");
        });
        server.Get(R"(/v1/sessions/([0-9a-f]+)/label\.png)", [this, reply](const Request& req, Response& res) {
            auto png = label_png(req.matches[1]);
            if (!png) return reply(res, unknown_session(req.matches[1]));
            res.set_content(*png, "image/png");
        });
        server.Post(R"(/v1/sessions/([0-9a-f]+)/prompts)", [this, reply](const Request& req, Response& res) {
            const auto body = nlohmann::json::parse(req.body, nullptr, false);
            if (!body.is_object() || !body.contains("x") || !body.contains("y") || !body["x"].is_number_integer() ||
                !body["y"].is_number_integer()) {
                return reply(res, error_response(400, "expected JSON body {\"x\": int, \"y\": int}"));
            }
            Prompt p{body["x"].get<int>(), body["y"].get<int>(), PromptKind::coarse};
            try {
                if (body.contains("kind")) p.kind = prompt_kind_from_string(body["kind"].get<std::string>());
            } catch (const std::exception& e) {
                return reply(res, error_response(400, e.what()));
            }
            std::optional<std::uint64_t> expected;
            if (body.contains("revision") && body["revision"].is_number_unsigned()) expected = body["revision"].get<std::uint64_t>();
            reply(res, add_prompt(req.matches[1], p, expected));
        });
        server.Delete(R"(/v1/sessions/([0-9a-f]+)/prompts/last)", [this, reply](const Request& req, Response& res) {
            std::optional<std::uint64_t> expected;
            if (req.has_param("revision")) expected = std::stoull(req.get_param_value("revision"));
            reply(res, undo(req.matches[1], expected));
        });
        server.Post(R"(/v1/sessions/([0-9a-f]+)/finalize)", [this, reply](const Request& req, Response& res) {
            reply(res, finalize(req.matches[1]));
        });
        if (opts_.static_dir) server.set_mount_point("/", opts_.static_dir->string());
        server.set_exception_handler([reply](const Request&, Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                reply(res, error_response(500, e.what()));
            }
        });
    }

    ApiResponse list_images() const {
        nlohmann::json ids = nlohmann::json::array();
        if (opts_.manifest) {
            for (const auto& e : opts_.manifest->images) ids.push_back(e.image_id);
        }
        return {200, {{"images", ids}}};
    }

    ApiResponse create_session(const std::string& image_id) {
        if (!opts_.manifest) return error_response(404, "no manifest loaded; upload a PNG instead");
        const ManifestEntry* entry = nullptr;
        for (const auto& e : opts_.manifest->images) {
            if (e.image_id == image_id) entry = &e;
        }
        if (!entry) return error_response(404, "unknown image_id '" + image_id + "'");
        try {
            return open(image_id, load_image(entry->image_path));
        } catch (const error& e) {
            return error_response(500, e.what());
        }
    }

    ApiResponse create_session_from_png(std::string_view png, std::string image_id) {
        if (image_id.empty()) image_id = "upload-" + std::to_string(++uploads_);
        if (image_id.find_first_of(",/\\\n") != std::string::npos) return error_response(400, "invalid image_id");
        try {
            return open(std::move(image_id), image_from_png(decode_png(png, "upload")));
        } catch (const error& e) {
            return error_response(422, std::string("cannot decode upload: ") + e.what());
        }
    }

    ApiResponse session_state(const std::string& id) const {
        auto s = find(id);
        if (!s) return unknown_session(id);
        std::shared_lock lock(s->mutex);
        auto body = label_body(s->session);
        body["session_id"] = id;
        body["image_id"] = s->session.image_id;
        body["width"] = s->session.image.width();
        body["height"] = s->session.image.height();
        nlohmann::json prompts = nlohmann::json::array();
        for (const auto& p : s->session.prompts) prompts.push_back({{"x", p.x}, {"y", p.y}, {"kind", to_string(p.kind)}});
        body["prompts"] = std::move(prompts);
        return {200, std::move(body)};
    }

    ApiResponse add_prompt(const std::string& id, Prompt prompt, std::optional<std::uint64_t> expected_revision = {}) {
        return mutate(id, expected_revision, [&](const Session& s) -> PromptSet {
            PromptSet one(s.image_id, {prompt});
            one.validate_bounds(s.image.width(), s.image.height());
            return s.prompts.with_added(prompt);
        });
    }

    ApiResponse undo(const std::string& id, std::optional<std::uint64_t> expected_revision = {}) {
        return mutate(id, expected_revision, [](const Session& s) -> PromptSet {
            if (s.prompts.empty()) throw domain_error("no prompt to undo");
            return s.prompts.without_last();
        });
    }

    std::optional<std::string> label_png(const std::string& id) const {
        auto s = find(id);
        if (!s) return std::nullopt;
        std::shared_lock lock(s->mutex);
        return encode_mask_png(current_label(s->session));
    }

    ApiResponse finalize(const std::string& id) {
        auto s = find(id);
        if (!s) return unknown_session(id);
        std::unique_lock lock(s->mutex);
        const auto& session = s->session;
        const auto label_path = opts_.out_dir / (session.image_id + ".png");
        const auto prompts_path = opts_.out_dir / (session.image_id + ".prompts.csv");
        try {
            save_mask(current_label(session), label_path);
            write_file(prompts_path, format_prompt_csv(std::span(&session.prompts, 1)));
        } catch (const error& e) {
            return error_response(500, e.what());
        }
        spdlog::info("finalized '{}' at revision {} with {} prompt(s)", session.image_id, session.revision, session.prompts.size());
        return {200,
                {{"image_id", session.image_id},
                 {"revision", session.revision},
                 {"label_path", label_path.string()},
                 {"prompts_path", prompts_path.string()}}};
    }

    std::optional<std::uint64_t> revision(const std::string& id) const {
        auto s = find(id);
        if (!s) return std::nullopt;
        std::shared_lock lock(s->mutex);
        return s->session.revision;
    }

private:
    struct Slot {
        mutable std::shared_mutex mutex;
        Session session;
    };

    static ApiResponse error_response(int status, const std::string& message) { return {status, {{"error", message}}}; }

    static ApiResponse unknown_session(const std::string& id) { return error_response(404, "unknown session '" + id + "'"); }

    static BinaryMask current_label(const Session& s) {
        return s.last_label ? *s.last_label : BinaryMask(s.image.width(), s.image.height());
    }

    static nlohmann::json label_body(const Session& s) {
        nlohmann::json clusters = nlohmann::json::array();
        for (const auto& c : s.clusters) {
            clusters.push_back({{"label", c.label},
                                {"bbox", {c.bbox.x1, c.bbox.y1, c.bbox.x2, c.bbox.y2}},
                                {"centroid", {c.centroid.x, c.centroid.y}},
                                {"kept", c.kept}});
        }
        return {{"revision", s.revision}, {"label", to_json(rle_encode(current_label(s)))}, {"clusters", std::move(clusters)}};
    }

    std::string new_session_id() {
        std::lock_guard lock(rng_mutex_);
        std::uniform_int_distribution<std::uint64_t> dist;
        return hex(dist(rng_)) + hex(dist(rng_));
    }

    static std::string hex(std::uint64_t v) {
        static constexpr char digits[] = "0123456789abcdef";
        std::string s(16, '0');
        for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        return s;
    }

    ApiResponse open(std::string image_id, RasterImage image) {
        auto slot = std::make_shared<Slot>();
        slot->session.session_id = new_session_id();
        slot->session.image_id = std::move(image_id);
        slot->session.prompts = PromptSet(slot->session.image_id, {});
        slot->session.image = std::move(image);
        const auto& s = slot->session;
        ApiResponse r{201,
                      {{"session_id", s.session_id},
                       {"image_id", s.image_id},
                       {"width", s.image.width()},
                       {"height", s.image.height()},
                       {"revision", s.revision}}};
        std::lock_guard lock(sessions_mutex_);
        sessions_.emplace(s.session_id, std::move(slot));
        return r;
    }

    std::shared_ptr<Slot> find(const std::string& id) const {
        std::lock_guard lock(sessions_mutex_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    template <typename NextPrompts>
    ApiResponse mutate(const std::string& id, std::optional<std::uint64_t> expected, NextPrompts&& next_prompts) {
        auto slot = find(id);
        if (!slot) return unknown_session(id);

        std::uint64_t base_revision = 0;
        PromptSet next;
        RasterImage image;
        {
            std::shared_lock lock(slot->mutex);
            base_revision = slot->session.revision;
            if (expected && *expected != base_revision) return conflict(base_revision);
            try {
                next = next_prompts(slot->session);
            } catch (const coordinate_error& e) {
                return {422, {{"error", e.what()}, {"x", e.x()}, {"y", e.y()}, {"revision", base_revision}}};
            } catch (const domain_error& e) {
                return {422, {{"error", e.what()}, {"revision", base_revision}}};
            }
            image = slot->session.image;
        }

        PipelineResult result;
        try {
            result = run_pipeline(image, next, backend_, opts_.pipeline);
        } catch (const transport_error& e) {
            return {502, {{"error", e.what()}, {"endpoint", e.endpoint()}, {"attempts", e.attempts()}}};
        } catch (const contract_error& e) {
            return error_response(502, e.what());
        } catch (const error& e) {
            return error_response(500, e.what());
        }

        std::unique_lock lock(slot->mutex);
        auto& s = slot->session;
        if (s.revision != base_revision) return conflict(s.revision);
        s.prompts = std::move(next);
        s.last_label = std::move(result.label);
        s.clusters.clear();
        for (const auto& c : result.clusters.clusters()) {
            s.clusters.push_back({c.label, c.bbox, c.centroid, result.outcome.is_kept(c.label)});
        }
        ++s.revision;
        return {200, label_body(s)};
    }

    static ApiResponse conflict(std::uint64_t current) {
        return {409, {{"error", "session was modified concurrently"}, {"revision", current}}};
    }

    ServiceOptions opts_;
    SaliencyBackend backend_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_{std::random_device{}()};
    std::atomic<std::uint64_t> uploads_{0};
};

}  // namespace forge
