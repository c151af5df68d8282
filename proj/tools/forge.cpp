// forge: batch pseudo-label generation, evaluation, model-input export and
// the annotation service.

#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "forge/commands.hpp"
#include "forge/service.hpp"

namespace {

httplib::Server* g_server = nullptr;

void stop_server(int) {
    if (g_server) g_server->stop();
}

struct PipelineFlags {
    std::string backend = "reference";
    std::string matcher = "bbm";
    double tau_s = 0.5;
    double sigma = 4.0;
    double tpm_radius = 3.0;
    int remote_timeout_ms = 10000;
    int remote_retries = 2;
    int remote_in_flight = 4;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--backend", backend, "reference | precomputed:PATTERN ({id} = image id) | remote:URL")->capture_default_str();
        cmd->add_option("--matcher", matcher, "False-alarm eliminator")
            ->check(CLI::IsMember({"bbm", "tpm", "erm", "none"}))
            ->capture_default_str();
        cmd->add_option("--tau-s", tau_s, "Saliency threshold in (0,1)")->capture_default_str();
        cmd->add_option("--sigma", sigma, "Gaussian energy sigma in pixels")->capture_default_str();
        cmd->add_option("--tpm-radius", tpm_radius, "Centroid radius for the tpm matcher")->capture_default_str();
        cmd->add_option("--remote-timeout-ms", remote_timeout_ms, "Remote backend timeout")->capture_default_str();
        cmd->add_option("--remote-retries", remote_retries, "Remote backend retries")->capture_default_str();
        cmd->add_option("--remote-in-flight", remote_in_flight, "Concurrent remote requests")->capture_default_str();
    }

    forge::BackendKind backend_kind() const {
        auto kind = forge::parse_backend(backend);
        if (auto* r = std::get_if<forge::RemoteBackend>(&kind)) {
            r->timeout_ms = remote_timeout_ms;
            r->retries = remote_retries;
            r->max_in_flight = remote_in_flight;
        }
        return kind;
    }

    forge::PipelineConfig pipeline() const {
        forge::PipelineConfig cfg;
        cfg.tei.sigma = sigma;
        cfg.post.tau_s = tau_s;
        cfg.post.matcher = forge::matcher_from_string(matcher);
        cfg.post.tpm_radius = tpm_radius;
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    forge::configure_logging();
    CLI::App app{"Single-point-prompt pseudo-label generation for infrared small targets"};
    app.require_subcommand(1);
    unsigned jobs = 0;
    app.add_option("--jobs,-j", jobs, "Worker threads (0 = all cores)");

    forge::GenerateOptions gen;
    PipelineFlags gen_flags;
    std::string gen_manifest;
    std::string gen_out;
    auto* generate = app.add_subcommand("generate", "Generate pseudo labels for every image in a manifest");
    generate->add_option("--manifest", gen_manifest, "Dataset manifest (JSON)")->required();
    generate->add_option("--out", gen_out, "Output directory")->required();
    gen_flags.add_to(generate);

    std::string pred_dir;
    std::string gt_dir;
    std::string report;
    forge::MetricConfig metric_cfg;
    auto* evaluate = app.add_subcommand("evaluate", "Score predicted masks against ground truth");
    evaluate->add_option("--pred", pred_dir, "Directory of predicted PNG masks")->required();
    evaluate->add_option("--gt", gt_dir, "Directory of ground-truth PNG masks")->required();
    evaluate->add_option("--deviation", metric_cfg.deviation_px, "Centroid deviation threshold in pixels")->capture_default_str();
    evaluate->add_option("--report", report, "JSON report path (CSV written alongside)")->required();

    std::string enc_manifest;
    std::string enc_out;
    double enc_sigma = 4.0;
    auto* encode = app.add_subcommand("encode", "Write three-channel TNSR model inputs for offline inference");
    encode->add_option("--manifest", enc_manifest, "Dataset manifest (JSON)")->required();
    encode->add_option("--out", enc_out, "Output directory")->required();
    encode->add_option("--sigma", enc_sigma, "Gaussian energy sigma in pixels")->capture_default_str();

    std::string addr = "127.0.0.1:8080";
    std::string serve_out = "annotations";
    std::string serve_manifest;
    std::string serve_static;
    PipelineFlags serve_flags;
    auto* serve = app.add_subcommand("serve", "Run the annotation HTTP service");
    serve->add_option("--addr", addr, "HOST:PORT to listen on")->capture_default_str();
    serve->add_option("--out", serve_out, "Directory for finalized labels")->capture_default_str();
    serve->add_option("--manifest", serve_manifest, "Manifest whose images can be opened by id");
    serve->add_option("--static", serve_static, "Directory of UI assets served at /");
    serve_flags.add_to(serve);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate) {
            gen.manifest = gen_manifest;
            gen.out = gen_out;
            gen.backend = gen_flags.backend_kind();
            gen.pipeline = gen_flags.pipeline();
            gen.jobs = jobs;
            return forge::cmd_generate(gen);
        }
        if (*evaluate) return forge::cmd_evaluate(pred_dir, gt_dir, metric_cfg, report);
        if (*encode) {
            forge::TeiConfig tei;
            tei.sigma = enc_sigma;
            return forge::cmd_encode(enc_manifest, tei, enc_out, jobs);
        }
        if (*serve) {
            forge::ServiceOptions opts;
            opts.backend = serve_flags.backend_kind();
            opts.pipeline = serve_flags.pipeline();
            opts.out_dir = serve_out;
            if (!serve_manifest.empty()) opts.manifest = forge::load_manifest(serve_manifest);
            if (!serve_static.empty()) opts.static_dir = serve_static;
            const auto colon = addr.rfind(':');
            if (colon == std::string::npos) throw forge::config_error("--addr must be HOST:PORT");
            const auto host = addr.substr(0, colon);
            const int port = std::stoi(addr.substr(colon + 1));

            forge::AnnotationService service(std::move(opts));
            httplib::Server server;
            service.register_routes(server);
            g_server = &server;
            std::signal(SIGINT, stop_server);
            std::signal(SIGTERM, stop_server);
            spdlog::info("serving on http://{}:{}", host, port);
            if (!server.listen(host, port)) {
                spdlog::error("cannot listen on {}", addr);
                return 2;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
