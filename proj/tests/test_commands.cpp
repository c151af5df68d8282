#include <gtest/gtest.h>

#include <atomic>

#include "forge/commands.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

const fs::path synthetic = fs::path(FORGE_FIXTURES) / "synthetic";

GenerateOptions generate_into(const fs::path& out, BackendKind backend) {
    GenerateOptions opt;
    opt.manifest = synthetic / "manifest.json";
    opt.backend = std::move(backend);
    opt.out = out;
    opt.jobs = 4;
    return opt;
}

}  // namespace

TEST(ParallelFor, VisitsEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), 5, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    parallel_for(0, 3, [](std::size_t) { FAIL(); });
}

TEST(Generate, PerfectSaliencyReproducesGroundTruthBytes) {
    oracle::TempDir tmp("gen");
    const auto opt = generate_into(tmp.path(), PrecomputedBackend{(synthetic / "masks" / "{id}.png").string()});
    ASSERT_EQ(cmd_generate(opt), 0);
    for (const auto& [id, gt_path] : png_files(synthetic / "masks")) {
        EXPECT_EQ(read_file(tmp / (id + ".png")), read_file(gt_path)) << id;
    }
    const auto summary = nlohmann::json::parse(read_file(tmp / "summary.json"));
    EXPECT_EQ(summary["total"], 10);
    EXPECT_EQ(summary["failed"], 0);
    EXPECT_EQ(summary["config"]["matcher"], "bbm");
    EXPECT_EQ(summary["config_hash"].get<std::string>().size(), 16u);
    for (const auto& im : summary["images"]) {
        EXPECT_TRUE(im["ok"].get<bool>());
        EXPECT_EQ(im["kept"], im["prompts"]);
    }
}

TEST(Generate, RerunIsByteIdentical) {
    oracle::TempDir a("gen_a"), b("gen_b");
    ASSERT_EQ(cmd_generate(generate_into(a.path(), ReferenceBackend{})), 0);
    auto opt = generate_into(b.path(), ReferenceBackend{});
    opt.jobs = 1;
    ASSERT_EQ(cmd_generate(opt), 0);
    for (const auto& [id, path] : png_files(a.path())) EXPECT_EQ(read_file(path), read_file(b / (id + ".png"))) << id;
    const auto sa = nlohmann::json::parse(read_file(a / "summary.json"));
    const auto sb = nlohmann::json::parse(read_file(b / "summary.json"));
    EXPECT_EQ(sa["config_hash"], sb["config_hash"]);
}

TEST(Generate, EmptyManifestSucceeds) {
    oracle::TempDir tmp("gen_empty");
    write_file(tmp / "m.json", R"({"version": 1, "images": []})");
    GenerateOptions opt;
    opt.manifest = tmp / "m.json";
    opt.out = tmp / "out";
    ASSERT_EQ(cmd_generate(opt), 0);
    const auto summary = nlohmann::json::parse(read_file(tmp / "out/summary.json"));
    EXPECT_EQ(summary["total"], 0);
    EXPECT_TRUE(summary["images"].empty());
    EXPECT_EQ(png_files(tmp / "out").size(), 0u);
}

TEST(Generate, SetupAndPerImageFailures) {
    oracle::TempDir tmp("gen_fail");
    GenerateOptions opt;
    opt.manifest = tmp / "missing.json";
    opt.out = tmp / "out";
    EXPECT_EQ(cmd_generate(opt), 2);

    // A precomputed pattern that resolves for no image fails every image but
    // still writes the summary.
    const auto bad = generate_into(tmp / "out2", PrecomputedBackend{(tmp / "none/{id}.png").string()});
    EXPECT_EQ(cmd_generate(bad), 1);
    const auto summary = nlohmann::json::parse(read_file(tmp / "out2/summary.json"));
    EXPECT_EQ(summary["failed"], 10);
    EXPECT_TRUE(summary["images"][0].contains("error"));
}

TEST(Evaluate, PredictionEqualToTruthIsPerfect) {
    const auto r = evaluate_dirs(synthetic / "masks", synthetic / "masks", {});
    EXPECT_EQ(r.values.iou, 1.0);
    EXPECT_EQ(r.values.pd, 1.0);
    EXPECT_EQ(r.values.fa, 0.0);
    EXPECT_EQ(r.values.fat, 0.0);
    EXPECT_EQ(r.per_image.size(), 10u);
}

TEST(Evaluate, ReferenceOutputAgreesWithOracle) {
    oracle::TempDir tmp("eval");
    ASSERT_EQ(cmd_generate(generate_into(tmp / "pred", ReferenceBackend{})), 0);
    const auto r = evaluate_dirs(tmp / "pred", synthetic / "masks", {});
    std::uint64_t inter = 0, uni = 0, n_all = 0, detected = 0, t_false = 0, false_px = 0, total = 0;
    for (const auto& im : r.per_image) {
        const auto o = oracle::metrics(load_mask(tmp / "pred" / (im.image_id + ".png")), load_mask(synthetic / "masks" / (im.image_id + ".png")));
        EXPECT_NEAR(im.values.iou, o.iou, 1e-12) << im.image_id;
        EXPECT_NEAR(im.values.pd, o.pd, 1e-12) << im.image_id;
        EXPECT_NEAR(im.values.fat, o.fat, 1e-12) << im.image_id;
        inter += o.inter, uni += o.uni, n_all += o.n_all, detected += o.detected;
        t_false += o.t_false, false_px += o.false_px, total += o.total;
    }
    EXPECT_NEAR(r.values.iou, double(inter) / double(uni), 1e-12);
    EXPECT_NEAR(r.values.pd, double(detected) / double(n_all), 1e-12);
    EXPECT_NEAR(r.values.fa, double(false_px) / double(total), 1e-12);
    EXPECT_NEAR(r.values.fat, double(t_false) / double(n_all), 1e-12);
}

TEST(Evaluate, EmptyDirectoriesAreAnError) {
    oracle::TempDir tmp("eval_empty");
    fs::create_directories(tmp / "p");
    fs::create_directories(tmp / "g");
    EXPECT_THROW(evaluate_dirs(tmp / "p", tmp / "g", {}), domain_error);
    EXPECT_THROW(evaluate_dirs(tmp / "nope", tmp / "g", {}), io_error);
}

TEST(Evaluate, IdMismatchListsMissingIds) {
    oracle::TempDir tmp("eval_ids");
    save_mask(BinaryMask(4, 4), tmp / "p/a.png");
    save_mask(BinaryMask(4, 4), tmp / "p/b.png");
    save_mask(BinaryMask(4, 4), tmp / "g/b.png");
    save_mask(BinaryMask(4, 4), tmp / "g/c.png");
    try {
        (void)evaluate_dirs(tmp / "p", tmp / "g", {});
        FAIL();
    } catch (const id_mismatch_error& e) {
        EXPECT_EQ(e.missing_pred(), std::vector<std::string>{"c"});
        EXPECT_EQ(e.missing_gt(), std::vector<std::string>{"a"});
    }
    EXPECT_EQ(cmd_evaluate(tmp / "p", tmp / "g", {}, tmp / "r.json"), 1);
}

TEST(Evaluate, ShapeMismatchIsReported) {
    oracle::TempDir tmp("eval_shape");
    save_mask(BinaryMask(4, 4), tmp / "p/a.png");
    save_mask(BinaryMask(5, 4), tmp / "g/a.png");
    EXPECT_THROW(evaluate_dirs(tmp / "p", tmp / "g", {}), shape_error);
}

TEST(Evaluate, WritesJsonAndCsvReports) {
    oracle::TempDir tmp("eval_report");
    ASSERT_EQ(cmd_evaluate(synthetic / "masks", synthetic / "masks", {}, tmp / "out/report.json"), 0);
    const auto j = nlohmann::json::parse(read_file(tmp / "out/report.json"));
    EXPECT_EQ(j["aggregate"]["iou"], 1.0);
    EXPECT_EQ(j["per_image"].size(), 10u);
    const auto csv = read_file(tmp / "out/report.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "image_id,iou,pd,fa,fat,n_all,t_false");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(Encode, WritesThreeChannelInputs) {
    oracle::TempDir tmp("enc");
    ASSERT_EQ(cmd_encode(synthetic / "manifest.json", {}, tmp.path()), 0);
    const auto manifest = load_manifest(synthetic / "manifest.json");
    for (const auto& e : manifest.images) {
        const auto input = decode_model_input(read_file(tmp / (e.image_id + ".tnsr")));
        const auto image = load_image(e.image_path);
        const auto energy = tei_encode(resolve_prompts(e), image.width(), image.height());
        EXPECT_EQ(encode_model_input(input), encode_model_input(assemble(image, energy))) << e.image_id;
        for (const auto& p : energy.prompts) EXPECT_GE(input.energy().at(p.x, p.y), 1.0);
    }
}
