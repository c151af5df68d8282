#include <gtest/gtest.h>

#include <random>

#include "forge/io.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

const std::string fixtures = FORGE_FIXTURES;

std::string hex(std::string_view bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 15]);
    }
    return out;
}

std::string manifest_text(const std::string& images) { return R"({"version": 1, "images": [)" + images + "]}"; }

}  // namespace

TEST(Png, FullScaleMapsToOne) {
    const std::vector<std::uint16_t> s8{0, 255}, s16{0, 65535};
    const auto a = image_from_png(decode_png(encode_png_gray(2, 1, 8, s8)));
    const auto b = image_from_png(decode_png(encode_png_gray(2, 1, 16, s16)));
    EXPECT_EQ(a.vector(), (std::vector<double>{0.0, 1.0}));
    EXPECT_EQ(b.vector(), (std::vector<double>{0.0, 1.0}));
}

TEST(Png, SixteenBitKeepsPrecision) {
    const std::vector<std::uint16_t> s{1, 32768, 65534};
    const auto img = image_from_png(decode_png(encode_png_gray(3, 1, 16, s)));
    EXPECT_EQ(img[0], 1.0 / 65535.0);
    EXPECT_EQ(img[1], 32768.0 / 65535.0);
    EXPECT_EQ(img[2], 65534.0 / 65535.0);
}

TEST(Png, FixtureLoadSaveLoadIsStable) {
    for (const char* id : {"frame_00", "frame_01"}) {  // 8- and 16-bit sources
        const auto png = decode_png(read_file(fixtures + "/synthetic/images/" + id + ".png"));
        const auto img = image_from_png(png);
        const auto again = image_from_png(decode_png(encode_image_png(img, png.bit_depth)));
        EXPECT_EQ(again, img) << id;
    }
}

TEST(Png, RandomImagesRoundTripAtSourceDepth) {
    std::mt19937_64 rng(109);
    for (int trial = 0; trial < 20; ++trial) {
        const int depth = trial % 2 ? 16 : 8;
        const int w = 1 + static_cast<int>(rng() % 40), h = 1 + static_cast<int>(rng() % 40);
        std::vector<std::uint16_t> s(static_cast<std::size_t>(w) * h);
        for (auto& v : s) v = static_cast<std::uint16_t>(rng() % (depth == 16 ? 65536 : 256));
        const auto png = decode_png(encode_png_gray(w, h, depth, s));
        ASSERT_EQ(png.samples, s);
        ASSERT_EQ(png.bit_depth, depth);
        const auto img = image_from_png(png);
        ASSERT_EQ(image_from_png(decode_png(encode_image_png(img, depth))), img);
    }
}

TEST(Png, CorruptDataIsIoError) {
    EXPECT_THROW(decode_png("\x89PNG\r\n\x1a\n garbage"), io_error);
    EXPECT_THROW(decode_png(""), io_error);
    auto good = encode_png_gray(4, 4, 8, std::vector<std::uint16_t>(16, 9));
    good.resize(good.size() - 20);
    EXPECT_THROW(decode_png(good), io_error);
}

TEST(Png, UnsupportedBitDepthIsFormatError) {
    try {
        (void)load_image(fixtures + "/invalid/gray4.png");
        FAIL();
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find("bit depth 4"), std::string::npos);
    }
}

TEST(Png, MissingFileIsIoError) { EXPECT_THROW(load_image(fixtures + "/nope.png"), io_error); }

TEST(Mask, RoundTripAndEncoding) {
    std::mt19937_64 rng(113);
    const auto m = oracle::random_mask(rng, 33, 17, 0.4);
    const auto bytes = encode_mask_png(m);
    const auto png = decode_png(bytes);
    EXPECT_EQ(png.bit_depth, 8);
    for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(png.samples[i], m[i] ? 255 : 0);
    EXPECT_EQ(mask_from_png(png), m);
}

TEST(Mask, AllZeroStaysZero) {
    const auto m = mask_from_png(decode_png(encode_mask_png(BinaryMask(9, 9))));
    EXPECT_EQ(count_nonzero(m), 0u);
}

TEST(Mask, LegacyGrayLevelsThresholdAt127) {
    const std::vector<std::uint16_t> s{0, 127, 128, 200};
    EXPECT_EQ(mask_from_png(decode_png(encode_png_gray(4, 1, 8, s))).vector(), (std::vector<std::uint8_t>{0, 0, 1, 1}));
    const std::vector<std::uint16_t> s16{0, 127 * 257, 128 * 257, 65535};
    EXPECT_EQ(mask_from_png(decode_png(encode_png_gray(4, 1, 16, s16))).vector(), (std::vector<std::uint8_t>{0, 0, 1, 1}));
}

TEST(Tnsr, ExactBytes) {
    const FloatMap m(2, 2, {0.0, 0.5, 1.0, 0.25});
    const auto bytes = tnsr::encode(std::span(&m, 1));
    ASSERT_EQ(bytes.size(), 32u);
    EXPECT_EQ(hex(bytes),
              "544e5352" "01" "01" "0100" "02000000" "02000000"
              "00000000" "0000003f" "0000803f" "0000803e");
}

TEST(Tnsr, HeaderCarriesHeightBeforeWidth) {
    const FloatMap m(3, 2);
    const auto bytes = tnsr::encode(std::span(&m, 1));
    EXPECT_EQ(hex(bytes.substr(8, 8)), "0200000003000000");
    const auto back = tnsr::decode(bytes);
    EXPECT_EQ(back[0].width(), 3);
    EXPECT_EQ(back[0].height(), 2);
}

TEST(Tnsr, ChannelOrderPreserved) {
    std::vector<FloatMap> ch{FloatMap(2, 1, {1, 2}), FloatMap(2, 1, {3, 4}), FloatMap(2, 1, {5, 6})};
    const auto back = tnsr::decode(tnsr::encode(ch));
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(back[c], ch[c]);
}

TEST(Tnsr, ZeroChannelsRejected) {
    EXPECT_THROW(tnsr::encode(std::span<const FloatMap>{}), domain_error);
    const FloatMap m(1, 1);
    auto bytes = tnsr::encode(std::span(&m, 1));
    bytes[6] = 0;
    EXPECT_THROW(tnsr::decode(bytes.substr(0, 16)), format_error);
}

TEST(Tnsr, HeaderAndPayloadValidation) {
    const FloatMap m(2, 2, {0.0, 0.5, 1.0, 0.25});
    const auto good = tnsr::encode(std::span(&m, 1));
    auto bad = good;
    bad[0] = 'X';
    EXPECT_THROW(tnsr::decode(bad), format_error);
    bad = good;
    bad[4] = 2;
    EXPECT_THROW(tnsr::decode(bad), format_error);
    bad = good;
    bad[5] = 2;
    EXPECT_THROW(tnsr::decode(bad), format_error);
    EXPECT_THROW(tnsr::decode(good.substr(0, 10)), io_error);
    EXPECT_THROW(tnsr::decode(good.substr(0, 31)), io_error);
    EXPECT_THROW(tnsr::decode(good + "x"), format_error);
    bad = good;
    bad.replace(16, 4, "\x00\x00\xc0\x7f", 4);  // NaN
    EXPECT_THROW(tnsr::decode(bad), format_error);
}

TEST(Tnsr, RandomMapsRoundTripAtFloat32) {
    std::mt19937_64 rng(127);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int c = 1 + static_cast<int>(rng() % 4), w = 1 + static_cast<int>(rng() % 30), h = 1 + static_cast<int>(rng() % 30);
        std::vector<FloatMap> ch;
        for (int k = 0; k < c; ++k) {
            std::vector<double> d(static_cast<std::size_t>(w) * h);
            for (auto& v : d) v = static_cast<float>(u(rng));
            ch.emplace_back(w, h, d);
        }
        const auto bytes = tnsr::encode(ch);
        ASSERT_EQ(bytes.size(), 16u + 4u * c * w * h);
        const auto back = tnsr::decode(bytes);
        ASSERT_EQ(back, ch);
    }
}

TEST(Tnsr, FileHelpers) {
    oracle::TempDir tmp("tnsr");
    const FloatMap m(2, 1, {0.125, 0.75});
    save_floatmap(m, tmp / "sub/m.tnsr");
    EXPECT_EQ(load_floatmap(tmp / "sub/m.tnsr"), m);
    EXPECT_THROW(decode_model_input(read_file(tmp / "sub/m.tnsr")), format_error);
}

TEST(PromptCsv, ParseFormatRoundTrip) {
    const std::string text = "image_id,x,y,kind\na,1,2,centroid\nb, 3 ,4,coarse\n\na,5,6,coarse\n";
    const auto rows = parse_prompt_csv(text);
    ASSERT_EQ(rows.size(), 3u);
    const auto a = prompts_for(rows, "a");
    EXPECT_EQ(a.size(), 2u);
    EXPECT_EQ(a[1], (Prompt{5, 6, PromptKind::coarse}));
    EXPECT_TRUE(prompts_for(rows, "zzz").empty());
    const std::vector<PromptSet> sets{a, prompts_for(rows, "b")};
    EXPECT_EQ(format_prompt_csv(sets), "image_id,x,y,kind\na,1,2,centroid\na,5,6,coarse\nb,3,4,coarse\n");
}

TEST(PromptCsv, Errors) {
    EXPECT_THROW(parse_prompt_csv(""), format_error);
    EXPECT_THROW(parse_prompt_csv("id,x,y,kind\n"), format_error);
    EXPECT_THROW(parse_prompt_csv("image_id,x,y,kind\na,1,2\n"), format_error);
    EXPECT_THROW(parse_prompt_csv("image_id,x,y,kind\na,1.5,2,coarse\n"), format_error);
    EXPECT_THROW(parse_prompt_csv("image_id,x,y,kind\na,1,2,exact\n"), format_error);
    try {
        (void)parse_prompt_csv("image_id,x,y,kind\na,1,2,coarse\na,x,2,coarse\n", "p.csv");
        FAIL();
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find("p.csv:3"), std::string::npos);
    }
}

TEST(Manifest, FixtureParsesAndResolvesEverySource) {
    const auto m = load_manifest(fixtures + "/synthetic/manifest.json");
    ASSERT_EQ(m.images.size(), 10u);
    for (const auto& e : m.images) {
        const auto ps = resolve_prompts(e);
        const auto gt = load_mask(*e.gt_path);
        EXPECT_EQ(ps.size(), oracle::bfs_components(gt).size()) << e.image_id;
        for (const auto& p : ps) EXPECT_EQ(gt.at(p.x, p.y), 1) << e.image_id;
    }
    EXPECT_EQ(m.entry("frame_02").prompt_source.type, PromptSource::Type::file);
    EXPECT_THROW(m.entry("frame_99"), domain_error);
}

TEST(Manifest, CoarseDerivationIsReproducible) {
    const auto m = load_manifest(fixtures + "/synthetic/manifest.json");
    const auto& e = m.entry("frame_01");
    ASSERT_EQ(e.prompt_source.type, PromptSource::Type::derive_coarse);
    EXPECT_EQ(resolve_prompts(e), resolve_prompts(m, "frame_01"));
}

TEST(Manifest, SchemaErrorsCarryJsonPath) {
    const std::filesystem::path base = fixtures + "/synthetic";
    auto path_of = [&](const std::string& text) {
        try {
            (void)parse_manifest(nlohmann::json::parse(text), base);
        } catch (const manifest_error& e) {
            return e.json_path();
        }
        return std::string("<none>");
    };
    const std::string img = R"("image_path": "images/frame_00.png", "gt_path": "masks/frame_00.png")";
    EXPECT_EQ(path_of(R"({"images": []})"), "$.version");
    EXPECT_EQ(path_of(R"({"version": 2, "images": []})"), "$.version");
    EXPECT_EQ(path_of(R"({"version": 1})"), "$.images");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": 3})")), "$.images[0].image_id");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": "a/b", )" + img + R"(, "prompt_source": {"type": "derive_centroid"}})")),
              "$.images[0].image_id");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": "a", )" + img + R"(, "prompt_source": {"type": "derive_centroid"}}, )" +
                                    R"({"image_id": "a", )" + img + R"(, "prompt_source": {"type": "derive_centroid"}})")),
              "$.images[1].image_id");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": "a", "image_path": "missing.png", "prompt_source": {"type": "derive_centroid"}})")),
              "$.images[0].image_path");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": "a", )" + img + R"(})")), "$.images[0].prompt_source");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": "a", )" + img + R"(, "prompt_source": {"type": "guess"}})")),
              "$.images[0].prompt_source.type");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": "a", )" + img + R"(, "prompt_source": {"type": "derive_coarse"}})")),
              "$.images[0].prompt_source.seed");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": "a", )" + img + R"(, "prompt_source": {"type": "derive_coarse", "seed": -1}})")),
              "$.images[0].prompt_source.seed");
    EXPECT_EQ(path_of(manifest_text(R"({"image_id": "a", )" + img + R"(, "prompt_source": {"type": "file"}})")),
              "$.images[0].prompt_source.path");
}

TEST(Manifest, DerivedPromptsNeedGroundTruth) {
    const auto doc = nlohmann::json::parse(
        manifest_text(R"({"image_id": "a", "image_path": "images/frame_00.png", "prompt_source": {"type": "derive_centroid"}})"));
    EXPECT_THROW(parse_manifest(doc, fixtures + "/synthetic"), config_error);
}

TEST(Manifest, InvalidJsonIsManifestError) {
    oracle::TempDir tmp("manifest");
    write_file(tmp / "m.json", "{not json");
    EXPECT_THROW(load_manifest(tmp / "m.json"), manifest_error);
}
