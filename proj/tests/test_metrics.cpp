#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "forge/metrics.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

BinaryMask mask_of(int w, int h, const std::vector<std::pair<int, int>>& on) {
    std::vector<std::uint8_t> d(static_cast<std::size_t>(w) * h, 0);
    for (auto [x, y] : on) d[static_cast<std::size_t>(y) * w + x] = 1;
    return BinaryMask(w, h, d);
}

std::vector<std::pair<int, int>> block(int x0, int y0, int w, int h) {
    std::vector<std::pair<int, int>> out;
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) out.push_back({x, y});
    return out;
}

ImageMetrics with_counts(std::uint64_t inter, std::uint64_t uni) {
    ImageMetrics m;
    m.counts.intersection = inter;
    m.counts.union_px = uni;
    m.counts.total_px = 100;
    m.values = MetricValues::from(m.counts);
    return m;
}

}  // namespace

TEST(Iou, Identity) {
    std::mt19937_64 rng(97);
    const auto m = oracle::random_mask(rng, 16, 16, 0.3);
    EXPECT_EQ(iou(m, m), 1.0);
}

TEST(Iou, DisjointIsZero) { EXPECT_EQ(iou(mask_of(8, 8, block(0, 0, 2, 2)), mask_of(8, 8, block(5, 5, 2, 2))), 0.0); }

TEST(Iou, HalfOverlappingBlocks) {
    // 2x2 blocks shifted by one column share 2 pixels; union is 6.
    EXPECT_DOUBLE_EQ(iou(mask_of(8, 8, block(1, 1, 2, 2)), mask_of(8, 8, block(2, 1, 2, 2))), 2.0 / 6.0);
}

TEST(Iou, BothEmptyIsOne) { EXPECT_EQ(iou(BinaryMask(4, 4), BinaryMask(4, 4)), 1.0); }

TEST(Iou, ShapeMismatchThrows) { EXPECT_THROW(iou(BinaryMask(4, 4), BinaryMask(4, 5)), shape_error); }

TEST(MatchTargets, IdenticalSetsMatchAll) {
    const auto m = mask_of(32, 32, {{1, 1}, {10, 10}, {11, 10}, {20, 25}});
    const auto cs = cluster8(m);
    const auto matches = match_targets(cs, cs);
    ASSERT_EQ(matches.size(), 3u);
    for (const auto& t : matches) {
        EXPECT_EQ(t.pred_label, t.gt_label);
        EXPECT_EQ(t.distance, 0.0);
    }
}

TEST(MatchTargets, BeyondDeviationNotMatched) {
    // (5,5) vs (8,6) lies at sqrt(10) = 3.16.
    const auto gt = cluster8(mask_of(16, 16, {{5, 5}}));
    const auto pred = cluster8(mask_of(16, 16, {{8, 6}}));
    EXPECT_TRUE(match_targets(pred, gt).empty());
    const auto near = cluster8(mask_of(16, 16, {{8, 5}}));
    EXPECT_EQ(match_targets(near, gt).size(), 1u);  // exactly 3 is inclusive
}

TEST(MatchTargets, GreedyReplayOnCrowdedScenes) {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> u(0, 9);
    for (int trial = 0; trial < 200; ++trial) {
        // Isolated single pixels on a 2-px lattice so every pixel is its own target.
        auto draw = [&](std::size_t n) {
            std::set<std::pair<int, int>> s;
            while (s.size() < n) s.insert({2 * u(rng), 2 * u(rng)});
            return mask_of(20, 20, {s.begin(), s.end()});
        };
        const auto pred = draw(5), gt = draw(4);
        std::vector<std::pair<double, double>> pc, gc;
        for (const auto& c : oracle::bfs_components(pred)) pc.push_back(oracle::mean_of(c));
        for (const auto& c : oracle::bfs_components(gt)) gc.push_back(oracle::mean_of(c));
        ASSERT_EQ(pc.size(), 5u);
        const auto expected = oracle::greedy_replay(pc, gc, 3.0);
        const auto got = match_targets(cluster8(pred), cluster8(gt));
        ASSERT_EQ(got.size(), expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            ASSERT_EQ(got[i].pred_label, static_cast<int>(expected[i].first + 1));
            ASSERT_EQ(got[i].gt_label, static_cast<int>(expected[i].second + 1));
        }
    }
}

TEST(PdFaFat, PerfectPrediction) {
    const auto gt = mask_of(32, 32, block(3, 3, 4, 4));
    const auto m = pd_fa_fat(gt, gt);
    EXPECT_EQ(m.values.pd, 1.0);
    EXPECT_EQ(m.values.fa, 0.0);
    EXPECT_EQ(m.values.fat, 0.0);
    EXPECT_EQ(m.values.iou, 1.0);
}

TEST(PdFaFat, OneSpuriousPixelAmongFourTargets) {
    std::vector<std::pair<int, int>> targets;
    for (auto [x, y] : {std::pair{20, 20}, {100, 40}, {180, 200}, {60, 150}}) {
        const auto b = block(x, y, 5, 5);
        targets.insert(targets.end(), b.begin(), b.end());
    }
    const auto gt = mask_of(256, 256, targets);
    targets.push_back({240, 10});
    const auto m = pd_fa_fat(mask_of(256, 256, targets), gt);
    EXPECT_EQ(m.counts.n_all, 4u);
    EXPECT_EQ(m.counts.t_false, 1u);
    EXPECT_EQ(m.values.pd, 1.0);
    EXPECT_EQ(m.values.fat, 0.25);
    EXPECT_EQ(m.values.fa, 1.0 / 65536.0);
}

TEST(PdFaFat, EmptyPrediction) {
    const auto gt = mask_of(32, 32, block(3, 3, 4, 4));
    const auto m = pd_fa_fat(BinaryMask(32, 32), gt);
    EXPECT_EQ(m.values.pd, 0.0);
    EXPECT_EQ(m.values.fa, 0.0);
    EXPECT_EQ(m.values.fat, 0.0);
    EXPECT_TRUE(m.values.fat_defined);
}

TEST(PdFaFat, NoTargetsLeavesFatUndefined) {
    const auto m = pd_fa_fat(mask_of(8, 8, {{1, 1}}), BinaryMask(8, 8));
    EXPECT_EQ(m.values.pd, 1.0);
    EXPECT_FALSE(m.values.fat_defined);
    EXPECT_EQ(m.values.fat, 0.0);
    EXPECT_EQ(m.counts.t_false, 1u);
}

TEST(PdFaFat, AgreesWithBruteForceOracle) {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 100; ++trial) {
        const auto gt = oracle::random_blobs(rng, 48, 48, 1 + static_cast<int>(rng() % 6), 12);
        const auto pred = oracle::random_blobs(rng, 48, 48, static_cast<int>(rng() % 7), 12);
        const auto o = oracle::metrics(pred, gt);
        const auto m = pd_fa_fat(pred, gt);
        ASSERT_EQ(m.counts.n_all, o.n_all);
        ASSERT_EQ(m.counts.t_false, o.t_false);
        ASSERT_NEAR(m.values.iou, o.iou, 1e-12);
        ASSERT_NEAR(m.values.pd, o.pd, 1e-12);
        ASSERT_NEAR(m.values.fa, o.fa, 1e-12);
        ASSERT_NEAR(m.values.fat, o.fat, 1e-12);
        // Range invariants.
        ASSERT_GE(m.values.iou, 0.0);
        ASSERT_LE(m.values.iou, 1.0);
        ASSERT_LE(m.values.pd, 1.0);
        ASSERT_LE(m.values.fa, 1.0);
    }
}

TEST(Aggregate, MicroAveragesCounts) {
    const auto r = aggregate({with_counts(3, 6), with_counts(0, 4)});
    EXPECT_DOUBLE_EQ(r.values.iou, 0.3);
    EXPECT_EQ(r.counts.total_px, 200u);
    EXPECT_EQ(r.per_image.size(), 2u);
}

TEST(Aggregate, EmptyThrows) { EXPECT_THROW(aggregate({}), domain_error); }

TEST(Aggregate, PermutationInvariant) {
    std::mt19937_64 rng(107);
    std::vector<ImageMetrics> ims;
    for (int i = 0; i < 8; ++i) {
        const auto gt = oracle::random_blobs(rng, 24, 24, 3, 10);
        const auto pred = oracle::random_blobs(rng, 24, 24, 3, 10);
        ims.push_back(pd_fa_fat(pred, gt, {}, "img" + std::to_string(i)));
    }
    const auto a = aggregate(ims);
    std::shuffle(ims.begin(), ims.end(), rng);
    const auto b = aggregate(ims);
    EXPECT_EQ(a.counts, b.counts);
    EXPECT_EQ(a.values.iou, b.values.iou);
}

TEST(Report, JsonAndCsvCarryEveryImage) {
    const auto gt = mask_of(16, 16, block(2, 2, 3, 3));
    const auto r = aggregate({pd_fa_fat(gt, gt, {}, "a"), pd_fa_fat(mask_of(16, 16, {{10, 10}}), gt, {}, "b")});
    const auto j = to_json(r);
    EXPECT_EQ(j["config"]["deviation_px"], 3.0);
    ASSERT_EQ(j["per_image"].size(), 2u);
    EXPECT_EQ(j["per_image"][1]["image_id"], "b");
    EXPECT_EQ(j["per_image"][1]["fa"], 1.0 / 256.0);
    EXPECT_DOUBLE_EQ(j["per_image"][1]["fa_scaled"].get<double>(), 1e6 / 256.0);
    EXPECT_EQ(j["aggregate"]["counts"]["n_all"], 2u);

    std::istringstream csv(to_csv(r));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "image_id,iou,pd,fa,fat,n_all,t_false");
    std::getline(csv, line);
    EXPECT_EQ(line, "a,1,1,0,0,1,0");
    std::getline(csv, line);
    EXPECT_EQ(line.substr(0, 6), "b,0,0,");
    EXPECT_EQ(line.substr(line.size() - 6), ",1,1,1");
}
