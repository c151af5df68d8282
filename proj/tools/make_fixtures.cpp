// Writes the deterministic synthetic fixture set used by the regression and
// acceptance tests: 10 infrared-like frames with small targets, their
// ground-truth masks, a prompt CSV and a manifest.
//
//   make_fixtures OUT_DIR

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "forge/io.hpp"

namespace {

using forge::BinaryMask;
using forge::RasterImage;

constexpr int kSize = 96;
constexpr int kCell = 32;
constexpr int kImages = 10;

enum class Shape { gaussian, disk, rect, ell };

struct Scene {
    std::vector<double> intensity;
    std::vector<std::uint8_t> gt;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); }

void add_target(Scene& s, std::mt19937_64& rng, int cx, int cy, Shape shape, bool labeled) {
    const double peak = uniform(rng, 0.45, 0.75);
    const double sigma = uniform(rng, 1.0, 2.2);
    const int r = uniform_int(rng, 1, 3);
    const int hw = uniform_int(rng, 1, 3);
    const int hh = uniform_int(rng, 0, 2);
    for (int y = std::max(0, cy - 8); y <= std::min(kSize - 1, cy + 8); ++y) {
        for (int x = std::max(0, cx - 8); x <= std::min(kSize - 1, cx + 8); ++x) {
            const int dx = x - cx;
            const int dy = y - cy;
            double v = 0.0;
            bool inside = false;
            switch (shape) {
                case Shape::gaussian: {
                    const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                    v = peak * g;
                    inside = g >= 0.3;
                    break;
                }
                case Shape::disk:
                    inside = dx * dx + dy * dy <= r * r;
                    v = inside ? peak : 0.0;
                    break;
                case Shape::rect:
                    inside = std::abs(dx) <= hw && std::abs(dy) <= hh;
                    v = inside ? peak : 0.0;
                    break;
                case Shape::ell:
                    inside = (dx >= -2 && dx <= 2 && dy == 2) || (dx == -2 && dy >= -2 && dy <= 2);
                    v = inside ? peak : 0.0;
                    break;
            }
            const auto idx = static_cast<std::size_t>(y) * kSize + x;
            s.intensity[idx] = std::min(1.0, s.intensity[idx] + v);
            if (labeled && inside) s.gt[idx] = 1;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures OUT_DIR\n";
        return 2;
    }
    const forge::fs::path out = argv[1];
    nlohmann::json images = nlohmann::json::array();
    std::vector<forge::PromptSet> file_prompts;

    for (int n = 0; n < kImages; ++n) {
        std::mt19937_64 rng(0x5eed0000ull + static_cast<std::uint64_t>(n));
        Scene s{std::vector<double>(kSize * kSize), std::vector<std::uint8_t>(kSize * kSize, 0)};
        const double base = uniform(rng, 0.12, 0.25);
        for (int y = 0; y < kSize; ++y) {
            for (int x = 0; x < kSize; ++x) {
                s.intensity[static_cast<std::size_t>(y) * kSize + x] = base + 0.04 * x / kSize + uniform(rng, -0.05, 0.05);
            }
        }
        // Targets and unlabeled clutter sit in distinct 32x32 cells.
        std::vector<int> cells = {0, 1, 2, 3, 4, 5, 6, 7, 8};
        for (int i = 8; i > 0; --i) std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
        const int targets = uniform_int(rng, 1, 4);
        const int clutter = uniform_int(rng, 0, 2);
        for (int t = 0; t < targets + clutter; ++t) {
            const int cell = cells[static_cast<std::size_t>(t)];
            const int cx = (cell % 3) * kCell + kCell / 2 + uniform_int(rng, -5, 5);
            const int cy = (cell / 3) * kCell + kCell / 2 + uniform_int(rng, -5, 5);
            const auto shape = static_cast<Shape>(uniform_int(rng, 0, 3));
            add_target(s, rng, cx, cy, shape, t < targets);
        }

        const std::string id = "frame_" + std::string(n < 10 ? "0" : "") + std::to_string(n);
        const RasterImage image(kSize, kSize, s.intensity);
        const BinaryMask gt(kSize, kSize, s.gt);
        const int depth = n % 2 == 0 ? 8 : 16;
        forge::save_image(image, out / "images" / (id + ".png"), depth);
        forge::save_mask(gt, out / "masks" / (id + ".png"));

        nlohmann::json source;
        switch (n % 3) {
            case 0: source = {{"type", "derive_centroid"}}; break;
            case 1: source = {{"type", "derive_coarse"}, {"seed", 7}}; break;
            default: {
                // First raster pixel of each component: a boundary click.
                const auto comps = forge::cluster8(gt);
                std::vector<forge::Prompt> prompts;
                for (const auto& c : comps.clusters()) prompts.push_back({c.pixels.front().x, c.pixels.front().y, forge::PromptKind::coarse});
                file_prompts.emplace_back(id, std::move(prompts));
                source = {{"type", "file"}, {"path", "prompts.csv"}};
            }
        }
        images.push_back({{"image_id", id},
                          {"image_path", "images/" + id + ".png"},
                          {"gt_path", "masks/" + id + ".png"},
                          {"prompt_source", source}});
    }
    forge::write_file(out / "prompts.csv", forge::format_prompt_csv(file_prompts));
    forge::write_file(out / "manifest.json", nlohmann::json{{"version", 1}, {"images", images}}.dump(2) + "\n");
    std::cout << "wrote " << kImages << " fixtures to " << out << "\n";
    return 0;
}
