#pragma once

// Dataset ingestion and serialization: grayscale PNG images and masks,
// the TNSR tensor container (also the remote inference body), JSON dataset
// manifests and CSV prompt files.

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forge/core_types.hpp"
#include "forge/input_assembly.hpp"
#include "forge/prompt_encoding.hpp"

namespace forge {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("read failed for '" + path.string() + "'");
    return std::move(ss).str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// PNG

/// Decoded PNG samples, interleaved, one or three channels (alpha dropped).
struct PngPixels {
    int width = 0;
    int height = 0;
    int channels = 1;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;

    double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }

    /// Gray value of pixel i in source units; RGB is reduced by Rec.601 luma.
    double gray(std::size_t i) const {
        if (channels == 1) return samples[i];
        const auto* p = &samples[i * 3];
        return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
};

namespace detail {

struct PngReadSource {
    std::string_view bytes;
    std::size_t offset = 0;
};

struct PngFailure {
    char message[256] = {};
};

inline void png_error_handler(png_structp png, png_const_charp msg) {
    auto* failure = static_cast<PngFailure*>(png_get_error_ptr(png));
    std::snprintf(failure->message, sizeof failure->message, "%s", msg);
    png_longjmp(png, 1);
}

inline void png_warning_handler(png_structp, png_const_charp) {}

inline void png_read_bytes(png_structp png, png_bytep out, png_size_t n) {
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->offset + n > src->bytes.size()) png_error(png, "unexpected end of PNG data");
    std::memcpy(out, src->bytes.data() + src->offset, n);
    src->offset += n;
}

inline void png_write_bytes(png_structp png, png_bytep data, png_size_t n) {
    auto* dst = static_cast<std::string*>(png_get_io_ptr(png));
    dst->append(reinterpret_cast<const char*>(data), n);
}

inline void png_flush_noop(png_structp) {}

// No objects with destructors live in this frame past setjmp; the row
// buffer is owned by the caller.
inline bool png_decode_raw(std::string_view bytes, PngPixels& out, std::vector<unsigned char>& raw, PngFailure& failure) {
    PngReadSource src{bytes, 0};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &failure, png_error_handler, png_warning_handler);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, &src, png_read_bytes);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    } else if (depth != 8 && depth != 16) {
        std::snprintf(failure.message, sizeof failure.message, "unsupported bit depth %d", depth);
        png_destroy_read_struct(&png, &info, nullptr);
        out.bit_depth = -depth;
        return false;
    }
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    raw.resize(rowbytes * static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) png_read_row(png, raw.data() + rowbytes * static_cast<std::size_t>(y), nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline bool png_encode_raw(int width, int height, int bit_depth, const std::vector<unsigned char>& raw, std::string& out,
                           PngFailure& failure) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &failure, png_error_handler, png_warning_handler);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, &out, png_write_bytes, png_flush_noop);
    png_set_compression_level(png, 9);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t rowbytes = static_cast<std::size_t>(width) * (bit_depth == 16 ? 2 : 1);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, raw.data() + rowbytes * static_cast<std::size_t>(y));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

}  // namespace detail

inline PngPixels decode_png(std::string_view bytes, const std::string& origin = "<memory>") {
    PngPixels out;
    std::vector<unsigned char> raw;
    detail::PngFailure failure;
    if (!detail::png_decode_raw(bytes, out, raw, failure)) {
        if (out.bit_depth < 0) throw format_error(origin + ": " + failure.message + " (expected 8 or 16)");
        throw io_error(origin + ": corrupt or unreadable PNG" + (failure.message[0] ? std::string(": ") + failure.message : ""));
    }
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
    out.samples.resize(n);
    if (out.bit_depth == 16) {
        for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    } else {
        for (std::size_t i = 0; i < n; ++i) out.samples[i] = raw[i];
    }
    return out;
}

/// Single-channel grayscale PNG, 8- or 16-bit, no filtering, zlib level 9.
inline std::string encode_png_gray(int width, int height, int bit_depth, std::span<const std::uint16_t> samples) {
    if (bit_depth != 8 && bit_depth != 16) throw format_error("PNG output supports 8 or 16 bits, got " + std::to_string(bit_depth));
    std::vector<unsigned char> raw(samples.size() * (bit_depth == 16 ? 2 : 1));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (bit_depth == 16) {
            raw[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
            raw[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
        } else {
            raw[i] = static_cast<unsigned char>(samples[i]);
        }
    }
    std::string out;
    detail::PngFailure failure;
    if (!detail::png_encode_raw(width, height, bit_depth, raw, out, failure)) {
        throw io_error(std::string("PNG encoding failed: ") + failure.message);
    }
    return out;
}

inline RasterImage image_from_png(const PngPixels& png) {
    std::vector<double> data(static_cast<std::size_t>(png.width) * png.height);
    const double max = png.max_value();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::clamp(png.gray(i) / max, 0.0, 1.0);
    return RasterImage(png.width, png.height, std::move(data));
}

inline RasterImage load_image(const fs::path& path) { return image_from_png(decode_png(read_file(path), path.string())); }

inline std::string encode_image_png(const RasterImage& image, int bit_depth = 8) {
    const double max = bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<std::uint16_t> samples(image.size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = static_cast<std::uint16_t>(std::lround(image[i] * max));
    return encode_png_gray(image.width(), image.height(), bit_depth, samples);
}

inline void save_image(const RasterImage& image, const fs::path& path, int bit_depth = 8) {
    write_file(path, encode_image_png(image, bit_depth));
}

/// Foreground is any pixel whose 8-bit gray value exceeds 127.
inline BinaryMask mask_from_png(const PngPixels& png) {
    std::vector<std::uint8_t> data(static_cast<std::size_t>(png.width) * png.height);
    const double scale = png.bit_depth == 16 ? 1.0 / 257.0 : 1.0;
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = png.gray(i) * scale > 127.0 ? 1 : 0;
    return BinaryMask(png.width, png.height, std::move(data));
}

inline BinaryMask load_mask(const fs::path& path) { return mask_from_png(decode_png(read_file(path), path.string())); }

inline std::string encode_mask_png(const BinaryMask& mask) {
    std::vector<std::uint16_t> samples(mask.size());
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = mask[i] ? 255 : 0;
    return encode_png_gray(mask.width(), mask.height(), 8, samples);
}

inline void save_mask(const BinaryMask& mask, const fs::path& path) { write_file(path, encode_mask_png(mask)); }

// ---------------------------------------------------------------------------
// TNSR container
//
//   "TNSR" | u8 version=1 | u8 dtype=1 (float32) | u16 channels | u32 height | u32 width
//   followed by channel-major, row-major float32 payload; all little-endian.

namespace tnsr {

inline constexpr std::array<char, 4> magic = {'T', 'N', 'S', 'R'};
inline constexpr std::uint8_t version = 1;
inline constexpr std::uint8_t dtype_float32 = 1;
inline constexpr std::size_t header_size = 4 + 1 + 1 + 2 + 4 + 4;

namespace detail {

template <typename U>
void put_le(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(std::string_view in, std::size_t at) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

}  // namespace detail

inline std::string encode(std::span<const FloatMap> channels) {
    if (channels.empty()) throw domain_error("TNSR: at least one channel is required");
    if (channels.size() > 0xffff) throw domain_error("TNSR: too many channels");
    const int w = channels[0].width();
    const int h = channels[0].height();
    for (const auto& c : channels) require_same_shape(channels[0], c, "TNSR channel");
    std::string out;
    out.reserve(header_size + channels.size() * channels[0].size() * 4);
    out.append(magic.data(), magic.size());
    out.push_back(static_cast<char>(version));
    out.push_back(static_cast<char>(dtype_float32));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(channels.size()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    for (const auto& c : channels) {
        for (double v : c.values()) {
            const float f = static_cast<float>(v);
            if (!std::isfinite(f)) throw domain_error("TNSR: value " + std::to_string(v) + " is not representable as float32");
            detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
        }
    }
    return out;
}

inline std::vector<FloatMap> decode(std::string_view bytes) {
    if (bytes.size() < header_size) throw io_error("TNSR: truncated header (" + std::to_string(bytes.size()) + " bytes)");
    if (std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) throw format_error("TNSR: bad magic");
    if (static_cast<std::uint8_t>(bytes[4]) != version) {
        throw format_error("TNSR: unsupported version " + std::to_string(static_cast<unsigned char>(bytes[4])));
    }
    if (static_cast<std::uint8_t>(bytes[5]) != dtype_float32) {
        throw format_error("TNSR: unsupported dtype " + std::to_string(static_cast<unsigned char>(bytes[5])));
    }
    const auto channels = detail::get_le<std::uint16_t>(bytes, 6);
    const auto height = detail::get_le<std::uint32_t>(bytes, 8);
    const auto width = detail::get_le<std::uint32_t>(bytes, 12);
    if (channels == 0) throw format_error("TNSR: zero channels");
    if (height == 0 || width == 0 || height > 1u << 20 || width > 1u << 20) throw format_error("TNSR: invalid dimensions");
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    const std::size_t expected = header_size + plane * channels * 4;
    if (bytes.size() < expected) {
        throw io_error("TNSR: truncated payload, expected " + std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) throw format_error("TNSR: trailing bytes after payload");
    std::vector<FloatMap> out;
    out.reserve(channels);
    std::size_t at = header_size;
    for (std::uint16_t c = 0; c < channels; ++c) {
        std::vector<double> data(plane);
        for (auto& v : data) {
            v = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, at));
            at += 4;
            if (!std::isfinite(v)) throw format_error("TNSR: non-finite value in channel " + std::to_string(c));
        }
        out.emplace_back(static_cast<int>(width), static_cast<int>(height), std::move(data));
    }
    return out;
}

}  // namespace tnsr

inline void save_floatmap(const FloatMap& map, const fs::path& path) { write_file(path, tnsr::encode(std::span(&map, 1))); }

inline void save_tensor(std::span<const FloatMap> channels, const fs::path& path) { write_file(path, tnsr::encode(channels)); }

inline std::vector<FloatMap> load_tensor(const fs::path& path) { return tnsr::decode(read_file(path)); }

/// Loads the first channel of a TNSR file.
inline FloatMap load_floatmap(const fs::path& path) { return load_tensor(path).front(); }

inline std::string encode_model_input(const ModelInput& input) { return tnsr::encode(input.channels()); }

inline ModelInput decode_model_input(std::string_view bytes) {
    auto channels = tnsr::decode(bytes);
    if (channels.size() != ModelInput::channel_count) {
        throw format_error("model input must have 3 channels, got " + std::to_string(channels.size()));
    }
    return ModelInput(std::move(channels[0]), std::move(channels[1]), std::move(channels[2]));
}

// ---------------------------------------------------------------------------
// Prompt CSV: header "image_id,x,y,kind", one prompt per row.

struct PromptRow {
    std::string image_id;
    Prompt prompt;
};

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

inline std::vector<PromptRow> parse_prompt_csv(std::string_view text, const std::string& origin = "<prompts>") {
    std::vector<PromptRow> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (!header_seen) {
            if (fields != std::vector<std::string>{"image_id", "x", "y", "kind"}) {
                throw format_error(origin + ":" + std::to_string(line_no) + ": expected header image_id,x,y,kind");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != 4) throw format_error(origin + ":" + std::to_string(line_no) + ": expected 4 fields");
        PromptRow row;
        row.image_id = fields[0];
        try {
            std::size_t used = 0;
            row.prompt.x = std::stoi(fields[1], &used);
            if (used != fields[1].size()) throw std::invalid_argument("x");
            row.prompt.y = std::stoi(fields[2], &used);
            if (used != fields[2].size()) throw std::invalid_argument("y");
        } catch (const std::logic_error&) {
            throw format_error(origin + ":" + std::to_string(line_no) + ": coordinates must be integers");
        }
        try {
            row.prompt.kind = prompt_kind_from_string(fields[3]);
        } catch (const format_error& e) {
            throw format_error(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw format_error(origin + ": empty prompt file");
    return rows;
}

inline std::string format_prompt_csv(std::span<const PromptSet> sets) {
    std::string out = "image_id,x,y,kind\n";
    for (const auto& set : sets) {
        for (const auto& p : set) {
            out += set.image_id() + "," + std::to_string(p.x) + "," + std::to_string(p.y) + "," + to_string(p.kind) + "\n";
        }
    }
    return out;
}

inline PromptSet prompts_for(std::span<const PromptRow> rows, const std::string& image_id) {
    std::vector<Prompt> prompts;
    for (const auto& r : rows) {
        if (r.image_id == image_id) prompts.push_back(r.prompt);
    }
    return PromptSet(image_id, std::move(prompts));
}

// ---------------------------------------------------------------------------
// Dataset manifest
//
// {
//   "version": 1,
//   "images": [
//     {"image_id": "a", "image_path": "img/a.png", "gt_path": "gt/a.png",
//      "prompt_source": {"type": "file", "path": "prompts.csv"}},
//     {"image_id": "b", "image_path": "img/b.png", "gt_path": "gt/b.png",
//      "prompt_source": {"type": "derive_coarse", "seed": 7}}
//   ]
// }
//
// Relative paths resolve against the manifest's directory.

struct PromptSource {
    enum class Type { file, derive_centroid, derive_coarse };
    Type type = Type::derive_centroid;
    fs::path path;
    std::uint64_t seed = 0;
};

struct ManifestEntry {
    std::string image_id;
    fs::path image_path;
    std::optional<fs::path> gt_path;
    PromptSource prompt_source;
};

struct DatasetManifest {
    int version = 1;
    std::vector<ManifestEntry> images;

    const ManifestEntry& entry(const std::string& image_id) const {
        for (const auto& e : images) {
            if (e.image_id == image_id) return e;
        }
        throw domain_error("image_id '" + image_id + "' is not in the manifest");
    }
};

class manifest_error : public format_error {
public:
    manifest_error(const std::string& json_path, const std::string& message)
        : format_error(json_path + ": " + message), json_path_(json_path) {}
    const std::string& json_path() const noexcept { return json_path_; }

private:
    std::string json_path_;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const std::string& at, const char* key,
                                           nlohmann::json::value_t type) {
    if (!obj.contains(key)) throw manifest_error(at + "." + key, "missing required field");
    const auto& v = obj.at(key);
    const bool ok = type == nlohmann::json::value_t::number_unsigned ? v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)
                                                                      : v.type() == type;
    if (!ok) throw manifest_error(at + "." + key, std::string("unexpected type ") + v.type_name());
    return v;
}

}  // namespace detail

/// Validates the manifest schema; with `check_files`, every referenced file
/// must exist.
inline DatasetManifest parse_manifest(const nlohmann::json& doc, const fs::path& base_dir, bool check_files = true) {
    using vt = nlohmann::json::value_t;
    if (!doc.is_object()) throw manifest_error("$", "manifest must be a JSON object");
    DatasetManifest m;
    m.version = static_cast<int>(detail::require_field(doc, "$", "version", vt::number_unsigned).get<long long>());
    if (m.version != 1) throw manifest_error("$.version", "unsupported version " + std::to_string(m.version));
    const auto& images = detail::require_field(doc, "$", "images", vt::array);
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
    auto check = [&](const fs::path& p, const std::string& at) {
        if (check_files && !fs::exists(p)) throw manifest_error(at, "file '" + p.string() + "' does not exist");
    };
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string at = "$.images[" + std::to_string(i) + "]";
        const auto& item = images[i];
        if (!item.is_object()) throw manifest_error(at, "entry must be an object");
        ManifestEntry e;
        e.image_id = detail::require_field(item, at, "image_id", vt::string).get<std::string>();
        if (e.image_id.empty() || e.image_id.find_first_of(",/\\\n") != std::string::npos) {
            throw manifest_error(at + ".image_id", "image_id must be non-empty without ',', '/', '\\' or newlines");
        }
        for (const auto& prev : m.images) {
            if (prev.image_id == e.image_id) throw manifest_error(at + ".image_id", "duplicate image_id '" + e.image_id + "'");
        }
        e.image_path = resolve(detail::require_field(item, at, "image_path", vt::string).get<std::string>());
        check(e.image_path, at + ".image_path");
        if (item.contains("gt_path") && !item.at("gt_path").is_null()) {
            e.gt_path = resolve(detail::require_field(item, at, "gt_path", vt::string).get<std::string>());
            check(*e.gt_path, at + ".gt_path");
        }
        const auto& src = detail::require_field(item, at, "prompt_source", vt::object);
        const std::string src_at = at + ".prompt_source";
        const auto type = detail::require_field(src, src_at, "type", vt::string).get<std::string>();
        if (type == "file") {
            e.prompt_source.type = PromptSource::Type::file;
            e.prompt_source.path = resolve(detail::require_field(src, src_at, "path", vt::string).get<std::string>());
            check(e.prompt_source.path, src_at + ".path");
        } else if (type == "derive_centroid") {
            e.prompt_source.type = PromptSource::Type::derive_centroid;
        } else if (type == "derive_coarse") {
            e.prompt_source.type = PromptSource::Type::derive_coarse;
            e.prompt_source.seed = detail::require_field(src, src_at, "seed", vt::number_unsigned).get<std::uint64_t>();
        } else {
            throw manifest_error(src_at + ".type", "unknown prompt source '" + type + "'");
        }
        if (e.prompt_source.type != PromptSource::Type::file && !e.gt_path) {
            throw config_error(at + ": prompt source '" + type + "' requires gt_path");
        }
        m.images.push_back(std::move(e));
    }
    return m;
}

inline DatasetManifest load_manifest(const fs::path& path) {
    const auto text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw manifest_error("$", std::string("invalid JSON in '") + path.string() + "': " + e.what());
    }
    return parse_manifest(doc, path.parent_path());
}

inline PromptSet resolve_prompts(const ManifestEntry& entry) {
    switch (entry.prompt_source.type) {
        case PromptSource::Type::file: {
            const auto rows = parse_prompt_csv(read_file(entry.prompt_source.path), entry.prompt_source.path.string());
            return prompts_for(rows, entry.image_id);
        }
        case PromptSource::Type::derive_centroid:
        case PromptSource::Type::derive_coarse: {
            if (!entry.gt_path) throw config_error("image '" + entry.image_id + "': derived prompts require gt_path");
            const auto mode = entry.prompt_source.type == PromptSource::Type::derive_centroid ? PromptKind::centroid : PromptKind::coarse;
            return derive_prompts(load_mask(*entry.gt_path), mode, entry.prompt_source.seed, entry.image_id);
        }
    }
    throw config_error("unhandled prompt source");
}

inline PromptSet resolve_prompts(const DatasetManifest& manifest, const std::string& image_id) {
    return resolve_prompts(manifest.entry(image_id));
}

}  // namespace forge
