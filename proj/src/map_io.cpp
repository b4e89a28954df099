#include "triad/map_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "png_gray.hpp"
#include "triad/error.hpp"

namespace triad::map_io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path sidecar_path(const fs::path& payload) { return payload.string() + ".json"; }

std::vector<char> read_all_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

AnomalyMap load_f32raw(const fs::path& path) {
    json side;
    {
        std::ifstream in(sidecar_path(path));
        if (!in) throw FormatError("missing sidecar " + sidecar_path(path).string());
        try {
            in >> side;
        } catch (const json::exception& e) {
            throw FormatError("bad sidecar " + sidecar_path(path).string() + ": " + e.what());
        }
    }
    if (side.value("dtype", "") != "f32le")
        throw FormatError("sidecar dtype must be f32le: " + sidecar_path(path).string());
    const int w = side.value("width", 0);
    const int h = side.value("height", 0);
    if (w < 1 || h < 1) throw FormatError("sidecar dimensions invalid: " + sidecar_path(path).string());

    auto bytes = read_all_bytes(path);
    const std::size_t expect = static_cast<std::size_t>(w) * h * sizeof(float);
    if (bytes.size() != expect)
        throw IntegrityError("payload length " + std::to_string(bytes.size()) + " != width*height*4 = " +
                             std::to_string(expect) + ": " + path.string());

    AnomalyMap map;
    map.width = w;
    map.height = h;
    map.normalized = false;
    map.scores.resize(static_cast<std::size_t>(w) * h);
    static_assert(std::endian::native == std::endian::little, "f32le load assumes little-endian host");
    std::memcpy(map.scores.data(), bytes.data(), bytes.size());
    for (float v : map.scores)
        if (!std::isfinite(v))
            throw IntegrityError("non-finite score in " + path.string());
    return map;
}

}  // namespace

AnomalyMap load_anomaly_map(const fs::path& path, MapFormat format) {
    if (format == MapFormat::f32raw) return load_f32raw(path);
    auto img = detail::read_png_gray16(path);
    AnomalyMap map;
    map.width = img.width;
    map.height = img.height;
    map.normalized = true;
    map.scores.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        map.scores[i] = static_cast<float>(img.pixels[i]) / 65535.0f;
    return map;
}

void write_anomaly_map(const AnomalyMap& map, const fs::path& path, MapFormat format) {
    if (map.width < 1 || map.height < 1 ||
        map.scores.size() != static_cast<std::size_t>(map.width) * map.height)
        throw ArgumentError("anomaly map dimensions inconsistent with score count");
    if (format == MapFormat::png16) {
        if (!map.normalized) throw ArgumentError("png16 write requires a normalized map");
        detail::Gray16Image img;
        img.width = map.width;
        img.height = map.height;
        img.pixels.resize(map.scores.size());
        for (std::size_t i = 0; i < map.scores.size(); ++i)
            img.pixels[i] = static_cast<std::uint16_t>(std::lround(map.scores[i] * 65535.0f));
        detail::write_png_gray16(img, path);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    static_assert(std::endian::native == std::endian::little);
    out.write(reinterpret_cast<const char*>(map.scores.data()),
              static_cast<std::streamsize>(map.scores.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path.string());
    json side = {{"width", map.width}, {"height", map.height}, {"dtype", "f32le"}};
    write_manifest(side, sidecar_path(path));
}

BinaryMask load_mask(const fs::path& path) {
    auto img = detail::read_png_gray8(path);
    BinaryMask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.bits.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) mask.bits[i] = img.pixels[i] != 0;
    return mask;
}

void write_mask(const BinaryMask& mask, const fs::path& path) {
    detail::Gray8Image img;
    img.width = mask.width;
    img.height = mask.height;
    img.pixels.resize(mask.bits.size());
    for (std::size_t i = 0; i < mask.bits.size(); ++i) img.pixels[i] = mask.bits[i] ? 255 : 0;
    detail::write_png_gray8(img, path);
}

Raster load_raster(const fs::path& path) {
    auto img = detail::read_png_gray8(path);
    return Raster{img.width, img.height, std::move(img.pixels)};
}

void write_raster(const Raster& raster, const fs::path& path) {
    detail::write_png_gray8({raster.width, raster.height, raster.pixels}, path);
}

void write_manifest(const json& record, const fs::path& path) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(dir))
        throw IoError("destination directory does not exist: " + dir.string());
    // nlohmann::json keeps object keys sorted; dump() emits shortest round-trip
    // floats, so equal values serialize to identical bytes.
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << record.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

json read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw FormatError("bad JSON in " + path.string() + ": " + e.what());
    }
}

}  // namespace triad::map_io
