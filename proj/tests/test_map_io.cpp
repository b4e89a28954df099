#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "triad/error.hpp"
#include "triad/map_io.hpp"

using namespace triad;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "triad_test_map_io";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("png16 load maps v/65535 with normalized=true") {
    AnomalyMap map;
    map.width = 2;
    map.height = 2;
    map.normalized = true;
    map.scores = {0.0f, 1.0f, 32768.0f / 65535.0f, 0.0f};
    const auto path = temp_dir() / "quad.png";
    map_io::write_anomaly_map(map, path, map_io::MapFormat::png16);

    const auto loaded = map_io::load_anomaly_map(path, map_io::MapFormat::png16);
    REQUIRE(loaded.normalized);
    CHECK(loaded.scores[0] == 0.0f);
    CHECK(loaded.scores[1] == 1.0f);
    CHECK(loaded.scores[2] == doctest::Approx(0.50000763).epsilon(1e-7));
    CHECK(loaded.scores[3] == 0.0f);
}

TEST_CASE("f32raw loads verbatim with normalized=false") {
    AnomalyMap map;
    map.width = 1;
    map.height = 1;
    map.scores = {3.5f};
    const auto path = temp_dir() / "one.f32";
    map_io::write_anomaly_map(map, path, map_io::MapFormat::f32raw);

    const auto loaded = map_io::load_anomaly_map(path, map_io::MapFormat::f32raw);
    CHECK_FALSE(loaded.normalized);
    CHECK(loaded.scores == std::vector<float>{3.5f});
}

TEST_CASE("f32raw sidecar/payload mismatch is an integrity error") {
    AnomalyMap map;
    map.width = 2;
    map.height = 1;
    map.scores = {1.0f, 2.0f};
    const auto path = temp_dir() / "short.f32";
    map_io::write_anomaly_map(map, path, map_io::MapFormat::f32raw);
    {
        std::ofstream side(path.string() + ".json");
        side << R"({"width":3,"height":1,"dtype":"f32le"})";
    }
    CHECK_THROWS_AS(map_io::load_anomaly_map(path, map_io::MapFormat::f32raw), IntegrityError);
}

TEST_CASE("f32raw rejects non-finite scores") {
    const auto path = temp_dir() / "nan.f32";
    {
        std::ofstream out(path, std::ios::binary);
        const float v = std::numeric_limits<float>::quiet_NaN();
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    {
        std::ofstream side(path.string() + ".json");
        side << R"({"width":1,"height":1,"dtype":"f32le"})";
    }
    CHECK_THROWS_AS(map_io::load_anomaly_map(path, map_io::MapFormat::f32raw), IntegrityError);
}

TEST_CASE("mask load: nonzero -> true, RGB rejected") {
    BinaryMask mask;
    mask.width = 2;
    mask.height = 1;
    mask.bits = {0, 1};
    const auto path = temp_dir() / "mask.png";
    map_io::write_mask(mask, path);
    const auto loaded = map_io::load_mask(path);
    CHECK(loaded.bits == std::vector<std::uint8_t>{0, 1});

    // 2x1 red RGB PNG
    static const unsigned char rgb_png[] = {
        0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48,
        0x44, 0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00,
        0x00, 0x7b, 0x40, 0xe8, 0xdd, 0x00, 0x00, 0x00, 0x0f, 0x49, 0x44, 0x41, 0x54, 0x78,
        0x9c, 0x63, 0xfc, 0xcf, 0xc0, 0xc0, 0xc0, 0xc0, 0x00, 0x00, 0x06, 0x08, 0x01, 0x01,
        0xcb, 0x47, 0x76, 0x75, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42,
        0x60, 0x82};
    const auto rgb = temp_dir() / "rgb.png";
    {
        std::ofstream out(rgb, std::ios::binary);
        out.write(reinterpret_cast<const char*>(rgb_png), sizeof(rgb_png));
    }
    CHECK_THROWS_AS(map_io::load_mask(rgb), FormatError);

    // a 16-bit map file also violates the 8-bit grayscale precondition
    AnomalyMap map;
    map.width = 1;
    map.height = 1;
    map.normalized = true;
    map.scores = {0.5f};
    const auto deep = temp_dir() / "deep.png";
    map_io::write_anomaly_map(map, deep, map_io::MapFormat::png16);
    CHECK_THROWS_AS(map_io::load_mask(deep), FormatError);
}

TEST_CASE("manifest writes are canonical and byte-identical") {
    nlohmann::json j = {{"zeta", 1}, {"alpha", {{"b", 2.5}, {"a", "x"}}}};
    const auto p1 = temp_dir() / "m1.json";
    const auto p2 = temp_dir() / "m2.json";
    map_io::write_manifest(j, p1);
    map_io::write_manifest(j, p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(map_io::read_manifest(p1) == j);

    CHECK_THROWS_AS(map_io::write_manifest(j, temp_dir() / "no_such_dir" / "m.json"), IoError);
}

TEST_CASE("round-trip: load after write is identity for both formats") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        AnomalyMap map;
        map.width = 1 + static_cast<int>(rng() % 16);
        map.height = 1 + static_cast<int>(rng() % 16);
        map.scores.resize(static_cast<std::size_t>(map.width) * map.height);
        std::uniform_real_distribution<float> unit(0.0f, 1.0f);
        for (auto& s : map.scores) s = unit(rng);

        AnomalyMap raw = map;
        raw.normalized = false;
        const auto rawpath = temp_dir() / ("rt_raw_" + std::to_string(trial) + ".f32");
        map_io::write_anomaly_map(raw, rawpath, map_io::MapFormat::f32raw);
        const auto raw_back = map_io::load_anomaly_map(rawpath, map_io::MapFormat::f32raw);
        CHECK(raw_back.scores == raw.scores);
        CHECK(raw_back.width == raw.width);

        // png16 round-trip is exact on the 16-bit lattice
        map.normalized = true;
        for (auto& s : map.scores)
            s = static_cast<float>(std::lround(s * 65535.0f)) / 65535.0f;
        const auto pngpath = temp_dir() / ("rt_png_" + std::to_string(trial) + ".png");
        map_io::write_anomaly_map(map, pngpath, map_io::MapFormat::png16);
        const auto png_back = map_io::load_anomaly_map(pngpath, map_io::MapFormat::png16);
        CHECK(png_back.scores == map.scores);
    }
}

TEST_CASE("png16 mapping is monotone in the stored value") {
    AnomalyMap map;
    map.width = 3;
    map.height = 1;
    map.normalized = true;
    map.scores = {100.0f / 65535.0f, 101.0f / 65535.0f, 65534.0f / 65535.0f};
    const auto path = temp_dir() / "mono.png";
    map_io::write_anomaly_map(map, path, map_io::MapFormat::png16);
    const auto loaded = map_io::load_anomaly_map(path, map_io::MapFormat::png16);
    CHECK(loaded.scores[0] < loaded.scores[1]);
    CHECK(loaded.scores[1] < loaded.scores[2]);
}
