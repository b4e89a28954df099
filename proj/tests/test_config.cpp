#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "triad/config.hpp"
#include "triad/error.hpp"

using namespace triad;
using namespace triad::config;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& text) {
    const auto dir = std::filesystem::temp_directory_path() / "triad_test_config";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream out(path);
    out << text;
    return path;
}

}  // namespace

TEST_CASE("empty file yields defaults, threshold 0.9 and cap 4") {
    const auto cfg = parse_config_file(write_file("empty.toml", ""));
    CHECK(cfg.egroi.threshold == 0.9);
    CHECK(cfg.egroi.cap == 4);
    CHECK(cfg.egroi.box_side == 336);
    CHECK(cfg.egroi.iou_merge == 0.5);
    CHECK(cfg.egroi.budget == 32768);
}

TEST_CASE("TOML values and sections are applied") {
    const auto cfg = parse_config_file(write_file("a.toml", R"(
run_dir = "run/exp1"  # comment
template = "onevision"

[egroi]
threshold = 0.8
box_side = 224
seed = 42
)"));
    CHECK(cfg.run_dir == "run/exp1");
    CHECK(cfg.prompt_template == "onevision");
    CHECK(cfg.egroi.threshold == 0.8);
    CHECK(cfg.egroi.box_side == 224);
    CHECK(cfg.egroi.seed == 42);
}

TEST_CASE("JSON config with the same keys is accepted") {
    const auto cfg = parse_config_file(write_file("a.json", R"({
  "run_dir": "run/exp2",
  "egroi": {"threshold": 0.7, "cap": 2}
})"));
    CHECK(cfg.run_dir == "run/exp2");
    CHECK(cfg.egroi.threshold == 0.7);
    CHECK(cfg.egroi.cap == 2);
}

TEST_CASE("flag overrides beat file values") {
    auto cfg = parse_config_file(write_file("b.toml", "threshold = 0.9\n"));
    apply_overrides(cfg, {{"threshold", "0.8"}});
    CHECK(cfg.egroi.threshold == 0.8);
}

TEST_CASE("unknown keys and bad types are config errors naming the key") {
    CHECK_THROWS_WITH_AS(parse_config_file(write_file("u.toml", "no_such_key = 1\n")),
                         doctest::Contains("no_such_key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_file(write_file("t.toml", "box_side = \"wide\"\n")),
                         doctest::Contains("box_side"), ConfigError);
}

TEST_CASE("invalid values are rejected at validation") {
    CHECK_THROWS_AS(parse_config_file(write_file("v1.toml", "threshold = 0\n")), ConfigError);
    CHECK_THROWS_AS(parse_config_file(write_file("v2.toml", "connectivity = 6\n")), ConfigError);
    CHECK_THROWS_AS(parse_config_file(write_file("v3.toml", "cap = 0\n")), ConfigError);
}
