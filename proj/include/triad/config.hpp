#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "triad/egroi.hpp"

namespace triad::config {

struct RunConfig {
    std::string dataset_root = ".";
    std::string run_dir = "run/default";
    egroi::EgroiConfig egroi;
    std::string prompt_template = "general";
    std::string mfg_store;
    std::string endpoint_host;
    int endpoint_port = 443;
    std::string endpoint_path = "/v1/chat/completions";
    std::string model = "gpt-4";
    int workers = 1;
};

/// Accepts flat TOML (key = value, with optional [egroi]/[endpoint] sections)
/// or a JSON object with the same keys. Unknown keys are rejected.
RunConfig parse_config_file(const std::filesystem::path& path);

/// key=value overrides (e.g. from --set flags); applied on top of file values.
void apply_overrides(RunConfig& cfg, const std::map<std::string, std::string>& overrides);

RunConfig default_config();

}  // namespace triad::config
