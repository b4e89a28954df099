#include "triad/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "triad/error.hpp"

#include <nlohmann/json.hpp>

namespace triad::config {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

// flat TOML subset: comments, [section] headers that prefix keys with
// "section.", and scalar key = value lines
std::map<std::string, std::string> parse_flat_toml(std::istream& in, const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = strip_quotes(trim(line.substr(eq + 1)));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

void flatten_json(const json& j, const std::string& prefix,
                  std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : j.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object())
            flatten_json(value, path, kv);
        else if (value.is_string())
            kv[path] = value.get<std::string>();
        else
            kv[path] = value.dump();
    }
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

void apply_one(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset_root") cfg.dataset_root = value;
    else if (key == "run_dir") cfg.run_dir = value;
    else if (key == "template") cfg.prompt_template = value;
    else if (key == "mfg_store") cfg.mfg_store = value;
    else if (key == "workers") cfg.workers = parse_number<int>(key, value);
    else if (key == "model" || key == "endpoint.model") cfg.model = value;
    else if (key == "endpoint.host") cfg.endpoint_host = value;
    else if (key == "endpoint.port") cfg.endpoint_port = parse_number<int>(key, value);
    else if (key == "endpoint.path") cfg.endpoint_path = value;
    else if (key == "threshold" || key == "egroi.threshold")
        cfg.egroi.threshold = parse_double(key, value);
    else if (key == "box_side" || key == "egroi.box_side")
        cfg.egroi.box_side = parse_number<int>(key, value);
    else if (key == "iou_merge" || key == "egroi.iou_merge")
        cfg.egroi.iou_merge = parse_double(key, value);
    else if (key == "cap" || key == "egroi.cap") cfg.egroi.cap = parse_number<int>(key, value);
    else if (key == "pool" || key == "egroi.pool") cfg.egroi.pool = parse_number<int>(key, value);
    else if (key == "budget" || key == "egroi.budget")
        cfg.egroi.budget = parse_number<int>(key, value);
    else if (key == "connectivity" || key == "egroi.connectivity")
        cfg.egroi.connectivity = parse_number<int>(key, value);
    else if (key == "seed" || key == "egroi.seed")
        cfg.egroi.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "base_grid_w" || key == "egroi.base_grid_w")
        cfg.egroi.base_grid_w = parse_number<int>(key, value);
    else if (key == "base_grid_h" || key == "egroi.base_grid_h")
        cfg.egroi.base_grid_h = parse_number<int>(key, value);
    else if (key == "patch_grid_w" || key == "egroi.patch_grid_w")
        cfg.egroi.patch_grid_w = parse_number<int>(key, value);
    else if (key == "patch_grid_h" || key == "egroi.patch_grid_h")
        cfg.egroi.patch_grid_h = parse_number<int>(key, value);
    else
        throw ConfigError("unknown config key '" + key + "'");
}

void validate(const RunConfig& cfg) {
    if (cfg.egroi.threshold == 0.0 || std::abs(cfg.egroi.threshold) > 1.0)
        throw ConfigError("threshold must lie in [-1,1] excluding 0");
    if (cfg.egroi.cap < 1) throw ConfigError("cap must be >= 1");
    if (cfg.egroi.box_side < 1) throw ConfigError("box_side must be >= 1");
    if (cfg.egroi.iou_merge <= 0.0 || cfg.egroi.iou_merge > 1.0)
        throw ConfigError("iou_merge must be in (0,1]");
    if (cfg.egroi.pool < 1) throw ConfigError("pool must be >= 1");
    if (cfg.egroi.connectivity != 4 && cfg.egroi.connectivity != 8)
        throw ConfigError("connectivity must be 4 or 8");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();

    std::map<std::string, std::string> kv;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            flatten_json(json::parse(text), "", kv);
        } catch (const json::exception& e) {
            throw ConfigError("bad JSON config " + path.string() + ": " + e.what());
        }
    } else {
        std::istringstream stream(text);
        kv = parse_flat_toml(stream, path.string());
    }

    RunConfig cfg;
    for (const auto& [key, value] : kv) apply_one(cfg, key, value);
    validate(cfg);
    return cfg;
}

void apply_overrides(RunConfig& cfg, const std::map<std::string, std::string>& overrides) {
    for (const auto& [key, value] : overrides) apply_one(cfg, key, value);
    validate(cfg);
}

}  // namespace triad::config
