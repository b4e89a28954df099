#include "triad/cotm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "triad/error.hpp"
#include "triad/map_io.hpp"

#include <httplib.h>

namespace triad::cotm {

using nlohmann::json;

const char* to_string(MfgSource s) {
    switch (s) {
        case MfgSource::web: return "web";
        case MfgSource::llm: return "llm";
        case MfgSource::gpt: return "gpt";
        default: return "factory";
    }
}

namespace {

MfgSource source_from(const std::string& s) {
    if (s == "web") return MfgSource::web;
    if (s == "llm") return MfgSource::llm;
    if (s == "gpt") return MfgSource::gpt;
    if (s == "factory") return MfgSource::factory;
    throw FormatError("unknown MFG source: " + s);
}

std::vector<std::string> tokenize_lower(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

}  // namespace

json MfgProcess::to_json() const {
    json jsteps = json::array();
    for (const auto& s : steps) jsteps.push_back({{"name", s.name}, {"description", s.description}});
    return {{"product_class", product_class}, {"steps", jsteps}, {"source", cotm::to_string(source)}};
}

MfgProcess MfgProcess::from_json(const json& j) {
    MfgProcess mfg;
    mfg.product_class = j.at("product_class").get<std::string>();
    for (const auto& js : j.at("steps"))
        mfg.steps.push_back({js.at("name").get<std::string>(), js.value("description", "")});
    mfg.source = source_from(j.value("source", "llm"));
    if (mfg.steps.empty()) throw FormatError("MFG process for " + mfg.product_class + " has no steps");
    for (const auto& s : mfg.steps)
        if (s.name.empty()) throw FormatError("MFG step with empty name in " + mfg.product_class);
    return mfg;
}

std::map<std::string, MfgProcess> load_mfg_store(const std::filesystem::path& path) {
    const json j = map_io::read_manifest(path);
    std::map<std::string, MfgProcess> store;
    for (const auto& [key, value] : j.items()) store[key] = MfgProcess::from_json(value);
    return store;
}

void write_mfg_store(const std::map<std::string, MfgProcess>& store,
                     const std::filesystem::path& path) {
    json j = json::object();
    for (const auto& [key, mfg] : store) j[key] = mfg.to_json();
    map_io::write_manifest(j, path);
}

std::pair<std::string, Label> augment_caption(const std::string& caption, const EditPlan& plan) {
    std::string text = caption;
    for (const auto& edit : plan.edits) {
        const auto pos = text.find(edit.old_value);
        if (pos == std::string::npos)
            throw ArgumentError("edit for attribute '" + edit.attribute + "': value '" +
                                edit.old_value + "' not present in caption");
        text.replace(pos, edit.old_value.size(), edit.new_value);
    }
    if (plan.inject_defect) {
        if (!text.empty() && text.back() != ' ' && text.back() != '\n') text += " ";
        text += *plan.inject_defect;
        return {text, Label::abnormal};
    }
    return {text, Label::normal};
}

std::string build_checklist(const MfgProcess& mfg, const std::string& coarse_label,
                            const std::map<std::string, std::vector<std::string>>& synonyms) {
    if (mfg.steps.empty()) throw ArgumentError("MFG process has no steps");

    int fail_step = -1;
    if (!coarse_label.empty()) {
        // expand label tokens through the synonym table, then pick the step
        // with the largest token overlap
        std::vector<std::string> label_tokens = tokenize_lower(coarse_label);
        std::vector<std::string> expanded = label_tokens;
        for (const auto& tok : label_tokens) {
            const auto it = synonyms.find(tok);
            if (it != synonyms.end())
                for (const auto& syn : it->second) expanded.push_back(syn);
        }
        std::size_t best = 0;
        for (std::size_t i = 0; i < mfg.steps.size(); ++i) {
            const auto step_tokens =
                tokenize_lower(mfg.steps[i].name + " " + mfg.steps[i].description);
            std::size_t overlap = 0;
            for (const auto& tok : expanded)
                overlap += std::count(step_tokens.begin(), step_tokens.end(), tok);
            if (overlap > best) {
                best = overlap;
                fail_step = static_cast<int>(i);
            }
        }
        if (fail_step < 0)
            throw ArgumentError("defect label '" + coarse_label +
                                "' matches no manufacturing step; route record to manual filter");
    }

    std::ostringstream out;
    for (std::size_t i = 0; i < mfg.steps.size(); ++i) {
        out << "Step " << (i + 1) << " — " << mfg.steps[i].name << ": ";
        if (static_cast<int>(i) == fail_step)
            out << "FAIL (" << coarse_label << ")";
        else
            out << "pass";
        out << '\n';
    }
    out << (fail_step >= 0 ? instructiad::kDefectVerdict : instructiad::kAcceptableVerdict);
    out << '\n';
    return out.str();
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << hash;
    return out.str();
}

namespace {

constexpr const char* kCotSystemPrompt =
    "You are a meticulous factory quality inspector. Walk through the product's "
    "manufacturing process step by step, relate each step to the visual details in the "
    "caption, and conclude whether the product is acceptable or defective.";
constexpr const char* kCotPromptVersion = "cot-trajectory-v1";

std::string render_cot_user_prompt(const std::string& caption, const MfgProcess& mfg) {
    std::ostringstream out;
    out << "Product: " << mfg.product_class << "\n";
    out << "Caption: " << caption << "\n";
    out << "Manufacturing process:\n";
    for (std::size_t i = 0; i < mfg.steps.size(); ++i) {
        out << (i + 1) << ". " << mfg.steps[i].name;
        if (!mfg.steps[i].description.empty()) out << ": " << mfg.steps[i].description;
        out << "\n";
    }
    out << "Write the inspection reasoning.";
    return out.str();
}

}  // namespace

CotResult generate_cot(const std::string& caption, const MfgProcess& mfg, GenClient& client) {
    if (caption.empty()) throw ArgumentError("empty caption");
    if (mfg.steps.empty()) throw ArgumentError("MFG process has no steps");
    const std::string user = render_cot_user_prompt(caption, mfg);
    const std::string text = client.generate(kCotSystemPrompt, user);
    if (text.empty()) throw GenerationError("client returned an empty trajectory");
    CotResult result;
    result.text = text;
    result.prompt_hash = fnv1a_hex(std::string(kCotPromptVersion) + "\n" + kCotSystemPrompt + "\n" + user);
    result.client_identity = client.identity();
    return result;
}

std::string StubGenClient::generate(const std::string& system, const std::string& user) {
    (void)system;
    // Seeded phrasing variations over the steps listed in the user prompt.
    std::mt19937_64 rng(seed_ ^ std::hash<std::string>{}(user));
    static const char* openers[] = {"Inspecting the product against its process.",
                                    "Checking each production step in order.",
                                    "Reviewing the item step by step."};
    static const char* verdicts[] = {"No deviation from the process is visible.",
                                     "Each step's outcome matches the caption."};
    std::ostringstream out;
    out << openers[rng() % 3] << "\n";
    std::istringstream lines(user);
    std::string line;
    bool in_steps = false;
    while (std::getline(lines, line)) {
        if (line == "Manufacturing process:") {
            in_steps = true;
            continue;
        }
        if (!in_steps || line.empty() || !std::isdigit(static_cast<unsigned char>(line[0])))
            continue;
        std::string step = line.substr(line.find(' ') + 1);
        const auto colon = step.find(':');
        if (colon != std::string::npos) step = step.substr(0, colon);
        out << "- " << step << ": consistent with the caption (check " << rng() % 100 << ").\n";
    }
    out << verdicts[rng() % 2] << "\n";
    return out.str();
}

HttpGenClient::HttpGenClient(std::string host, int port, std::string path, std::string model,
                             std::string token_env)
    : host_(std::move(host)),
      path_(std::move(path)),
      model_(std::move(model)),
      token_env_(std::move(token_env)),
      port_(port) {}

std::string HttpGenClient::identity() const {
    return "http:" + host_ + ":" + std::to_string(port_) + path_ + "#" + model_;
}

std::string HttpGenClient::generate(const std::string& system, const std::string& user) {
    const json body = {{"model", model_},
                       {"messages", json::array({{{"role", "system"}, {"content", system}},
                                                 {{"role", "user"}, {"content", user}}})}};
    std::string last_error;
    for (int attempt = 1; attempt <= 3; ++attempt) {
        httplib::Client client(host_, port_);
        client.set_connection_timeout(10);
        client.set_read_timeout(120);
        httplib::Headers headers;
        if (const char* token = std::getenv(token_env_.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + token);
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (res && res->status == 200) {
            try {
                const json j = json::parse(res->body);
                const std::string text =
                    j.at("choices").at(0).at("message").at("content").get<std::string>();
                if (text.empty()) throw GenerationError("empty generation from " + identity());
                return text;
            } catch (const json::exception& e) {
                throw GenerationError("unparseable completion from " + identity() + ": " + e.what());
            }
        }
        last_error = res ? "HTTP " + std::to_string(res->status)
                         : "transport: " + httplib::to_string(res.error());
        if (attempt < 3)
            std::this_thread::sleep_for(std::chrono::milliseconds(250u << attempt));
    }
    throw GenerationError("generation failed after 3 attempts (" + last_error + ")", true);
}

FilterOutcome filter_records(std::span<const instructiad::InstructionRecord> records,
                             const std::set<std::string>& rejected_ids) {
    FilterOutcome outcome;
    std::set<std::string> seen;
    for (const auto& rec : records) {
        auto copy = rec;
        seen.insert(rec.id);
        if (rejected_ids.contains(rec.id)) copy.flags.insert("filtered_out");
        if (!copy.flags.contains("filtered_out")) outcome.exported.push_back(copy);
        outcome.all.push_back(std::move(copy));
    }
    for (const auto& id : rejected_ids)
        if (!seen.contains(id)) outcome.unknown_ids.push_back(id);
    return outcome;
}

}  // namespace triad::cotm
