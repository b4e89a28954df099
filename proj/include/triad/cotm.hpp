#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "triad/instructiad.hpp"
#include "triad/types.hpp"

#include <nlohmann/json.hpp>

namespace triad::cotm {

enum class MfgSource { web, llm, gpt, factory };

struct MfgStep {
    std::string name;
    std::string description;
};

struct MfgProcess {
    std::string product_class;
    std::vector<MfgStep> steps;
    MfgSource source = MfgSource::llm;

    nlohmann::json to_json() const;
    static MfgProcess from_json(const nlohmann::json& j);
};

/// MFG store: JSON object keyed by product_class.
std::map<std::string, MfgProcess> load_mfg_store(const std::filesystem::path& path);
void write_mfg_store(const std::map<std::string, MfgProcess>& store,
                     const std::filesystem::path& path);

struct AttributeEdit {
    std::string attribute;  // color, component_type, quantity, ...
    std::string old_value;
    std::string new_value;
};

struct EditPlan {
    std::vector<AttributeEdit> edits;
    std::optional<std::string> inject_defect;
    std::uint64_t seed = 0;
};

/// Mode (c): exact-substring attribute edits applied left to right, optional
/// defect sentence appended. Label is abnormal iff a defect was injected.
std::pair<std::string, Label> augment_caption(const std::string& caption, const EditPlan& plan);

/// Mode (b): inspector-style checklist, one line per MFG step; the step
/// matching the coarse defect label is marked FAIL. Empty label = normal
/// sample, all-pass.
std::string build_checklist(const MfgProcess& mfg, const std::string& coarse_label,
                            const std::map<std::string, std::vector<std::string>>& synonyms = {});

class GenClient {
public:
    virtual ~GenClient() = default;
    virtual std::string generate(const std::string& system, const std::string& user) = 0;
    virtual std::string identity() const = 0;
};

/// Deterministic seeded template filler for tests and offline runs.
class StubGenClient : public GenClient {
public:
    explicit StubGenClient(std::uint64_t seed) : seed_(seed) {}
    std::string generate(const std::string& system, const std::string& user) override;
    std::string identity() const override { return "stub:" + std::to_string(seed_); }

private:
    std::uint64_t seed_;
};

/// Chat-completion-style HTTP JSON client; 3 attempts with exponential
/// backoff, auth token from an environment variable.
class HttpGenClient : public GenClient {
public:
    HttpGenClient(std::string host, int port, std::string path, std::string model,
                  std::string token_env = "TRIAD_GEN_TOKEN");
    std::string generate(const std::string& system, const std::string& user) override;
    std::string identity() const override;

private:
    std::string host_, path_, model_, token_env_;
    int port_;
};

struct CotResult {
    std::string text;
    std::string prompt_hash;     // FNV-1a 64 of the rendered prompt
    std::string client_identity;
};

/// Mode (a): reasoning trajectory interleaving the caption with MFG steps,
/// produced by the generation client.
CotResult generate_cot(const std::string& caption, const MfgProcess& mfg, GenClient& client);

std::string fnv1a_hex(const std::string& text);

struct FilterOutcome {
    std::vector<instructiad::InstructionRecord> all;       // audit trail, flags applied
    std::vector<instructiad::InstructionRecord> exported;  // training export
    std::vector<std::string> unknown_ids;                  // warnings
};

FilterOutcome filter_records(std::span<const instructiad::InstructionRecord> records,
                             const std::set<std::string>& rejected_ids);

const char* to_string(MfgSource s);

}  // namespace triad::cotm
