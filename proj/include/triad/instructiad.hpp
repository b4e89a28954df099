#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "triad/types.hpp"

#include <nlohmann/json.hpp>

namespace triad::instructiad {

enum class TaskKind { anomaly_detection, attribute_caption, anomaly_analysis, cot_m };
enum class Provenance { human, generated, augmented };

constexpr const char* kDefectVerdict = "This product is defective.";
constexpr const char* kAcceptableVerdict = "This product is acceptable.";

struct InstructionRecord {
    std::string id;
    std::string sample_id;
    TaskKind task;
    std::string prompt;
    std::string response;
    std::vector<std::string> image_refs;
    std::optional<std::string> roi_manifest_ref;
    Provenance provenance = Provenance::human;
    std::set<std::string> flags;
    std::map<std::string, std::string> meta;  // client identity, prompt hash, ...

    nlohmann::json to_json() const;
    static InstructionRecord from_json(const nlohmann::json& j);
};

struct AnnotatedSample {
    std::string sample_id;
    std::string product_class;
    Label label = Label::normal;
    std::optional<std::string> caption;
    std::string image_ref;
};

/// Binary Yes/No classification record; response "Yes" iff abnormal.
InstructionRecord build_ad_record(const AnnotatedSample& sample);

/// Attribute-level caption record; response is the human caption verbatim.
InstructionRecord build_caption_record(const AnnotatedSample& sample);

/// Verdict line + generated attribute-grounded explanation.
InstructionRecord build_analysis_record(const AnnotatedSample& sample,
                                        const std::string& explanation);

/// Throws on records violating their task-specific response invariant.
void validate_record(const InstructionRecord& record);

struct DatasetStats {
    std::map<std::string, std::size_t> per_task;
    std::map<std::string, std::size_t> per_class;
    std::size_t normal = 0, abnormal = 0, unknown_label = 0;
    double human_balance_ratio = 0.0;  // normal/abnormal over human-provenance records, 0 if empty
    std::vector<std::string> uncovered_classes;

    nlohmann::json to_json() const;
};

DatasetStats dataset_stats(std::span<const InstructionRecord> records,
                           std::span<const std::string> catalog = {});

/// Token-level NLL: -sum of log-probabilities. Additive over concatenation.
double sft_nll(std::span<const double> token_logprobs);

void write_jsonl(std::span<const InstructionRecord> records, const std::filesystem::path& path);
std::vector<InstructionRecord> read_jsonl(const std::filesystem::path& path);

const char* to_string(TaskKind t);
const char* to_string(Provenance p);

}  // namespace triad::instructiad
