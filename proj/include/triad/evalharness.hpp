#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triad/cotm.hpp"
#include "triad/expert_metrics.hpp"
#include "triad/types.hpp"

#include <nlohmann/json.hpp>

namespace triad::eval {

enum class GroundTruth { defect, normal };
enum class Answer { defect, normal, abstain };
enum class Template { general, onevision, myriad, anomalygpt };
enum class Shot { zero, one };
enum class ExtractScheme { option_letter, keyword };

struct EvalItem {
    std::string sample_id;
    std::string product_class;
    GroundTruth ground_truth = GroundTruth::normal;
    std::optional<std::string> reference_image;
    std::optional<std::string> mfg_ref;      // key into the MFG store
    std::optional<std::string> gt_mask_ref;  // for the size breakdown
    std::optional<std::string> hint;         // AnomalyGPT per-product hint

    nlohmann::json to_json() const;
    static EvalItem from_json(const nlohmann::json& j);
};

struct ModelResponse {
    std::string sample_id;
    std::string response_text;
    std::optional<double> normal_score_query;
    std::optional<double> normal_score_reference;

    nlohmann::json to_json() const;
    static ModelResponse from_json(const nlohmann::json& j);
};

std::string render_prompt(const EvalItem& item, Template tmpl, bool with_mfg, Shot shot,
                          const std::map<std::string, cotm::MfgProcess>& mfg_store);

Answer extract_answer(const std::string& response, ExtractScheme scheme);

struct SizeBucket {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

struct RunReport {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t abstained = 0;
    double accuracy = 0.0;
    SizeBucket small, medium, large, normal;
    std::optional<double> delta_mfg;  // paired-run accuracy delta, signed

    nlohmann::json to_json() const;
    std::string to_text() const;
};

/// Abstain counts as incorrect. gt_masks (keyed by sample_id) feed the
/// defect-size breakdown; defect items without a mask are counted in totals
/// only.
RunReport score_run(std::span<const EvalItem> items,
                    const std::map<std::string, Answer>& answers,
                    const std::map<std::string, BinaryMask>* gt_masks = nullptr);

/// Paired runs (without / with MFG context): base report plus delta_mfg.
RunReport score_paired(std::span<const EvalItem> items,
                       const std::map<std::string, Answer>& answers_base,
                       const std::map<std::string, Answer>& answers_mfg,
                       const std::map<std::string, BinaryMask>* gt_masks = nullptr);

std::vector<EvalItem> read_items_jsonl(const std::filesystem::path& path);
std::vector<ModelResponse> read_responses_jsonl(const std::filesystem::path& path);
void write_responses_jsonl(std::span<const ModelResponse> responses,
                           const std::filesystem::path& path);

Template template_from(const std::string& name);
const char* to_string(Template t);

}  // namespace triad::eval
