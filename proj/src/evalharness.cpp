#include "triad/evalharness.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "triad/error.hpp"

namespace triad::eval {

using nlohmann::json;

const char* to_string(Template t) {
    switch (t) {
        case Template::general: return "general";
        case Template::onevision: return "onevision";
        case Template::myriad: return "myriad";
        default: return "anomalygpt";
    }
}

Template template_from(const std::string& name) {
    if (name == "general") return Template::general;
    if (name == "onevision") return Template::onevision;
    if (name == "myriad") return Template::myriad;
    if (name == "anomalygpt") return Template::anomalygpt;
    throw ConfigError("unknown prompt template: " + name);
}

namespace {

constexpr const char* kOptionsBlock =
    "A. Yes\nB. No\nAnswer with the option's letter from the given choices directly.";
constexpr const char* kOneShotQuestion =
    "The second image shows an acceptable product. Compared to the acceptable product, find out "
    "whether there are defects in the product in the first image.";

std::string mfg_context(const EvalItem& item,
                        const std::map<std::string, cotm::MfgProcess>& mfg_store) {
    const std::string key = item.mfg_ref.value_or(item.product_class);
    const auto it = mfg_store.find(key);
    if (it == mfg_store.end())
        throw ConfigError("MFG store has no entry for '" + key + "' (sample " + item.sample_id + ")");
    const cotm::MfgProcess& mfg = it->second;
    std::ostringstream out;
    out << "The following is the production process of the " << mfg.product_class << ":\n";
    for (std::size_t i = 0; i < mfg.steps.size(); ++i) {
        out << (i + 1) << ". " << mfg.steps[i].name;
        if (!mfg.steps[i].description.empty()) out << ": " << mfg.steps[i].description;
        out << '\n';
    }
    return out.str();
}

std::string zero_shot_question(const EvalItem& item) {
    return "Are there any defects on the " + item.product_class + " in this image?";
}

}  // namespace

std::string render_prompt(const EvalItem& item, Template tmpl, bool with_mfg, Shot shot,
                          const std::map<std::string, cotm::MfgProcess>& mfg_store) {
    if (shot == Shot::one && !item.reference_image)
        throw ConfigError("one-shot rendering requires a reference image (sample " +
                          item.sample_id + ")");
    const std::string context = with_mfg ? mfg_context(item, mfg_store) : "";
    std::ostringstream out;
    switch (tmpl) {
        case Template::general: {
            out << "<image>\n";
            if (shot == Shot::one) out << "<image>\n";
            if (with_mfg) out << context;
            out << (shot == Shot::one ? std::string(kOneShotQuestion) : zero_shot_question(item));
            out << '\n' << kOptionsBlock;
            break;
        }
        case Template::onevision: {
            out << (with_mfg
                        ? "Referencing the image and production process that are shown below, "
                          "please answer the question:"
                        : "Referencing the image that is shown below, please answer the question:");
            out << "\nImage:\n<image>\n";
            if (shot == Shot::one) out << "<image>\n";
            if (with_mfg) out << context;
            out << "Question: "
                << (shot == Shot::one ? std::string(kOneShotQuestion) : zero_shot_question(item));
            out << '\n' << kOptionsBlock;
            break;
        }
        case Template::myriad: {
            if (shot == Shot::one)
                throw ConfigError("myriad template is evaluated zero-shot only");
            out << "<Image><ImageHere><\\Image>\n";
            if (with_mfg) out << context;
            out << "This image may be simulated by photo editing. According to IAD expert "
                   "opinions and corresponding visual descriptions, find out if there are "
                   "defects in this image.";
            break;
        }
        case Template::anomalygpt: {
            if (shot == Shot::one)
                throw ConfigError("anomalygpt template is evaluated zero-shot only");
            out << "</Img>\n";
            if (with_mfg) out << context;
            if (item.hint && !item.hint->empty()) out << *item.hint << ' ';
            out << "Is there any anomaly in the image?";
            break;
        }
    }
    return out.str();
}

Answer extract_answer(const std::string& response, ExtractScheme scheme) {
    const auto is_word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0;
    };
    if (scheme == ExtractScheme::option_letter) {
        for (std::size_t i = 0; i < response.size(); ++i) {
            const char c = response[i];
            if (c != 'A' && c != 'B') continue;
            const bool left_ok = i == 0 || !is_word_char(response[i - 1]);
            const bool right_ok = i + 1 >= response.size() || !is_word_char(response[i + 1]);
            if (left_ok && right_ok) return c == 'A' ? Answer::defect : Answer::normal;
        }
        return Answer::abstain;
    }
    // keyword: earliest whole-word "yes" or "no", case-insensitive
    std::string lower(response.size(), '\0');
    for (std::size_t i = 0; i < response.size(); ++i)
        lower[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(response[i])));
    const auto whole_word_at = [&](std::size_t pos, std::size_t len) {
        const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
        const bool right_ok = pos + len >= lower.size() || !is_word_char(lower[pos + len]);
        return left_ok && right_ok;
    };
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (lower.compare(i, 3, "yes") == 0 && whole_word_at(i, 3)) return Answer::defect;
        if (lower.compare(i, 2, "no") == 0 && whole_word_at(i, 2)) return Answer::normal;
    }
    return Answer::abstain;
}

namespace {

void tally(RunReport& report, const EvalItem& item, Answer answer,
           const std::map<std::string, BinaryMask>* gt_masks) {
    ++report.total;
    if (answer == Answer::abstain) ++report.abstained;
    const bool correct = (answer == Answer::defect && item.ground_truth == GroundTruth::defect) ||
                         (answer == Answer::normal && item.ground_truth == GroundTruth::normal);
    if (correct) ++report.correct;

    SizeBucket* bucket = nullptr;
    if (item.ground_truth == GroundTruth::normal) {
        bucket = &report.normal;
    } else if (gt_masks) {
        const auto it = gt_masks->find(item.sample_id);
        if (it != gt_masks->end()) {
            switch (metrics::defect_size_class(it->second).value) {
                case metrics::SizeClassValue::small: bucket = &report.small; break;
                case metrics::SizeClassValue::medium: bucket = &report.medium; break;
                case metrics::SizeClassValue::large: bucket = &report.large; break;
            }
        }
    }
    if (bucket) {
        ++bucket->total;
        bucket->correct += correct;
    }
}

std::map<std::string, Answer> complete_answers(std::span<const EvalItem> items,
                                               const std::map<std::string, Answer>& answers) {
    std::vector<std::string> missing;
    for (const auto& item : items)
        if (!answers.contains(item.sample_id)) missing.push_back(item.sample_id);
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw ScoringError("missing answers for: " + list);
    }
    return answers;
}

}  // namespace

RunReport score_run(std::span<const EvalItem> items, const std::map<std::string, Answer>& answers,
                    const std::map<std::string, BinaryMask>* gt_masks) {
    const auto complete = complete_answers(items, answers);
    RunReport report;
    for (const auto& item : items) tally(report, item, complete.at(item.sample_id), gt_masks);
    report.accuracy = report.total ? static_cast<double>(report.correct) / report.total : 0.0;
    return report;
}

RunReport score_paired(std::span<const EvalItem> items,
                       const std::map<std::string, Answer>& answers_base,
                       const std::map<std::string, Answer>& answers_mfg,
                       const std::map<std::string, BinaryMask>* gt_masks) {
    RunReport base = score_run(items, answers_base, gt_masks);
    const RunReport with_mfg = score_run(items, answers_mfg, gt_masks);
    base.delta_mfg = with_mfg.accuracy - base.accuracy;
    return base;
}

json RunReport::to_json() const {
    const auto bucket = [](const SizeBucket& b) {
        return json{{"correct", b.correct}, {"total", b.total}, {"accuracy", b.accuracy()}};
    };
    json j = {{"total", total},
              {"correct", correct},
              {"abstained", abstained},
              {"accuracy", accuracy},
              {"small", bucket(small)},
              {"medium", bucket(medium)},
              {"large", bucket(large)},
              {"normal", bucket(normal)}};
    if (delta_mfg) j["delta_mfg"] = *delta_mfg;
    return j;
}

std::string RunReport::to_text() const {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << "accuracy: " << accuracy * 100.0 << "% (" << correct << "/" << total << ", "
        << abstained << " abstained)\n";
    const auto line = [&](const char* name, const SizeBucket& b) {
        out << name << ": ";
        if (b.total)
            out << b.accuracy() * 100.0 << "% (" << b.correct << "/" << b.total << ")";
        else
            out << "n/a";
        out << '\n';
    };
    line("small defects", small);
    line("medium defects", medium);
    line("large defects", large);
    line("normal", normal);
    if (delta_mfg) out << "delta with MFG: " << (*delta_mfg >= 0 ? "+" : "") << *delta_mfg * 100.0 << "%\n";
    return out.str();
}

json EvalItem::to_json() const {
    json j = {{"sample_id", sample_id},
              {"product_class", product_class},
              {"ground_truth", ground_truth == GroundTruth::defect ? "defect" : "normal"}};
    if (reference_image) j["reference_image"] = *reference_image;
    if (mfg_ref) j["mfg_ref"] = *mfg_ref;
    if (gt_mask_ref) j["gt_mask_ref"] = *gt_mask_ref;
    if (hint) j["hint"] = *hint;
    return j;
}

EvalItem EvalItem::from_json(const json& j) {
    EvalItem item;
    item.sample_id = j.at("sample_id").get<std::string>();
    item.product_class = j.at("product_class").get<std::string>();
    const std::string gt = j.at("ground_truth").get<std::string>();
    if (gt == "defect")
        item.ground_truth = GroundTruth::defect;
    else if (gt == "normal")
        item.ground_truth = GroundTruth::normal;
    else
        throw FormatError("ground_truth must be defect|normal, got " + gt);
    if (j.contains("reference_image")) item.reference_image = j["reference_image"].get<std::string>();
    if (j.contains("mfg_ref")) item.mfg_ref = j["mfg_ref"].get<std::string>();
    if (j.contains("gt_mask_ref")) item.gt_mask_ref = j["gt_mask_ref"].get<std::string>();
    if (j.contains("hint")) item.hint = j["hint"].get<std::string>();
    return item;
}

json ModelResponse::to_json() const {
    json j = {{"sample_id", sample_id}, {"response_text", response_text}};
    if (normal_score_query) j["normal_score_query"] = *normal_score_query;
    if (normal_score_reference) j["normal_score_reference"] = *normal_score_reference;
    return j;
}

ModelResponse ModelResponse::from_json(const json& j) {
    ModelResponse r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.response_text = j.at("response_text").get<std::string>();
    if (j.contains("normal_score_query")) r.normal_score_query = j["normal_score_query"].get<double>();
    if (j.contains("normal_score_reference"))
        r.normal_score_reference = j["normal_score_reference"].get<double>();
    return r;
}

namespace {

template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<T> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(T::from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw FormatError("bad JSONL line " + std::to_string(out.size() + 1) + " in " +
                              path.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

std::vector<EvalItem> read_items_jsonl(const std::filesystem::path& path) {
    return read_jsonl_as<EvalItem>(path);
}

std::vector<ModelResponse> read_responses_jsonl(const std::filesystem::path& path) {
    return read_jsonl_as<ModelResponse>(path);
}

void write_responses_jsonl(std::span<const ModelResponse> responses,
                           const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    for (const auto& r : responses) out << r.to_json().dump() << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace triad::eval
