#include "triad/instructiad.hpp"

#include <cmath>
#include <fstream>

#include "triad/error.hpp"

namespace triad::instructiad {

using nlohmann::json;

const char* to_string(TaskKind t) {
    switch (t) {
        case TaskKind::anomaly_detection: return "anomaly_detection";
        case TaskKind::attribute_caption: return "attribute_caption";
        case TaskKind::anomaly_analysis: return "anomaly_analysis";
        default: return "cot_m";
    }
}

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::human: return "human";
        case Provenance::generated: return "generated";
        default: return "augmented";
    }
}

namespace {

TaskKind task_from(const std::string& s) {
    if (s == "anomaly_detection") return TaskKind::anomaly_detection;
    if (s == "attribute_caption") return TaskKind::attribute_caption;
    if (s == "anomaly_analysis") return TaskKind::anomaly_analysis;
    if (s == "cot_m") return TaskKind::cot_m;
    throw FormatError("unknown task kind: " + s);
}

Provenance provenance_from(const std::string& s) {
    if (s == "human") return Provenance::human;
    if (s == "generated") return Provenance::generated;
    if (s == "augmented") return Provenance::augmented;
    throw FormatError("unknown provenance: " + s);
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

}  // namespace

InstructionRecord build_ad_record(const AnnotatedSample& sample) {
    if (sample.sample_id.empty()) throw ArgumentError("sample_id required");
    InstructionRecord rec;
    rec.id = sample.sample_id + ":ad";
    rec.sample_id = sample.sample_id;
    rec.task = TaskKind::anomaly_detection;
    rec.prompt = "<image>\nIs there any defect on the " + sample.product_class +
                 " in this image? Answer Yes or No.";
    rec.response = sample.label == Label::abnormal ? "Yes" : "No";
    if (!sample.image_ref.empty()) rec.image_refs.push_back(sample.image_ref);
    rec.provenance = Provenance::human;
    return rec;
}

InstructionRecord build_caption_record(const AnnotatedSample& sample) {
    if (!sample.caption)
        throw ArgumentError("caption required for attribute_caption record of " + sample.sample_id);
    InstructionRecord rec;
    rec.id = sample.sample_id + ":caption";
    rec.sample_id = sample.sample_id;
    rec.task = TaskKind::attribute_caption;
    rec.prompt = "<image>\nDescribe the " + sample.product_class +
                 " in this image in detail, covering its color, shape, layout, material and "
                 "texture, and any visible defect's location, orientation, shape and color.";
    rec.response = *sample.caption;
    if (!sample.image_ref.empty()) rec.image_refs.push_back(sample.image_ref);
    rec.provenance = Provenance::human;
    return rec;
}

InstructionRecord build_analysis_record(const AnnotatedSample& sample,
                                        const std::string& explanation) {
    if (!sample.caption)
        throw ArgumentError("caption required for anomaly_analysis record of " + sample.sample_id);
    if (explanation.empty()) throw ArgumentError("empty explanation for " + sample.sample_id);
    InstructionRecord rec;
    rec.id = sample.sample_id + ":analysis";
    rec.sample_id = sample.sample_id;
    rec.task = TaskKind::anomaly_analysis;
    rec.prompt = "<image>\nIs the " + sample.product_class +
                 " in this image normal or defective? Explain your judgement using the product's "
                 "visual attributes.";
    rec.response = std::string(sample.label == Label::abnormal ? kDefectVerdict
                                                               : kAcceptableVerdict) +
                   " " + explanation;
    if (!sample.image_ref.empty()) rec.image_refs.push_back(sample.image_ref);
    rec.provenance = Provenance::generated;
    return rec;
}

void validate_record(const InstructionRecord& record) {
    if (record.id.empty()) throw ArgumentError("record id empty");
    switch (record.task) {
        case TaskKind::anomaly_detection:
            if (record.response != "Yes" && record.response != "No")
                throw ArgumentError("anomaly_detection response must be exactly Yes or No (id " +
                                    record.id + ")");
            break;
        case TaskKind::attribute_caption:
            if (record.provenance != Provenance::human)
                throw ArgumentError("attribute_caption requires a human caption source (id " +
                                    record.id + ")");
            if (record.response.empty())
                throw ArgumentError("attribute_caption response empty (id " + record.id + ")");
            break;
        case TaskKind::anomaly_analysis:
            if (!starts_with(record.response, kDefectVerdict) &&
                !starts_with(record.response, kAcceptableVerdict))
                throw ArgumentError("anomaly_analysis response must open with a verdict line (id " +
                                    record.id + ")");
            break;
        case TaskKind::cot_m:
            if (record.response.empty())
                throw ArgumentError("cot_m response empty (id " + record.id + ")");
            break;
    }
}

DatasetStats dataset_stats(std::span<const InstructionRecord> records,
                           std::span<const std::string> catalog) {
    DatasetStats stats;
    std::size_t human_normal = 0, human_abnormal = 0;
    for (const auto& rec : records) {
        ++stats.per_task[to_string(rec.task)];
        const auto cls = rec.meta.find("product_class");
        if (cls != rec.meta.end()) ++stats.per_class[cls->second];

        std::optional<Label> label;
        if (rec.task == TaskKind::anomaly_detection)
            label = rec.response == "Yes" ? Label::abnormal : Label::normal;
        else if (starts_with(rec.response, kDefectVerdict))
            label = Label::abnormal;
        else if (starts_with(rec.response, kAcceptableVerdict))
            label = Label::normal;
        if (!label) {
            ++stats.unknown_label;
            continue;
        }
        (*label == Label::normal ? stats.normal : stats.abnormal)++;
        if (rec.provenance == Provenance::human)
            (*label == Label::normal ? human_normal : human_abnormal)++;
    }
    stats.human_balance_ratio =
        human_abnormal > 0 ? static_cast<double>(human_normal) / human_abnormal : 0.0;
    for (const auto& cls : catalog)
        if (!stats.per_class.contains(cls)) stats.uncovered_classes.push_back(cls);
    return stats;
}

json DatasetStats::to_json() const {
    return {{"per_task", per_task},
            {"per_class", per_class},
            {"normal", normal},
            {"abnormal", abnormal},
            {"unknown_label", unknown_label},
            {"human_balance_ratio", human_balance_ratio},
            {"uncovered_classes", uncovered_classes}};
}

double sft_nll(std::span<const double> token_logprobs) {
    double nll = 0.0;
    for (double lp : token_logprobs) {
        if (!std::isfinite(lp)) throw ArgumentError("non-finite log-probability");
        if (lp > 0.0) throw ArgumentError("log-probability must be <= 0, got " + std::to_string(lp));
        nll -= lp;
    }
    return nll;
}

json InstructionRecord::to_json() const {
    json j = {{"id", id},
              {"sample_id", sample_id},
              {"task", instructiad::to_string(task)},
              {"prompt", prompt},
              {"response", response},
              {"image_refs", image_refs},
              {"provenance", instructiad::to_string(provenance)},
              {"flags", flags}};
    if (roi_manifest_ref) j["roi_manifest_ref"] = *roi_manifest_ref;
    if (!meta.empty()) j["meta"] = meta;
    return j;
}

InstructionRecord InstructionRecord::from_json(const json& j) {
    InstructionRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.sample_id = j.at("sample_id").get<std::string>();
    rec.task = task_from(j.at("task").get<std::string>());
    rec.prompt = j.at("prompt").get<std::string>();
    rec.response = j.at("response").get<std::string>();
    rec.image_refs = j.value("image_refs", std::vector<std::string>{});
    if (j.contains("roi_manifest_ref")) rec.roi_manifest_ref = j["roi_manifest_ref"].get<std::string>();
    rec.provenance = provenance_from(j.at("provenance").get<std::string>());
    rec.flags = j.value("flags", std::set<std::string>{});
    rec.meta = j.value("meta", std::map<std::string, std::string>{});
    return rec;
}

void write_jsonl(std::span<const InstructionRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    std::set<std::string> seen;
    for (const auto& rec : records) {
        if (!seen.insert(rec.id).second) throw ArgumentError("duplicate record id " + rec.id);
        validate_record(rec);
        out << rec.to_json().dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<InstructionRecord> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<InstructionRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            records.push_back(InstructionRecord::from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw FormatError("bad JSONL line " + std::to_string(records.size() + 1) + " in " +
                              path.string() + ": " + e.what());
        }
    }
    return records;
}

}  // namespace triad::instructiad
