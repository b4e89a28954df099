// triad: anomaly-map metrics, EG-RoI region extraction, dataset builders,
// CoT generation, and the multiple-choice evaluation harness.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "triad/config.hpp"
#include "triad/cotm.hpp"
#include "triad/cvm.hpp"
#include "triad/egroi.hpp"
#include "triad/error.hpp"
#include "triad/evalharness.hpp"
#include "triad/expert_metrics.hpp"
#include "triad/instructiad.hpp"
#include "triad/map_io.hpp"

using namespace triad;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
};

config::RunConfig resolve_config(const CommonOpts& opts) {
    config::RunConfig cfg = opts.config_path.empty()
                                ? config::default_config()
                                : config::parse_config_file(opts.config_path);
    std::map<std::string, std::string> kv;
    for (const auto& item : opts.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + item + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    config::apply_overrides(cfg, kv);
    return cfg;
}

void add_common(CLI::App* app, CommonOpts& opts) {
    app->add_option("--config", opts.config_path, "TOML or JSON config file");
    app->add_option("--set", opts.overrides, "override a config key (key=value), repeatable");
}

fs::path prepare_run_dir(const config::RunConfig& cfg) {
    const fs::path run(cfg.run_dir);
    for (const char* sub : {"manifests", "records", "reports", "log"})
        fs::create_directories(run / sub);
    return run;
}

map_io::MapFormat format_from(const std::string& name) {
    if (name == "png16") return map_io::MapFormat::png16;
    if (name == "f32raw") return map_io::MapFormat::f32raw;
    throw ConfigError("map format must be png16 or f32raw, got '" + name + "'");
}

// samples JSONL: {"sample_id","image","map","format","mask"?,"class"?,"label"?}
struct SampleEntry {
    std::string sample_id, image, map, format = "f32raw", mask, product_class = "product";
    std::string label = "abnormal";
};

std::vector<SampleEntry> read_samples(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<SampleEntry> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        SampleEntry e;
        e.sample_id = j.at("sample_id").get<std::string>();
        e.image = j.value("image", "");
        e.map = j.value("map", "");
        e.format = j.value("format", "f32raw");
        e.mask = j.value("mask", "");
        e.product_class = j.value("class", "product");
        e.label = j.value("label", "abnormal");
        out.push_back(std::move(e));
    }
    return out;
}

int cmd_regions(const CommonOpts& common, const std::string& samples_path) {
    const auto cfg = resolve_config(common);
    const auto run = prepare_run_dir(cfg);
    auto samples = read_samples(samples_path);
    std::sort(samples.begin(), samples.end(),
              [](const SampleEntry& a, const SampleEntry& b) { return a.sample_id < b.sample_id; });
    json index = json::array();
    for (const auto& entry : samples) {
        const Raster raster = map_io::load_raster(fs::path(cfg.dataset_root) / entry.image);
        ImageMeta meta{raster.width, raster.height, entry.product_class, entry.sample_id,
                       entry.label == "normal" ? Label::normal : Label::abnormal};
        egroi::EgroiResult result;
        if (!entry.map.empty()) {
            const AnomalyMap map = map_io::load_anomaly_map(
                fs::path(cfg.dataset_root) / entry.map, format_from(entry.format));
            result = egroi::run_egroi(meta, raster, map, cfg.egroi);
        } else if (!entry.mask.empty()) {
            const BinaryMask gt = map_io::load_mask(fs::path(cfg.dataset_root) / entry.mask);
            result = egroi::run_egroi_training(meta, raster, gt, cfg.egroi);
        } else {
            throw ArgumentError("sample " + entry.sample_id + " has neither map nor mask");
        }
        const fs::path manifest_path = run / "manifests" / (entry.sample_id + ".json");
        map_io::write_manifest(result.manifest.to_json(), manifest_path);
        for (std::size_t i = 0; i < result.patches.size(); ++i)
            map_io::write_raster(result.patches[i],
                                 run / "manifests" /
                                     (entry.sample_id + "_patch" + std::to_string(i) + ".png"));
        index.push_back({{"sample_id", entry.sample_id},
                         {"manifest", "manifests/" + entry.sample_id + ".json"},
                         {"boxes", result.manifest.boxes.size()}});
    }
    map_io::write_manifest(index, run / "manifests" / "index.json");
    std::cout << "wrote " << index.size() << " manifests under " << (run / "manifests").string()
              << "\n";
    return 0;
}

int cmd_metrics(const CommonOpts& common, const std::string& samples_path,
                const std::string& thresholds_csv) {
    const auto cfg = resolve_config(common);
    const auto run = prepare_run_dir(cfg);
    std::vector<double> thresholds;
    std::stringstream ss(thresholds_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) thresholds.push_back(std::stod(tok));
    if (thresholds.empty()) throw ConfigError("--thresholds list is empty");

    std::vector<std::pair<AnomalyMap, BinaryMask>> set;
    for (const auto& entry : read_samples(samples_path)) {
        AnomalyMap map = map_io::load_anomaly_map(fs::path(cfg.dataset_root) / entry.map,
                                                  format_from(entry.format));
        map = metrics::normalize_map(map);
        BinaryMask gt = map_io::load_mask(fs::path(cfg.dataset_root) / entry.mask);
        set.emplace_back(std::move(map), std::move(gt));
    }

    json rows = json::array();
    std::cout << "threshold   Pix-TPR   Pix-FPR\n";
    for (double t : thresholds) {
        std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (const auto& [map, gt] : set) {
            const auto r = metrics::pixel_rates(metrics::binarize(map, t), gt);
            tp += r.tp;
            fp += r.fp;
            tn += r.tn;
            fn += r.fn;
        }
        const double tpr = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double fpr = fp + tn ? static_cast<double>(fp) / (fp + tn) : 0.0;
        std::printf("%9.2f   %6.1f%%   %6.1f%%\n", t, tpr * 100.0, fpr * 100.0);
        rows.push_back({{"threshold", t}, {"tpr", tpr}, {"fpr", fpr}});
    }
    json report = {{"rows", rows}};
    try {
        report["pixel_auroc"] = metrics::pixel_auroc(set);
    } catch (const ArgumentError&) {
        report["pixel_auroc"] = nullptr;  // single-class ground truth
    }
    map_io::write_manifest(report, run / "reports" / "metrics.json");
    std::cout << "report: " << (run / "reports" / "metrics.json").string() << "\n";
    return 0;
}

cvm::ModelOpinion opinion_from(const eval::ModelResponse& r, eval::ExtractScheme scheme) {
    const auto answer = eval::extract_answer(r.response_text, scheme);
    cvm::ModelOpinion op;
    // abstentions read as a defect call: the conservative default for CVM input
    op.decision = answer == eval::Answer::normal ? cvm::Decision::normal : cvm::Decision::defect;
    op.normal_score_query = r.normal_score_query.value_or(0.0);
    op.normal_score_reference = r.normal_score_reference.value_or(0.0);
    return op;
}

int cmd_cvm(const CommonOpts& common, const std::string& zero_path, const std::string& one_path,
            const std::string& scheme_name) {
    const auto cfg = resolve_config(common);
    const auto run = prepare_run_dir(cfg);
    const auto scheme = scheme_name == "keyword" ? eval::ExtractScheme::keyword
                                                 : eval::ExtractScheme::option_letter;
    std::map<std::string, eval::ModelResponse> zero, one;
    for (const auto& r : eval::read_responses_jsonl(zero_path)) zero[r.sample_id] = r;
    for (const auto& r : eval::read_responses_jsonl(one_path)) one[r.sample_id] = r;

    json verdicts = json::array();
    for (const auto& [id, rz] : zero) {
        const auto it = one.find(id);
        if (it == one.end()) throw ScoringError("one-shot responses missing sample " + id);
        const auto v = cvm::vote(opinion_from(rz, scheme), opinion_from(it->second, scheme));
        verdicts.push_back(
            {{"sample_id", id},
             {"decision", v.decision == cvm::Decision::defect ? "defect" : "normal"},
             {"rationale", v.rationale == cvm::Rationale::consensus       ? "consensus"
                           : v.rationale == cvm::Rationale::trusted_query ? "trusted_query"
                                                                          : "adopted_opposite"}});
    }
    map_io::write_manifest(verdicts, run / "reports" / "cvm_verdicts.json");
    std::cout << "combined " << verdicts.size() << " verdicts -> "
              << (run / "reports" / "cvm_verdicts.json").string() << "\n";
    return 0;
}

int cmd_dataset_build(const CommonOpts& common, const std::string& samples_path,
                      const std::string& catalog_path) {
    const auto cfg = resolve_config(common);
    const auto run = prepare_run_dir(cfg);
    std::vector<instructiad::InstructionRecord> records;
    std::ifstream in(samples_path);
    if (!in) throw IoError("cannot open " + samples_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        instructiad::AnnotatedSample sample;
        sample.sample_id = j.at("sample_id").get<std::string>();
        sample.product_class = j.at("class").get<std::string>();
        sample.label = j.at("label").get<std::string>() == "abnormal" ? Label::abnormal
                                                                      : Label::normal;
        if (j.contains("caption")) sample.caption = j["caption"].get<std::string>();
        sample.image_ref = j.value("image", "");

        auto push = [&](instructiad::InstructionRecord rec) {
            rec.meta["product_class"] = sample.product_class;
            records.push_back(std::move(rec));
        };
        push(instructiad::build_ad_record(sample));
        if (sample.caption) {
            push(instructiad::build_caption_record(sample));
            if (j.contains("explanation"))
                push(instructiad::build_analysis_record(sample,
                                                        j["explanation"].get<std::string>()));
        }
    }
    instructiad::write_jsonl(records, run / "records" / "instructiad.jsonl");

    std::vector<std::string> catalog;
    if (!catalog_path.empty()) {
        const json j = map_io::read_manifest(catalog_path);
        catalog = j.get<std::vector<std::string>>();
    }
    const auto stats = instructiad::dataset_stats(records, catalog);
    map_io::write_manifest(stats.to_json(), run / "reports" / "dataset_stats.json");
    std::cout << "wrote " << records.size() << " records; stats -> "
              << (run / "reports" / "dataset_stats.json").string() << "\n";
    return 0;
}

int cmd_cotm_generate(const CommonOpts& common, const std::string& samples_path,
                      const std::string& rejected_path, bool use_stub) {
    const auto cfg = resolve_config(common);
    const auto run = prepare_run_dir(cfg);
    if (cfg.mfg_store.empty()) throw ConfigError("mfg_store path required for cotm generate");
    const auto store = cotm::load_mfg_store(cfg.mfg_store);

    std::unique_ptr<cotm::GenClient> client;
    if (use_stub || cfg.endpoint_host.empty())
        client = std::make_unique<cotm::StubGenClient>(cfg.egroi.seed);
    else
        client = std::make_unique<cotm::HttpGenClient>(cfg.endpoint_host, cfg.endpoint_port,
                                                       cfg.endpoint_path, cfg.model);

    std::vector<instructiad::InstructionRecord> records;
    std::ifstream in(samples_path);
    if (!in) throw IoError("cannot open " + samples_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const std::string id = j.at("sample_id").get<std::string>();
        const std::string cls = j.at("class").get<std::string>();
        const auto mfg_it = store.find(cls);
        if (mfg_it == store.end()) throw ConfigError("MFG store has no entry for '" + cls + "'");
        const auto& mfg = mfg_it->second;

        instructiad::InstructionRecord rec;
        rec.sample_id = id;
        rec.task = instructiad::TaskKind::cot_m;
        rec.provenance = instructiad::Provenance::generated;
        rec.meta["product_class"] = cls;

        if (j.contains("caption")) {
            // mode (a)/(c): caption -> GPT trajectory (optionally pre-edited)
            std::string caption = j["caption"].get<std::string>();
            Label label = j.value("label", "normal") == "abnormal" ? Label::abnormal
                                                                   : Label::normal;
            if (j.contains("edits") || j.contains("inject_defect")) {
                cotm::EditPlan plan;
                plan.seed = cfg.egroi.seed;
                for (const auto& je : j.value("edits", json::array()))
                    plan.edits.push_back({je.at("attribute").get<std::string>(),
                                          je.at("old").get<std::string>(),
                                          je.at("new").get<std::string>()});
                if (j.contains("inject_defect"))
                    plan.inject_defect = j["inject_defect"].get<std::string>();
                std::tie(caption, label) = cotm::augment_caption(caption, plan);
                rec.provenance = instructiad::Provenance::augmented;
            }
            const auto cot = cotm::generate_cot(caption, mfg, *client);
            rec.id = id + ":trajectory";
            rec.prompt = caption;
            rec.response = cot.text;
            rec.meta["prompt_hash"] = cot.prompt_hash;
            rec.meta["client"] = cot.client_identity;
            rec.meta["label"] = to_string(label);
        } else {
            // mode (b): coarse label -> checklist CoT
            const std::string coarse = j.value("coarse_label", "");
            rec.id = id + ":checklist";
            rec.prompt = "Inspect the " + cls + " against its manufacturing process.";
            try {
                rec.response = cotm::build_checklist(mfg, coarse);
            } catch (const ArgumentError& e) {
                std::cerr << "warning: " << e.what() << "; flagging for filter\n";
                rec.response = "(unmatched defect label: " + coarse + ")";
                rec.flags.insert("filtered_out");
            }
        }
        records.push_back(std::move(rec));
    }
    std::sort(records.begin(), records.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });

    std::set<std::string> rejected;
    if (!rejected_path.empty()) {
        std::ifstream rej(rejected_path);
        if (!rej) throw IoError("cannot open " + rejected_path);
        std::string id;
        while (std::getline(rej, id))
            if (!id.empty()) rejected.insert(id);
    }
    const auto outcome = cotm::filter_records(records, rejected);
    for (const auto& id : outcome.unknown_ids)
        std::cerr << "warning: rejected id not found: " << id << "\n";
    instructiad::write_jsonl(outcome.all, run / "records" / "cotm_all.jsonl");
    instructiad::write_jsonl(outcome.exported, run / "records" / "cotm_export.jsonl");
    std::cout << "generated " << outcome.all.size() << " records, exported "
              << outcome.exported.size() << "\n";
    return 0;
}

int cmd_eval_render(const CommonOpts& common, const std::string& items_path, bool with_mfg,
                    const std::string& shot_name) {
    const auto cfg = resolve_config(common);
    const auto run = prepare_run_dir(cfg);
    const auto tmpl = eval::template_from(cfg.prompt_template);
    const auto shot = shot_name == "one" ? eval::Shot::one : eval::Shot::zero;
    std::map<std::string, cotm::MfgProcess> store;
    if (with_mfg) {
        if (cfg.mfg_store.empty()) throw ConfigError("mfg_store path required with --with-mfg");
        store = cotm::load_mfg_store(cfg.mfg_store);
    }
    auto items = eval::read_items_jsonl(items_path);
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
    std::ofstream out(run / "records" / "prompts.jsonl", std::ios::binary);
    for (const auto& item : items) {
        const json j = {{"sample_id", item.sample_id},
                        {"prompt", eval::render_prompt(item, tmpl, with_mfg, shot, store)}};
        out << j.dump() << '\n';
    }
    std::cout << "rendered " << items.size() << " prompts -> "
              << (run / "records" / "prompts.jsonl").string() << "\n";
    return 0;
}

int cmd_eval_score(const CommonOpts& common, const std::string& items_path,
                   const std::string& responses_path, const std::string& responses_mfg_path,
                   const std::string& scheme_name) {
    const auto cfg = resolve_config(common);
    const auto run = prepare_run_dir(cfg);
    const auto scheme = scheme_name == "keyword" ? eval::ExtractScheme::keyword
                                                 : eval::ExtractScheme::option_letter;
    const auto items = eval::read_items_jsonl(items_path);

    const auto to_answers = [&](const std::string& path) {
        std::map<std::string, eval::Answer> answers;
        for (const auto& r : eval::read_responses_jsonl(path))
            answers[r.sample_id] = eval::extract_answer(r.response_text, scheme);
        return answers;
    };

    std::map<std::string, BinaryMask> masks;
    for (const auto& item : items)
        if (item.gt_mask_ref)
            masks[item.sample_id] = map_io::load_mask(fs::path(cfg.dataset_root) / *item.gt_mask_ref);
    const auto* mask_ptr = masks.empty() ? nullptr : &masks;

    eval::RunReport report;
    if (responses_mfg_path.empty())
        report = eval::score_run(items, to_answers(responses_path), mask_ptr);
    else
        report = eval::score_paired(items, to_answers(responses_path),
                                    to_answers(responses_mfg_path), mask_ptr);
    map_io::write_manifest(report.to_json(), run / "reports" / "eval_report.json");
    std::cout << report.to_text();
    std::cout << "report: " << (run / "reports" / "eval_report.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Manufacturing-driven anomaly-detection pipeline tools"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string samples_path, catalog_path, rejected_path;
    std::string items_path, responses_path, responses_mfg_path;
    std::string zero_path, one_path;
    std::string scheme = "option_letter", shot = "zero";
    std::string thresholds = "0.9,0.8,0.7,0.6,0.5,0.4,0.3,0.2,0.1";
    bool use_stub = false, with_mfg = false;
    int rc = 0;

    auto* regions = app.add_subcommand("regions", "run the region-proposal pipeline");
    add_common(regions, common);
    regions->add_option("--samples", samples_path, "samples JSONL")->required();
    regions->callback([&] { rc = cmd_regions(common, samples_path); });

    auto* metrics_cmd = app.add_subcommand("metrics", "expert map metrics and threshold sweep");
    add_common(metrics_cmd, common);
    metrics_cmd->add_option("--samples", samples_path, "samples JSONL (map + mask per line)")
        ->required();
    metrics_cmd->add_option("--thresholds", thresholds, "comma-separated threshold list");
    metrics_cmd->callback([&] { rc = cmd_metrics(common, samples_path, thresholds); });

    auto* cvm_cmd = app.add_subcommand("cvm", "combine zero- and one-shot response files");
    add_common(cvm_cmd, common);
    cvm_cmd->add_option("--zero", zero_path, "zero-shot responses JSONL")->required();
    cvm_cmd->add_option("--one", one_path, "one-shot responses JSONL")->required();
    cvm_cmd->add_option("--scheme", scheme, "answer extraction scheme (option_letter|keyword)");
    cvm_cmd->callback([&] { rc = cmd_cvm(common, zero_path, one_path, scheme); });

    auto* dataset = app.add_subcommand("dataset", "dataset tooling");
    dataset->require_subcommand(1);
    auto* dataset_build = dataset->add_subcommand("build", "build instruction records");
    add_common(dataset_build, common);
    dataset_build->add_option("--samples", samples_path, "annotated samples JSONL")->required();
    dataset_build->add_option("--catalog", catalog_path, "product-class catalog JSON");
    dataset_build->callback([&] { rc = cmd_dataset_build(common, samples_path, catalog_path); });

    auto* cotm_cmd = app.add_subcommand("cotm", "reasoning-trace data organization");
    cotm_cmd->require_subcommand(1);
    auto* cotm_generate = cotm_cmd->add_subcommand("generate", "generate reasoning records");
    add_common(cotm_generate, common);
    cotm_generate->add_option("--samples", samples_path, "samples JSONL")->required();
    cotm_generate->add_option("--rejected", rejected_path, "plain-text rejected-id file");
    cotm_generate->add_flag("--stub", use_stub, "use the deterministic stub client");
    cotm_generate->callback(
        [&] { rc = cmd_cotm_generate(common, samples_path, rejected_path, use_stub); });

    auto* eval_cmd = app.add_subcommand("eval", "evaluation harness");
    eval_cmd->require_subcommand(1);
    auto* eval_render = eval_cmd->add_subcommand("render", "render benchmark prompts");
    add_common(eval_render, common);
    eval_render->add_option("--items", items_path, "items JSONL")->required();
    eval_render->add_flag("--with-mfg", with_mfg, "insert manufacturing context");
    eval_render->add_option("--shot", shot, "zero|one");
    eval_render->callback([&] { rc = cmd_eval_render(common, items_path, with_mfg, shot); });

    auto* eval_score = eval_cmd->add_subcommand("score", "score a responses file");
    add_common(eval_score, common);
    eval_score->add_option("--items", items_path, "items JSONL")->required();
    eval_score->add_option("--responses", responses_path, "responses JSONL")->required();
    eval_score->add_option("--responses-mfg", responses_mfg_path,
                           "paired responses rendered with manufacturing context");
    eval_score->add_option("--scheme", scheme, "answer extraction scheme (option_letter|keyword)");
    eval_score->callback([&] {
        rc = cmd_eval_score(common, items_path, responses_path, responses_mfg_path, scheme);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
