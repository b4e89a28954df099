#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "triad/cotm.hpp"
#include "triad/error.hpp"

using namespace triad;
using namespace triad::cotm;

namespace {

MfgProcess cable_mfg() {
    MfgProcess mfg;
    mfg.product_class = "cable";
    mfg.source = MfgSource::gpt;
    mfg.steps = {{"Stripping", "removing the outer jacket to expose the inner conductors"},
                 {"Twisting", "conductors are twisted together to form a cable"},
                 {"Insulation", "each conductor is covered with insulating material"}};
    return mfg;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("augment_caption applies edits and labels by defect injection") {
    EditPlan plan;
    plan.edits = {{"color", "red", "blue"}};
    const auto [normal_text, normal_label] = augment_caption("three red wires", plan);
    CHECK(normal_text == "three blue wires");
    CHECK(normal_label == Label::normal);

    plan.inject_defect = "One wire is missing.";
    const auto [bad_text, bad_label] = augment_caption("three red wires", plan);
    CHECK(bad_text == "three blue wires One wire is missing.");
    CHECK(bad_label == Label::abnormal);

    EditPlan absent;
    absent.edits = {{"color", "green", "blue"}};
    CHECK_THROWS_WITH_AS(augment_caption("three red wires", absent),
                         doctest::Contains("color"), ArgumentError);
}

TEST_CASE("build_checklist emits one line per step with the failing step named") {
    const auto mfg = cable_mfg();
    const auto text = build_checklist(mfg, "twisted pair loose");
    CHECK(count_lines(text) == 4);  // 3 steps + verdict
    CHECK(text.find("Step 1 — Stripping: pass") != std::string::npos);
    CHECK(text.find("Step 2 — Twisting: FAIL (twisted pair loose)") != std::string::npos);
    CHECK(text.find("Step 3 — Insulation: pass") != std::string::npos);
    CHECK(text.find("This product is defective.") != std::string::npos);
}

TEST_CASE("build_checklist normal sample is all-pass with acceptable verdict") {
    const auto text = build_checklist(cable_mfg(), "");
    CHECK(text.find("FAIL") == std::string::npos);
    CHECK(text.find("This product is acceptable.") != std::string::npos);
}

TEST_CASE("build_checklist unmatched label is routed to the filter") {
    CHECK_THROWS_AS(build_checklist(cable_mfg(), "scorched paint"), ArgumentError);
    // ...unless the synonym table bridges the vocabulary
    const std::map<std::string, std::vector<std::string>> synonyms = {
        {"scorched", {"insulating"}}};
    const auto text = build_checklist(cable_mfg(), "scorched paint", synonyms);
    CHECK(text.find("Step 3 — Insulation: FAIL") != std::string::npos);
}

TEST_CASE("stub client is deterministic per seed and mentions every step") {
    const auto mfg = cable_mfg();
    StubGenClient client(7);
    const auto a = generate_cot("a grey three-wire cable", mfg, client);
    const auto b = generate_cot("a grey three-wire cable", mfg, client);
    CHECK(a.text == b.text);
    CHECK(a.prompt_hash == b.prompt_hash);
    CHECK(a.client_identity == "stub:7");
    for (const auto& step : mfg.steps) CHECK(a.text.find(step.name) != std::string::npos);

    StubGenClient other(8);
    const auto c = generate_cot("a grey three-wire cable", mfg, other);
    CHECK(c.text != a.text);
    CHECK(c.prompt_hash == a.prompt_hash);  // hash covers the prompt, not the seed
}

TEST_CASE("generate_cot argument errors") {
    StubGenClient client(1);
    MfgProcess empty;
    empty.product_class = "cable";
    CHECK_THROWS_AS(generate_cot("caption", empty, client), ArgumentError);
    CHECK_THROWS_AS(generate_cot("", cable_mfg(), client), ArgumentError);
}

TEST_CASE("HTTP client transport failure is retryable and reports attempts") {
    HttpGenClient client("127.0.0.1", 1, "/v1/chat/completions", "m");  // nothing listens on :1
    try {
        client.generate("sys", "user");
        FAIL("expected GenerationError");
    } catch (const GenerationError& e) {
        CHECK(e.retryable);
        CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
    }
}

TEST_CASE("filter_records flags without deleting and warns on unknown ids") {
    std::vector<instructiad::InstructionRecord> records(3);
    records[0].id = "r1";
    records[1].id = "r2";
    records[2].id = "r3";
    for (auto& r : records) {
        r.task = instructiad::TaskKind::cot_m;
        r.response = "text";
    }
    const auto outcome = filter_records(records, {"r2", "ghost"});
    CHECK(outcome.all.size() == 3);
    CHECK(outcome.exported.size() == 2);
    CHECK(outcome.all[1].flags.contains("filtered_out"));
    CHECK(outcome.unknown_ids == std::vector<std::string>{"ghost"});

    const auto identity = filter_records(records, {});
    CHECK(identity.exported.size() == 3);
}

TEST_CASE("MFG store round-trips through JSON") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "triad_test_cotm";
    fs::create_directories(dir);
    std::map<std::string, MfgProcess> store;
    store["cable"] = cable_mfg();
    const auto path = dir / "mfg.json";
    write_mfg_store(store, path);
    const auto back = load_mfg_store(path);
    REQUIRE(back.contains("cable"));
    CHECK(back.at("cable").to_json() == store.at("cable").to_json());
}
