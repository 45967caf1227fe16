#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"
#include "mrcd/llm_gateway.hpp"
#include "mrcd/simharness.hpp"

using namespace mrcd;
namespace fs = std::filesystem;

namespace {

std::string render(const std::vector<ChatTurn>& turns) {
    std::string out;
    for (const ChatTurn& t : turns) {
        out += "[" + to_string(t.role) + "]\n" + t.content + "\n";
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::string content;
    std::getline(in, content, '\0');
    return content;
}

NewsItem query_item() {
    NewsItem item;
    item.id = "q1";
    item.text = "Breaking: plane crash reported in the French Alps";
    item.event_id = "ev-crash";
    return item;
}

}  // namespace

TEST_CASE("prompt structure: 2 turns with no demos, 2 + 2k with k demos") {
    NewsItem item = query_item();
    CHECK(assemble_prompt(item, {}, {}).size() == 2);
    std::vector<Demonstration> demos(4);
    for (auto& d : demos) {
        d.text = "some demonstration";
        d.pseudo_label = "realistic";
    }
    CHECK(assemble_prompt(item, demos, {}).size() == 2 + 2 * 4);
}

TEST_CASE("golden prompt: zero demonstrations, empty knowledge") {
    auto turns = assemble_prompt(query_item(), {}, {});
    CHECK(render(turns) == read_file(fs::path(MRCD_FIXTURES_DIR) / "prompt_0demo.txt"));
}

TEST_CASE("golden prompt: two demonstrations plus one knowledge entry") {
    std::vector<Demonstration> demos(2);
    demos[0].text = "Co-pilot deliberately crashed the plane, prosecutors say";
    demos[0].pseudo_label = "realistic";
    demos[1].text = "Aliens rumored near the crash site, claims anonymous blog";
    demos[1].pseudo_label = "unrealistic";
    KnowledgePack pack;
    pack.entries.push_back(
        {"Germanwings", "Germanwings was a German low-cost airline headquartered in Cologne."});
    auto turns = assemble_prompt(query_item(), demos, pack);
    CHECK(render(turns) ==
          read_file(fs::path(MRCD_FIXTURES_DIR) / "prompt_2demo_knowledge.txt"));
}

TEST_CASE("golden prompt: one demonstration, empty knowledge omits the extra sentence") {
    std::vector<Demonstration> demos(1);
    demos[0].text = "Hostages confirmed safe by police officials";
    demos[0].pseudo_label = "unrealistic";
    auto turns = assemble_prompt(query_item(), demos, {});
    std::string rendered = render(turns);
    CHECK(rendered == read_file(fs::path(MRCD_FIXTURES_DIR) / "prompt_1demo_noknowledge.txt"));
    CHECK(rendered.find("extra information") == std::string::npos);
}

TEST_CASE("prompt assembly is a pure function of its arguments") {
    NewsItem item = query_item();
    std::vector<Demonstration> demos(1);
    demos[0].text = "d";
    demos[0].pseudo_label = "realistic";
    CHECK(render(assemble_prompt(item, demos, {})) == render(assemble_prompt(item, demos, {})));
    CHECK(prompt_hash(assemble_prompt(item, demos, {})) ==
          prompt_hash(assemble_prompt(item, demos, {})));
}

TEST_CASE("parse_label rules") {
    CHECK(parse_label("fake") == Label::Fake);
    CHECK(parse_label("REAL") == Label::Real);
    CHECK(parse_label("I think it is more real.") == Label::Real);
    CHECK_FALSE(parse_label("real or fake").has_value());
    CHECK_FALSE(parse_label("no answer here").has_value());
    CHECK_FALSE(parse_label("").has_value());
    // Whole-word only: substrings do not count.
    CHECK_FALSE(parse_label("surreal and fakery").has_value());
    CHECK(parse_label("surreal but fake") == Label::Fake);
    // First line wins when unambiguous; otherwise the full text is scanned.
    CHECK(parse_label("fake\nbut maybe real") == Label::Fake);
    CHECK(parse_label("My verdict:\nfake") == Label::Fake);
    // Both words across the whole text stay ambiguous.
    CHECK_FALSE(parse_label("real or fake?\nfake").has_value());
    // An unambiguous first line wins regardless of what follows.
    CHECK(parse_label("real\nfake") == Label::Real);
}

TEST_CASE("predict parses a scripted answer") {
    NewsItem item = query_item();
    MockLlmBackend mock;
    mock.script(assemble_prompt(item, {}, {}), "real");
    auto pred = predict(mock, item, {}, {}, 1);
    CHECK(pred.label == Label::Real);
    CHECK(pred.raw_response == "real");
    CHECK(pred.demonstrations_used == 0);
    CHECK(pred.knowledge_used == 0);
    CHECK(mock.calls() == 1);
}

TEST_CASE("predict retries once on an unparseable answer") {
    NewsItem item = query_item();
    MockLlmBackend mock;
    auto turns = assemble_prompt(item, {}, {});
    mock.script(turns, "hmm, hard to tell");
    auto retry_turns = turns;
    retry_turns.push_back({Role::Assistant, "hmm, hard to tell"});
    retry_turns.push_back({Role::User, "Answer with exactly one word: real or fake."});
    mock.script(retry_turns, "fake");

    auto pred = predict(mock, item, {}, {}, 1);
    CHECK(pred.label == Label::Fake);
    CHECK(mock.calls() == 2);
}

TEST_CASE("double unparseable answers become an abstention, not a default") {
    NewsItem item = query_item();
    MockLlmBackend mock;
    auto turns = assemble_prompt(item, {}, {});
    mock.script(turns, "no idea");
    auto retry_turns = turns;
    retry_turns.push_back({Role::Assistant, "no idea"});
    retry_turns.push_back({Role::User, "Answer with exactly one word: real or fake."});
    mock.script(retry_turns, "still no idea");

    auto pred = predict(mock, item, {}, {}, 1);
    CHECK_FALSE(pred.label.has_value());
    CHECK(mock.calls() == 2);
}

TEST_CASE("mock backend: identical prompt, identical response; unscripted throws") {
    MockLlmBackend strict;
    auto turns = assemble_prompt(query_item(), {}, {});
    CHECK_THROWS_AS(strict.complete(turns, {}), BackendError);

    MockLlmBackend fallback(true);
    std::string a = fallback.complete(turns, {});
    std::string b = fallback.complete(turns, {});
    CHECK(a == b);
    CHECK((a == "real" || a == "fake"));
}

TEST_CASE("mock script round-trips through a JSONL fixture") {
    auto turns = assemble_prompt(query_item(), {}, {});
    fs::path script = fs::temp_directory_path() / "mrcd_mock_script.jsonl";
    std::ofstream out(script);
    out << "{\"prompt_hash\":\"" << det::hex(prompt_hash(turns))
        << "\",\"response\":\"fake\"}\n";
    out.close();
    auto mock = MockLlmBackend::from_script(script);
    CHECK(mock.complete(turns, {}) == "fake");
}

TEST_CASE("oracle with accuracy 1.0 always answers gold") {
    OracleConfig cfg;
    cfg.accuracy = 1.0;
    cfg.seed = 5;
    OracleLlmBackend oracle(cfg);
    for (int i = 0; i < 20; ++i) {
        NewsItem item = query_item();
        item.id = "i" + std::to_string(i);
        item.gold_label = i % 2 ? Label::Fake : Label::Real;
        auto pred = predict(oracle, item, {}, {}, 1);
        CHECK(pred.label == item.gold_label);
    }
}

TEST_CASE("oracle accuracy 0.75 over 4000 items lands in the binomial interval") {
    OracleConfig cfg;
    cfg.accuracy = 0.75;
    cfg.seed = 99;
    OracleLlmBackend oracle(cfg);
    int correct = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        NewsItem item;
        item.id = "i" + std::to_string(i);
        item.text = "text " + std::to_string(i);
        item.gold_label = i % 2 ? Label::Fake : Label::Real;
        auto pred = predict(oracle, item, {}, {}, 1);
        if (pred.label == item.gold_label) ++correct;
    }
    double rate = static_cast<double>(correct) / n;
    CHECK(rate > 0.735);
    CHECK(rate < 0.765);
}

TEST_CASE("oracle prediction ignores prompt content") {
    OracleConfig cfg;
    cfg.accuracy = 0.6;
    cfg.seed = 7;
    OracleLlmBackend oracle(cfg);
    NewsItem item = query_item();
    item.gold_label = Label::Fake;
    std::vector<Demonstration> demos(3);
    for (auto& d : demos) {
        d.text = "unrelated";
        d.pseudo_label = "realistic";
    }
    auto bare = predict(oracle, item, {}, {}, 1);
    auto loaded = predict(oracle, item, demos, {}, 1);
    CHECK(bare.label == loaded.label);
}
