#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"
#include "mrcd/retrieval.hpp"

using namespace mrcd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

fs::path write_corpus(const std::string& name, const std::vector<json>& records) {
    fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    for (const json& rec : records) out << rec.dump() << '\n';
    return path;
}

NewsItem crash_item() {
    NewsItem item;
    item.id = "q1";
    item.text = "plane crash reported in the french alps today";
    item.event_id = "ev-crash";
    return item;
}

// A scripted entity extractor: returns the configured text for every
// extraction prompt.
class FixedLlm : public LlmBackend {
public:
    explicit FixedLlm(std::string response) : response_(std::move(response)) {}
    std::string complete(const std::vector<ChatTurn>&, const LlmContext&) override {
        return response_;
    }

private:
    std::string response_;
};

class ThrowingLlm : public LlmBackend {
public:
    std::string complete(const std::vector<ChatTurn>&, const LlmContext&) override {
        throw BackendError("backend is down");
    }
};

}  // namespace

TEST_CASE("assign_pseudo_labels basics") {
    PseudoLabelVocab vocab;
    CHECK(assign_pseudo_labels({}, vocab, 1).empty());

    std::vector<RetrievedDoc> docs;
    for (int i = 0; i < 8; ++i) {
        docs.push_back({Source::NewsCorpus, "d" + std::to_string(i),
                        "text " + std::to_string(i), std::nullopt, std::nullopt});
    }
    auto a = assign_pseudo_labels(docs, vocab, 42);
    auto b = assign_pseudo_labels(docs, vocab, 42);
    REQUIRE(a.size() == docs.size());
    CHECK(a == b);
    for (const auto& [text, label] : a) {
        CHECK((label == vocab.positive_term || label == vocab.negative_term));
    }
    // A different seed must be able to change assignments.
    bool any_diff = false;
    for (std::uint64_t seed = 43; seed < 60 && !any_diff; ++seed) {
        any_diff = assign_pseudo_labels(docs, vocab, seed) != a;
    }
    CHECK(any_diff);
}

TEST_CASE("pseudo-label marginal is balanced over 10^4 seeded draws") {
    PseudoLabelVocab vocab;
    std::vector<RetrievedDoc> docs;
    for (int i = 0; i < 10000; ++i) {
        docs.push_back({Source::NewsCorpus, "doc" + std::to_string(i), "same text",
                        std::nullopt, std::nullopt});
    }
    auto labels = assign_pseudo_labels(docs, vocab, 7);
    std::size_t positive = 0;
    for (const auto& [text, label] : labels) {
        if (label == vocab.positive_term) ++positive;
    }
    double frac = static_cast<double>(positive) / labels.size();
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
    // Chi-square with 1 dof; threshold 6.635 is the 1% critical value.
    double expected = labels.size() / 2.0;
    double chi2 = (positive - expected) * (positive - expected) / expected +
                  (labels.size() - positive - expected) *
                      (labels.size() - positive - expected) / expected;
    CHECK(chi2 < 6.635);
}

TEST_CASE("vocab validation") {
    PseudoLabelVocab vocab;
    vocab.validate(true);  // default vocab passes the copy-effect check
    PseudoLabelVocab same{"x", "x"};
    CHECK_THROWS_AS(same.validate(false), ValidationError);
    PseudoLabelVocab empty{"", "y"};
    CHECK_THROWS_AS(empty.validate(false), ValidationError);
    PseudoLabelVocab task{"real", "fake"};
    task.validate(false);  // allowed when avoidance is off
    CHECK_THROWS_AS(task.validate(true), ValidationError);
}

TEST_CASE("round-1 demonstrations: top-k against the oracle over 12 candidates") {
    std::vector<json> records;
    std::vector<TokenizedDoc> tokenized;
    const char* texts[] = {
        "plane crash in the alps kills many",
        "french plane missing over mountains",
        "alps hiking season opens early",
        "crash site located by rescue teams in the alps",
        "stock market rallies on tech news today",
        "plane spotted near the french border today",
        "local bakery wins the regional award",
        "rescue crews reach remote crash location",
        "french alps weather warning issued today",
        "celebrity spotted in film festival",
        "airline grounds fleet after crash reports",
        "football team advances to the final"};
    for (int i = 0; i < 12; ++i) {
        std::string id = "c" + std::to_string(i);
        records.push_back({{"id", id}, {"text", texts[i]}});
        tokenized.push_back({id, tokenize(texts[i])});
    }
    CorpusStore corpus = CorpusStore::load(write_corpus("mrcd_ret_12.jsonl", records));
    Retriever::Options opts;
    opts.corpus_limit = 12;  // all candidates in play, same stats as the oracle
    Retriever retriever(nullptr, &corpus, nullptr, nullptr, opts);

    NewsItem item = crash_item();
    PseudoLabelVocab vocab;
    auto demos = retriever.demonstrations(item, 1, {}, 4, vocab, 11);
    auto oracle = reference::bm25_rank(tokenized, tokenize(item.text), 4);
    REQUIRE(demos.size() == 4);
    REQUIRE(oracle.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        // Compare through the text since demos do not carry corpus ids.
        std::string expected;
        for (int j = 0; j < 12; ++j) {
            if (("c" + std::to_string(j)) == oracle[i].doc_id) expected = texts[j];
        }
        CHECK(demos[i].text == expected);
        CHECK(demos[i].origin == Source::NewsCorpus);
        CHECK(demos[i].score == doctest::Approx(oracle[i].score));
    }

    // Seeded determinism of the random pseudo-labels.
    auto again = retriever.demonstrations(item, 1, {}, 4, vocab, 11);
    for (std::size_t i = 0; i < 4; ++i) CHECK(again[i].pseudo_label == demos[i].pseudo_label);
}

TEST_CASE("round-1 with no usable source is a retrieval error") {
    Retriever retriever(nullptr, nullptr, nullptr, nullptr, {});
    PseudoLabelVocab vocab;
    CHECK_THROWS_AS(retriever.demonstrations(crash_item(), 1, {}, 4, vocab, 1),
                    RetrievalError);
}

TEST_CASE("k = 0 yields no demonstrations without touching any source") {
    Retriever retriever(nullptr, nullptr, nullptr, nullptr, {});
    PseudoLabelVocab vocab;
    CHECK(retriever.demonstrations(crash_item(), 1, {}, 0, vocab, 1).empty());
}

TEST_CASE("round-2 demonstrations come from the clean pool with mapped labels") {
    Retriever retriever(nullptr, nullptr, nullptr, nullptr, {});
    PseudoLabelVocab vocab;
    std::vector<CleanPoolDoc> pool = {
        {"p1", "plane crash reported near the alps", "ev-crash", Label::Fake}};
    auto demos = retriever.demonstrations(crash_item(), 2, pool, 4, vocab, 1);
    REQUIRE(demos.size() == 1);
    CHECK(demos[0].pseudo_label == "unrealistic");
    CHECK(demos[0].origin == Source::CleanPool);
    CHECK(demos[0].event_id == "ev-crash");

    // Real maps to the positive term.
    pool[0].label = Label::Real;
    CHECK(retriever.demonstrations(crash_item(), 2, pool, 4, vocab, 1)[0].pseudo_label ==
          "realistic");

    // Empty pool is legitimate and yields nothing.
    CHECK(retriever.demonstrations(crash_item(), 2, {}, 4, vocab, 1).empty());
}

TEST_CASE("rounds >= 2 never originate from search or corpus") {
    // Even with a corpus configured, round 2 must ignore it.
    CorpusStore corpus = CorpusStore::load(write_corpus(
        "mrcd_ret_r2.jsonl", {{{"id", "c0"}, {"text", "plane crash reported in the alps"}}}));
    Retriever retriever(nullptr, &corpus, nullptr, nullptr, {});
    PseudoLabelVocab vocab;
    std::vector<CleanPoolDoc> pool = {
        {"p1", "plane crash in the french alps", "ev", Label::Real},
        {"p2", "crash near alps report", "ev", Label::Fake}};
    auto demos = retriever.demonstrations(crash_item(), 2, pool, 4, vocab, 1);
    REQUIRE_FALSE(demos.empty());
    for (const auto& d : demos) CHECK(d.origin == Source::CleanPool);
}

TEST_CASE("demonstration count is k whenever at least k candidates exist") {
    std::vector<json> records;
    for (int i = 0; i < 9; ++i) {
        records.push_back({{"id", "c" + std::to_string(i)},
                           {"text", "plane crash story number " + std::to_string(i)}});
    }
    CorpusStore corpus = CorpusStore::load(write_corpus("mrcd_ret_k.jsonl", records));
    Retriever retriever(nullptr, &corpus, nullptr, nullptr, {});
    PseudoLabelVocab vocab;
    for (std::size_t k = 1; k <= 9; ++k) {
        CHECK(retriever.demonstrations(crash_item(), 1, {}, k, vocab, 1).size() == k);
    }
    CHECK(retriever.demonstrations(crash_item(), 1, {}, 20, vocab, 1).size() == 9);
}

TEST_CASE("unlabeled-demonstration mode leaves pseudo labels empty") {
    CorpusStore corpus = CorpusStore::load(write_corpus(
        "mrcd_ret_unlab.jsonl", {{{"id", "c0"}, {"text", "plane crash in the alps"}}}));
    Retriever::Options opts;
    opts.unlabeled_demos = true;
    Retriever retriever(nullptr, &corpus, nullptr, nullptr, opts);
    PseudoLabelVocab vocab;
    auto demos = retriever.demonstrations(crash_item(), 1, {}, 2, vocab, 1);
    REQUIRE(demos.size() == 1);
    CHECK(demos[0].pseudo_label.empty());
}

TEST_CASE("knowledge pack assembly") {
    ReplayCache cache(fresh_dir("mrcd_ret_wiki"), false);
    WikiClient wiki(WikiConfig{}, cache);
    cache.put("wiki", ReplayCache::make_key("wiki", "en|Germanwings"),
              json{{"title", "Germanwings"}, {"extract", "A German airline."}}.dump());
    cache.put("wiki", ReplayCache::make_key("wiki", "en|French Alps"),
              json{{"title", "French Alps"}, {"extract", "A mountain range."}}.dump());
    cache.put("wiki", ReplayCache::make_key("wiki", "en|Unknownia"),
              json{{"mrcd_not_found", true}}.dump());

    SUBCASE("empty extraction yields an empty pack") {
        FixedLlm llm("");
        Retriever retriever(nullptr, nullptr, &wiki, &llm, {});
        CHECK(retriever.knowledge(crash_item()).entries.empty());
    }
    SUBCASE("duplicate entities collapse to one entry") {
        FixedLlm llm("Germanwings\nGermanwings");
        Retriever retriever(nullptr, nullptr, &wiki, &llm, {});
        auto pack = retriever.knowledge(crash_item());
        REQUIRE(pack.entries.size() == 1);
        CHECK(pack.entries[0].entity == "Germanwings");
    }
    SUBCASE("three extracted, two resolvable: pack of two in extraction order") {
        FixedLlm llm("French Alps\nUnknownia\nGermanwings");
        Retriever retriever(nullptr, nullptr, &wiki, &llm, {});
        auto pack = retriever.knowledge(crash_item());
        REQUIRE(pack.entries.size() == 2);
        CHECK(pack.entries[0].entity == "French Alps");
        CHECK(pack.entries[1].entity == "Germanwings");
    }
    SUBCASE("list markers and blank lines are salvaged") {
        FixedLlm llm("- Germanwings\n\n  * French Alps  \n");
        Retriever retriever(nullptr, nullptr, &wiki, &llm, {});
        auto pack = retriever.knowledge(crash_item());
        REQUIRE(pack.entries.size() == 2);
        CHECK(pack.entries[0].entity == "Germanwings");
    }
    SUBCASE("extraction capped at max_entities") {
        FixedLlm llm("Germanwings\nFrench Alps\nUnknownia");
        Retriever::Options opts;
        opts.max_entities = 1;
        Retriever retriever(nullptr, nullptr, &wiki, &llm, opts);
        CHECK(retriever.knowledge(crash_item()).entries.size() == 1);
    }
    SUBCASE("llm failure degrades to an empty pack with a warning") {
        ThrowingLlm llm;
        Retriever retriever(nullptr, nullptr, &wiki, &llm, {});
        std::string warning;
        retriever.set_warning_sink([&](const std::string& msg) { warning = msg; });
        CHECK(retriever.knowledge(crash_item()).entries.empty());
        CHECK(warning.find("q1") != std::string::npos);
    }
    SUBCASE("unreachable wiki drops the entity with a warning") {
        FixedLlm llm("NotInCache");
        Retriever retriever(nullptr, nullptr, &wiki, &llm, {});
        std::string warning;
        retriever.set_warning_sink([&](const std::string& msg) { warning = msg; });
        CHECK(retriever.knowledge(crash_item()).entries.empty());
        CHECK(warning.find("NotInCache") != std::string::npos);
    }
}
