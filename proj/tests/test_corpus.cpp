#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mrcd/corpus.hpp"
#include "mrcd/errors.hpp"
#include "mrcd/simharness.hpp"

using namespace mrcd;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
    fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("label serialization is strict lowercase") {
    CHECK(to_string(Label::Real) == "real");
    CHECK(to_string(Label::Fake) == "fake");
    CHECK(label_from_string("real") == Label::Real);
    CHECK(label_from_string("fake") == Label::Fake);
    CHECK_THROWS_AS(label_from_string("Real"), ValidationError);
    CHECK_THROWS_AS(label_from_string("FAKE"), ValidationError);
    CHECK_THROWS_AS(label_from_string("true"), ValidationError);
    CHECK(flipped(Label::Real) == Label::Fake);
    CHECK(flipped(Label::Fake) == Label::Real);
}

TEST_CASE("load_dataset reads three valid lines in order") {
    auto path = temp_file("mrcd_corpus_ok.jsonl",
                          R"({"id":"a","text":"first news","event_id":"e1","timestamp":100,"label":"real"})"
                          "\n"
                          R"({"id":"b","text":"second news","event_id":"e1","timestamp":200,"label":"fake"})"
                          "\n"
                          R"({"id":"c","text":"third news","event_id":"e2","timestamp":300})"
                          "\n");
    Dataset d = load_dataset(path, 250);
    REQUIRE(d.items.size() == 3);
    CHECK(d.items[0].id == "a");
    CHECK(d.items[1].id == "b");
    CHECK(d.items[2].id == "c");
    CHECK(d.items[0].gold_label == Label::Real);
    CHECK(d.items[1].gold_label == Label::Fake);
    CHECK_FALSE(d.items[2].gold_label.has_value());
    CHECK(d.split_cutoff == 250);
}

TEST_CASE("load_dataset rejects a duplicate id naming the line") {
    auto path = temp_file("mrcd_corpus_dup.jsonl",
                          R"({"id":"a","text":"x","event_id":"e","timestamp":1,"label":"real"})"
                          "\n"
                          R"({"id":"a","text":"y","event_id":"e","timestamp":2,"label":"real"})"
                          "\n");
    try {
        load_dataset(path, 10);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("load_dataset reports the line of a malformed record") {
    auto path = temp_file("mrcd_corpus_bad.jsonl",
                          R"({"id":"a","text":"x","event_id":"e","timestamp":1,"label":"real"})"
                          "\n{oops\n");
    try {
        load_dataset(path, 10);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("empty text is rejected") {
    auto path = temp_file("mrcd_corpus_empty_text.jsonl",
                          R"({"id":"a","text":"   ","event_id":"e","timestamp":1,"label":"real"})"
                          "\n");
    CHECK_THROWS_AS(load_dataset(path, 10), ValidationError);
}

TEST_CASE("synthetic 200-item fixture splits 140 past / 60 future") {
    SyntheticSpec spec;  // defaults: 200 items, 10 events
    Dataset d = generate(spec);
    REQUIRE(d.items.size() == 200);
    auto split = temporal_split(d);
    CHECK(split.labeled.size() == 140);
    CHECK(split.unlabeled.size() == 60);
}

TEST_CASE("temporal_split boundaries") {
    Dataset d;
    d.items = {{"a", "text a", "e1", 10, Label::Real}, {"b", "text b", "e1", 20, Label::Fake}};

    SUBCASE("all timestamps at or below the cutoff go to the past") {
        d.split_cutoff = 20;  // tie at the cutoff is past
        auto split = temporal_split(d);
        CHECK(split.labeled.size() == 2);
        CHECK(split.unlabeled.empty());
    }
    SUBCASE("all timestamps above the cutoff go to the future") {
        d.split_cutoff = 5;
        auto split = temporal_split(d);
        CHECK(split.labeled.empty());
        CHECK(split.unlabeled.size() == 2);
    }
}

TEST_CASE("temporal_split partition sizes match a linear scan") {
    SyntheticSpec spec;
    spec.n_items = 137;
    spec.events = 9;
    spec.seed = 3;
    Dataset d = generate(spec);
    std::size_t past = 0;
    for (const NewsItem& item : d.items) {
        if (item.timestamp <= d.split_cutoff) ++past;
    }
    auto split = temporal_split(d);
    CHECK(split.labeled.size() == past);
    CHECK(split.unlabeled.size() == d.items.size() - past);

    // Disjoint, order-preserving cover.
    std::size_t li = 0, ui = 0;
    for (const NewsItem& item : d.items) {
        if (item.timestamp <= d.split_cutoff) {
            REQUIRE(li < split.labeled.size());
            CHECK(split.labeled[li++].id == item.id);
        } else {
            REQUIRE(ui < split.unlabeled.size());
            CHECK(split.unlabeled[ui++].id == item.id);
        }
    }
}

TEST_CASE("past item without a label is a validation error") {
    Dataset d;
    d.items = {{"a", "text a", "e1", 10, std::nullopt}};
    d.split_cutoff = 20;
    CHECK_THROWS_AS(temporal_split(d), ValidationError);
}

TEST_CASE("save and load round-trip preserves every field and the order") {
    SyntheticSpec spec;
    spec.n_items = 41;
    spec.seed = 12;
    Dataset d = generate(spec);
    d.items[3].gold_label.reset();
    d.items[3].timestamp = d.split_cutoff + 1;  // only future items may be unlabeled

    fs::path path = fs::temp_directory_path() / "mrcd_roundtrip.jsonl";
    save_dataset(d, path);
    Dataset back = load_dataset(path, d.split_cutoff);
    REQUIRE(back.items.size() == d.items.size());
    for (std::size_t i = 0; i < d.items.size(); ++i) {
        CHECK(back.items[i].id == d.items[i].id);
        CHECK(back.items[i].text == d.items[i].text);
        CHECK(back.items[i].event_id == d.items[i].event_id);
        CHECK(back.items[i].timestamp == d.items[i].timestamp);
        CHECK(back.items[i].gold_label == d.items[i].gold_label);
    }
}
