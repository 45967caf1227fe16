#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "mrcd/bm25.hpp"
#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"

using namespace mrcd;

namespace {

// Random corpus/query generator shared by the oracle-equivalence tests.
std::vector<TokenizedDoc> random_corpus(det::Stream& s, std::size_t max_docs) {
    static const std::vector<std::string> pool = {
        "plane", "crash", "alps", "hostage", "safe", "breaking", "report", "police",
        "claims", "rumor", "video", "photo", "eyewitness", "confirmed", "denied", "official"};
    std::size_t n = 1 + s.below(max_docs);
    std::vector<TokenizedDoc> docs;
    for (std::size_t i = 0; i < n; ++i) {
        TokenizedDoc doc;
        doc.doc_id = "d" + std::to_string(i);
        std::size_t len = 1 + s.below(20);
        for (std::size_t j = 0; j < len; ++j) doc.tokens.push_back(pool[s.below(pool.size())]);
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<std::string> random_query(det::Stream& s) {
    static const std::vector<std::string> pool = {
        "plane", "crash", "alps", "hostage", "safe", "unseen", "report", "police"};
    std::vector<std::string> q;
    std::size_t len = 1 + s.below(6);
    for (std::size_t j = 0; j < len; ++j) q.push_back(pool[s.below(pool.size())]);
    return q;
}

}  // namespace

TEST_CASE("tokenize lowercases and drops punctuation") {
    CHECK(tokenize("Hostages SAFE!") == std::vector<std::string>{"hostages", "safe"});
    CHECK(tokenize("") == std::vector<std::string>{});
    // 12 words, 2 punctuation marks -> 12 terms.
    auto terms = tokenize("The quick, brown fox jumps over the lazy dog near a river.");
    CHECK(terms.size() == 12);
    CHECK(terms.front() == "the");
    CHECK(terms.back() == "river");
}

TEST_CASE("tokenize keeps digits and non-ascii bytes as word characters") {
    CHECK(tokenize("flight 4U9525") == std::vector<std::string>{"flight", "4u9525"});
    CHECK(tokenize("caf\xc3\xa9 news") == std::vector<std::string>{"caf\xc3\xa9", "news"});
}

TEST_CASE("build_index computes average document length") {
    Bm25Index one = Bm25Index::build({{"a", {"t1", "t2", "t3", "t4", "t5"}}});
    CHECK(one.doc_count() == 1);
    CHECK(one.avg_doc_len() == doctest::Approx(5.0));

    Bm25Index three = Bm25Index::build(
        {{"a", {"x", "y"}}, {"b", {"x", "y", "z", "w"}}, {"c", {"x", "y", "z", "w", "u", "v"}}});
    CHECK(three.avg_doc_len() == doctest::Approx(4.0));
}

TEST_CASE("build_index rejects duplicate doc ids") {
    CHECK_THROWS_AS(Bm25Index::build({{"a", {"x"}}, {"a", {"y"}}}), ValidationError);
}

TEST_CASE("postings term frequencies match brute-force counts") {
    det::Stream s(401);
    auto docs = random_corpus(s, 50);
    Bm25Index index = Bm25Index::build(docs);
    for (const TokenizedDoc& doc : docs) {
        for (const std::string& term : {"plane", "crash", "official", "unseen"}) {
            std::uint32_t naive = 0;
            for (const std::string& t : doc.tokens) {
                if (t == term) ++naive;
            }
            CHECK(index.term_frequency(term, doc.doc_id) == naive);
        }
    }
}

TEST_CASE("top_k identity and zero-overlap cases") {
    Bm25Index index = Bm25Index::build({{"only", tokenize("hostages safe in paris")}});
    auto hits = index.top_k("hostages safe in paris", 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].doc_id == "only");
    CHECK(hits[0].score > 0.0);

    CHECK(index.top_k("completely unrelated words", 5).empty());
    CHECK(Bm25Index().top_k("anything", 3).empty());
}

TEST_CASE("top_k ranking equals the brute-force oracle on 200 random cases") {
    det::Stream s(77);
    for (int c = 0; c < 200; ++c) {
        auto docs = random_corpus(s, 50);
        auto query = random_query(s);
        Bm25Index index = Bm25Index::build(docs);
        auto fast = index.top_k_tokens(query, 10);
        auto slow = reference::bm25_rank(docs, query, 10);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast[i].doc_id == slow[i].doc_id);
            CHECK(fast[i].score == doctest::Approx(slow[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("top_k(q, k) is a prefix of top_k(q, k+1)") {
    det::Stream s(55);
    for (int c = 0; c < 40; ++c) {
        auto docs = random_corpus(s, 30);
        auto query = random_query(s);
        Bm25Index index = Bm25Index::build(docs);
        for (std::size_t k = 1; k < 8; ++k) {
            auto small = index.top_k_tokens(query, k);
            auto large = index.top_k_tokens(query, k + 1);
            REQUIRE(small.size() <= large.size());
            for (std::size_t i = 0; i < small.size(); ++i) {
                CHECK(small[i].doc_id == large[i].doc_id);
            }
        }
    }
}

TEST_CASE("adding a query-term occurrence never decreases that doc's score") {
    det::Stream s(99);
    for (int c = 0; c < 50; ++c) {
        auto docs = random_corpus(s, 20);
        std::vector<std::string> query = {"plane"};
        Bm25Index before = Bm25Index::build(docs);
        double score_before = 0.0;
        for (const auto& hit : before.top_k_tokens(query, docs.size())) {
            if (hit.doc_id == "d0") score_before = hit.score;
        }
        docs[0].tokens.push_back("plane");
        Bm25Index after = Bm25Index::build(docs);
        double score_after = 0.0;
        for (const auto& hit : after.top_k_tokens(query, docs.size())) {
            if (hit.doc_id == "d0") score_after = hit.score;
        }
        CHECK(score_after >= score_before);
    }
}

TEST_CASE("ties break by ascending doc_id and results are deterministic") {
    // Two identical docs: equal score, so doc_id decides.
    std::vector<TokenizedDoc> docs = {{"zz", {"plane", "crash"}}, {"aa", {"plane", "crash"}}};
    Bm25Index index = Bm25Index::build(docs);
    auto hits = index.top_k("plane", 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].doc_id == "aa");
    CHECK(hits[1].doc_id == "zz");

    auto again = index.top_k("plane", 2);
    REQUIRE(again.size() == hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(again[i].doc_id == hits[i].doc_id);
        CHECK(again[i].score == hits[i].score);
    }
}

TEST_CASE("smoothed idf keeps scores non-negative on tiny corpora") {
    // A term present in every doc would have negative unsmoothed IDF.
    std::vector<TokenizedDoc> docs = {
        {"a", {"common", "common"}}, {"b", {"common"}}, {"c", {"common", "rare"}}};
    Bm25Index index = Bm25Index::build(docs);
    for (const auto& hit : index.top_k("common", 3)) CHECK(hit.score > 0.0);
}
