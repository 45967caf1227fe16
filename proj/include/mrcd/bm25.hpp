#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mrcd {

// Lowercased Unicode-alphanumeric word segmentation; punctuation dropped, no
// stopword removal. Non-ASCII codepoints are treated as word characters.
std::vector<std::string> tokenize(std::string_view text);

struct TokenizedDoc {
    std::string doc_id;
    std::vector<std::string> tokens;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

/// Okapi BM25 over an in-memory inverted index, with the +1 smoothed IDF
/// ln((N - n_t + 0.5) / (n_t + 0.5) + 1) so scores stay non-negative on tiny
/// corpora. Immutable after build; concurrent queries are safe. Scoring is
/// OpenMP-parallel across candidate documents with a fixed accumulation
/// order, so results are identical to the serial path.
class Bm25Index {
public:
    Bm25Index() = default;

    // Rejects duplicate doc ids.
    static Bm25Index build(const std::vector<TokenizedDoc>& docs, Bm25Params params = {});

    // At most k results, scores descending, ties broken by ascending doc_id,
    // zero-score documents excluded. Empty index yields an empty list.
    std::vector<ScoredDoc> top_k(const std::string& query, std::size_t k) const;
    std::vector<ScoredDoc> top_k_tokens(const std::vector<std::string>& query_tokens,
                                        std::size_t k) const;

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avg_doc_len() const { return avg_doc_len_; }
    const Bm25Params& params() const { return params_; }

    // Term frequency of `term` in `doc_id`, 0 if absent. Exposed for tests.
    std::uint32_t term_frequency(const std::string& term, const std::string& doc_id) const;

private:
    struct Posting {
        std::uint32_t doc = 0;  // index into doc_ids_
        std::uint32_t tf = 0;
    };

    Bm25Params params_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_len_ = 0.0;
};

namespace reference {

// Serial brute-force BM25: evaluates the scoring formula per document
// straight from the token lists, no index. Kept as the independent oracle for
// the indexed implementation and as the baseline in the benchmark.
std::vector<ScoredDoc> bm25_rank(const std::vector<TokenizedDoc>& docs,
                                 const std::vector<std::string>& query_tokens,
                                 std::size_t k, Bm25Params params = {});

}  // namespace reference

}  // namespace mrcd
