#include "mrcd/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mrcd/errors.hpp"

namespace mrcd {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        bool word_char = (c >= 0x80) || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                         (c >= 'A' && c <= 'Z');
        if (word_char) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                                   : static_cast<char>(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

double idf(std::size_t doc_count, std::size_t df) {
    double n = static_cast<double>(doc_count);
    double d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

double term_score(double tf, double doc_len, double avg_len, const Bm25Params& p) {
    double norm = p.k1 * (1.0 - p.b + p.b * doc_len / avg_len);
    return tf * (p.k1 + 1.0) / (tf + norm);
}

// Distinct query terms with multiplicities, in lexicographic order so
// accumulation order is fixed.
std::vector<std::pair<std::string, std::uint32_t>> query_counts(
    const std::vector<std::string>& query_tokens) {
    std::map<std::string, std::uint32_t> counts;
    for (const auto& t : query_tokens) ++counts[t];
    return {counts.begin(), counts.end()};
}

void rank_and_truncate(std::vector<ScoredDoc>& scored, std::size_t k) {
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (scored.size() > k) scored.resize(k);
}

}  // namespace

Bm25Index Bm25Index::build(const std::vector<TokenizedDoc>& docs, Bm25Params params) {
    Bm25Index index;
    index.params_ = params;
    index.doc_ids_.reserve(docs.size());
    index.doc_lengths_.reserve(docs.size());

    std::size_t total_len = 0;
    for (const TokenizedDoc& doc : docs) {
        auto dup = std::find(index.doc_ids_.begin(), index.doc_ids_.end(), doc.doc_id);
        if (dup != index.doc_ids_.end()) {
            throw ValidationError("duplicate doc_id \"" + doc.doc_id + "\"");
        }
        auto doc_index = static_cast<std::uint32_t>(index.doc_ids_.size());
        index.doc_ids_.push_back(doc.doc_id);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(doc.tokens.size()));
        total_len += doc.tokens.size();

        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : doc.tokens) ++tf[t];
        for (const auto& [term, freq] : tf) {
            index.postings_[term].push_back({doc_index, freq});
        }
    }
    if (!docs.empty()) {
        index.avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(docs.size());
    }
    return index;
}

std::uint32_t Bm25Index::term_frequency(const std::string& term,
                                        const std::string& doc_id) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return 0;
    for (const Posting& p : it->second) {
        if (doc_ids_[p.doc] == doc_id) return p.tf;
    }
    return 0;
}

std::vector<ScoredDoc> Bm25Index::top_k(const std::string& query, std::size_t k) const {
    return top_k_tokens(tokenize(query), k);
}

std::vector<ScoredDoc> Bm25Index::top_k_tokens(const std::vector<std::string>& query_tokens,
                                               std::size_t k) const {
    if (doc_count() == 0 || k == 0) return {};

    struct QueryTerm {
        const std::vector<Posting>* postings;
        double qtf;
        double idf;
    };
    std::vector<QueryTerm> terms;
    std::vector<std::uint32_t> candidates;
    for (const auto& [term, qtf] : query_counts(query_tokens)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        terms.push_back({&it->second, static_cast<double>(qtf),
                         idf(doc_count(), it->second.size())});
        for (const Posting& p : it->second) candidates.push_back(p.doc);
    }
    if (terms.empty()) return {};
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // Per-document scores are independent; each one sums its terms in the
    // same fixed order as the serial path.
    std::vector<double> scores(candidates.size(), 0.0);
    const auto n = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        std::uint32_t doc = candidates[static_cast<std::size_t>(i)];
        double doc_len = doc_lengths_[doc];
        double s = 0.0;
        for (const QueryTerm& qt : terms) {
            auto it = std::lower_bound(qt.postings->begin(), qt.postings->end(), doc,
                                       [](const Posting& p, std::uint32_t d) { return p.doc < d; });
            if (it != qt.postings->end() && it->doc == doc) {
                s += qt.qtf * qt.idf * term_score(it->tf, doc_len, avg_doc_len_, params_);
            }
        }
        scores[static_cast<std::size_t>(i)] = s;
    }

    std::vector<ScoredDoc> scored;
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (scores[i] > 0.0) scored.push_back({doc_ids_[candidates[i]], scores[i]});
    }
    rank_and_truncate(scored, k);
    return scored;
}

namespace reference {

std::vector<ScoredDoc> bm25_rank(const std::vector<TokenizedDoc>& docs,
                                 const std::vector<std::string>& query_tokens,
                                 std::size_t k, Bm25Params params) {
    if (docs.empty() || k == 0) return {};
    double avg_len = 0.0;
    for (const auto& d : docs) avg_len += static_cast<double>(d.tokens.size());
    avg_len /= static_cast<double>(docs.size());

    auto qterms = query_counts(query_tokens);
    std::vector<ScoredDoc> scored;
    for (const TokenizedDoc& doc : docs) {
        double s = 0.0;
        for (const auto& [term, qtf] : qterms) {
            auto tf = static_cast<double>(
                std::count(doc.tokens.begin(), doc.tokens.end(), term));
            if (tf == 0.0) continue;
            std::size_t df = 0;
            for (const auto& other : docs) {
                if (std::find(other.tokens.begin(), other.tokens.end(), term) !=
                    other.tokens.end()) {
                    ++df;
                }
            }
            s += static_cast<double>(qtf) * idf(docs.size(), df) *
                 term_score(tf, static_cast<double>(doc.tokens.size()), avg_len, params);
        }
        if (s > 0.0) scored.push_back({doc.doc_id, s});
    }
    rank_and_truncate(scored, k);
    return scored;
}

}  // namespace reference

}  // namespace mrcd
