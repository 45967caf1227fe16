#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mrcd/external_sources.hpp"
#include "mrcd/llm_gateway.hpp"
#include "mrcd/retrieval_types.hpp"

namespace mrcd {

// One clean-pool entry as seen by round >= 2 demonstration retrieval.
struct CleanPoolDoc {
    std::string id;
    std::string text;
    std::string event_id;
    Label label;
};

// Uniform random synonym per document, drawn from a generator seeded by
// (seed, doc_id) so reruns and per-item ordering cannot change assignments.
std::vector<std::pair<std::string, std::string>> assign_pseudo_labels(
    const std::vector<RetrievedDoc>& docs, const PseudoLabelVocab& vocab,
    std::uint64_t seed);

// Stage one builds pseudo-labeled demonstrations (search + corpus in round 1,
// clean pool afterwards), stage two builds a knowledge pack from LLM-extracted
// entities resolved against Wikipedia.
class Retriever {
public:
    struct Options {
        std::size_t search_limit = 10;
        std::size_t corpus_limit = 10;
        std::size_t max_entities = 5;
        bool use_search = true;
        bool use_corpus = true;
        // Appendix-style unlabeled-demonstration mode: demonstrations carry no
        // pseudo-label and the prompt omits the assistant turns.
        bool unlabeled_demos = false;
    };

    Retriever(const NewsSearchClient* search, const CorpusStore* corpus,
              const WikiClient* wiki, LlmBackend* entity_llm, Options options);

    // Round 1: search + corpus candidates, BM25 top-k against the item text,
    // random pseudo-labels. Round >= 2: clean-pool candidates only, labels
    // rendered through the vocab. Fewer than k candidates -> all of them.
    // Throws RetrievalError when round 1 has no usable source.
    std::vector<Demonstration> demonstrations(const NewsItem& item, int round,
                                              const std::vector<CleanPoolDoc>& clean_pool,
                                              std::size_t k, const PseudoLabelVocab& vocab,
                                              std::uint64_t seed) const;

    // LLM failure degrades to an empty pack (knowledge is an enhancement);
    // unresolvable entities are dropped, order preserved.
    KnowledgePack knowledge(const NewsItem& item) const;

    void set_warning_sink(std::function<void(const std::string&)> sink) {
        warn_ = std::move(sink);
    }

private:
    std::vector<RetrievedDoc> round1_candidates(const NewsItem& item) const;

    const NewsSearchClient* search_;
    const CorpusStore* corpus_;
    const WikiClient* wiki_;
    LlmBackend* entity_llm_;
    Options options_;
    std::function<void(const std::string&)> warn_ = [](const std::string&) {};
};

}  // namespace mrcd
