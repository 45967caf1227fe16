#include "mrcd/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"

namespace mrcd {

namespace {

std::string normalized_text(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c) != 0) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string lowercased(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool pseudo_label_positive(std::uint64_t seed, const std::string& doc_id) {
    return (det::splitmix(det::mix(seed, "pseudo-label", det::fnv1a(doc_id))) & 1) != 0;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> assign_pseudo_labels(
    const std::vector<RetrievedDoc>& docs, const PseudoLabelVocab& vocab,
    std::uint64_t seed) {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(docs.size());
    for (const RetrievedDoc& doc : docs) {
        const std::string& term = pseudo_label_positive(seed, doc.doc_id)
                                      ? vocab.positive_term
                                      : vocab.negative_term;
        out.emplace_back(doc.text, term);
    }
    return out;
}

Retriever::Retriever(const NewsSearchClient* search, const CorpusStore* corpus,
                     const WikiClient* wiki, LlmBackend* entity_llm, Options options)
    : search_(search), corpus_(corpus), wiki_(wiki), entity_llm_(entity_llm),
      options_(options) {}

std::vector<RetrievedDoc> Retriever::round1_candidates(const NewsItem& item) const {
    std::vector<RetrievedDoc> candidates;
    bool search_ok = false;
    bool corpus_ok = false;

    // Merge order: search results first, then corpus, deduplicated by
    // normalized text before ranking.
    if (options_.use_search && search_ != nullptr && search_->configured()) {
        try {
            auto docs = search_->search(search_query_for(item), options_.search_limit);
            candidates.insert(candidates.end(), docs.begin(), docs.end());
            search_ok = true;
        } catch (const ProviderUnavailable& e) {
            warn_("search engine unavailable for item " + item.id + ": " + e.what());
        }
    }
    if (options_.use_corpus && corpus_ != nullptr) {
        auto docs = corpus_->fetch(item.text, options_.corpus_limit);
        candidates.insert(candidates.end(), docs.begin(), docs.end());
        corpus_ok = true;
    }
    if (!search_ok && !corpus_ok) {
        throw RetrievalError("no demonstration source available for item " + item.id);
    }

    std::vector<RetrievedDoc> deduped;
    std::unordered_set<std::string> seen_text;
    std::unordered_set<std::string> seen_id;
    for (auto& doc : candidates) {
        if (!seen_text.insert(normalized_text(doc.text)).second) continue;
        if (!seen_id.insert(doc.doc_id).second) continue;
        deduped.push_back(std::move(doc));
    }
    return deduped;
}

std::vector<Demonstration> Retriever::demonstrations(
    const NewsItem& item, int round, const std::vector<CleanPoolDoc>& clean_pool,
    std::size_t k, const PseudoLabelVocab& vocab, std::uint64_t seed) const {
    if (k == 0) return {};
    vocab.validate(false);

    if (round <= 1) {
        auto candidates = round1_candidates(item);
        std::vector<TokenizedDoc> tokenized;
        std::unordered_map<std::string, const RetrievedDoc*> by_id;
        tokenized.reserve(candidates.size());
        for (const RetrievedDoc& doc : candidates) {
            tokenized.push_back({doc.doc_id, tokenize(doc.text)});
            by_id[doc.doc_id] = &doc;
        }
        auto index = Bm25Index::build(tokenized);
        std::vector<Demonstration> demos;
        for (const ScoredDoc& hit : index.top_k(item.text, k)) {
            const RetrievedDoc& doc = *by_id.at(hit.doc_id);
            Demonstration demo;
            demo.text = doc.text;
            demo.origin = doc.source;
            demo.score = hit.score;
            demo.event_id = doc.event_id;
            if (!options_.unlabeled_demos) {
                demo.pseudo_label = pseudo_label_positive(seed, doc.doc_id)
                                        ? vocab.positive_term
                                        : vocab.negative_term;
            }
            demos.push_back(std::move(demo));
        }
        return demos;
    }

    // Rounds >= 2: clean pool only; labels come from the pool, rendered
    // through the vocab. An empty pool legitimately yields no demonstrations.
    std::vector<TokenizedDoc> tokenized;
    std::unordered_map<std::string, const CleanPoolDoc*> by_id;
    tokenized.reserve(clean_pool.size());
    for (const CleanPoolDoc& doc : clean_pool) {
        tokenized.push_back({doc.id, tokenize(doc.text)});
        by_id[doc.id] = &doc;
    }
    auto index = Bm25Index::build(tokenized);
    std::vector<Demonstration> demos;
    for (const ScoredDoc& hit : index.top_k(item.text, k)) {
        const CleanPoolDoc& doc = *by_id.at(hit.doc_id);
        Demonstration demo;
        demo.text = doc.text;
        demo.origin = Source::CleanPool;
        demo.score = hit.score;
        demo.event_id = doc.event_id;
        if (!options_.unlabeled_demos) demo.pseudo_label = vocab.term_for(doc.label);
        demos.push_back(std::move(demo));
    }
    return demos;
}

KnowledgePack Retriever::knowledge(const NewsItem& item) const {
    KnowledgePack pack;
    if (entity_llm_ == nullptr || wiki_ == nullptr) return pack;

    std::string response;
    try {
        LlmContext context;
        context.task = LlmTask::ExtractEntities;
        context.item_id = item.id;
        context.item_event_id = item.event_id;
        response = entity_llm_->complete(entity_extraction_prompt(item, options_.max_entities),
                                         context);
    } catch (const Error& e) {
        warn_("entity extraction failed for item " + item.id + ": " + e.what());
        return pack;
    }

    // Salvage rule: non-empty trimmed lines, capped at max_entities.
    std::vector<std::string> entities;
    std::unordered_set<std::string> seen;
    std::size_t pos = 0;
    while (pos <= response.size() && entities.size() < options_.max_entities) {
        std::size_t eol = response.find('\n', pos);
        if (eol == std::string::npos) eol = response.size();
        std::string line = response.substr(pos, eol - pos);
        pos = eol + 1;
        std::size_t b = line.find_first_not_of(" \t\r-*");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.empty()) continue;
        if (!seen.insert(lowercased(line)).second) continue;
        entities.push_back(line);
    }

    for (const std::string& entity : entities) {
        try {
            if (auto entry = wiki_->lookup(entity)) {
                bool duplicate = false;
                for (const KnowledgeEntry& existing : pack.entries) {
                    if (lowercased(existing.entity) == lowercased(entry->entity)) {
                        duplicate = true;
                        break;
                    }
                }
                if (!duplicate) pack.entries.push_back(std::move(*entry));
            }
        } catch (const ProviderUnavailable& e) {
            warn_("wikipedia lookup failed for \"" + entity + "\": " + e.what());
        }
    }
    return pack;
}

}  // namespace mrcd
