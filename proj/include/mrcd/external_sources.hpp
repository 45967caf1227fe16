#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mrcd/bm25.hpp"
#include "mrcd/cache.hpp"
#include "mrcd/corpus.hpp"

namespace mrcd {

enum class Source { SearchEngine, NewsCorpus, CleanPool };

std::string to_string(Source s);

struct RetrievedDoc {
    Source source = Source::NewsCorpus;
    std::string doc_id;
    std::string text;
    std::optional<std::int64_t> published_at;
    std::optional<std::string> event_id;  // known for corpus docs that carry one
};

struct KnowledgeEntry {
    std::string entity;
    std::string summary;
};

// Longest prefix ending at a sentence boundary ('.', '!' or '?') that fits
// the limit; hard cut when no boundary exists.
std::string truncate_at_sentence(const std::string& text, std::size_t limit = 1200);

// Search queries are the first 10 tokens of the news text, space-joined.
std::string search_query_for(const NewsItem& item);

struct SearchProviderConfig {
    bool enabled = false;
    std::string base_url;          // e.g. https://api.example.com
    std::string path = "/news/search";
    std::string api_key_env = "MRCD_SEARCH_KEY";
    std::string market = "en-US";
};

// Online news search client (title/snippet/date result shape) behind the
// replay cache. Responses are cached per (market, query); the limit is
// applied client-side so one cached response serves any limit.
class NewsSearchClient {
public:
    NewsSearchClient(SearchProviderConfig config, ReplayCache& cache);

    std::vector<RetrievedDoc> search(const std::string& query, std::size_t limit) const;

    bool configured() const;

private:
    std::string fetch_live(const std::string& query) const;

    SearchProviderConfig config_;
    ReplayCache& cache_;
};

// Static news corpus: JSONL of id + text (optional event_id, published_at),
// ranked against queries with the shared BM25 machinery.
class CorpusStore {
public:
    static CorpusStore load(const std::filesystem::path& path, Bm25Params params = {});

    std::vector<RetrievedDoc> fetch(const std::string& query, std::size_t limit) const;

    std::size_t size() const { return docs_.size(); }

private:
    std::vector<RetrievedDoc> docs_;
    Bm25Index index_;
};

struct WikiConfig {
    std::string language = "en";
    std::string base_url;  // empty -> https://{language}.wikipedia.org/api/rest_v1
};

// Wikipedia page-summary lookup behind the replay cache. Misses (no page)
// are cached too so replay runs reproduce them.
class WikiClient {
public:
    WikiClient(WikiConfig config, ReplayCache& cache);

    std::optional<KnowledgeEntry> lookup(const std::string& entity) const;

private:
    WikiConfig config_;
    ReplayCache& cache_;
};

}  // namespace mrcd
