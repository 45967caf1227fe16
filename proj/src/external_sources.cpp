#include "mrcd/external_sources.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;

std::string to_string(Source s) {
    switch (s) {
        case Source::SearchEngine: return "search_engine";
        case Source::NewsCorpus: return "news_corpus";
        case Source::CleanPool: return "clean_pool";
    }
    return "unknown";
}

std::string truncate_at_sentence(const std::string& text, std::size_t limit) {
    if (text.size() <= limit) return text;
    std::size_t cut = 0;
    for (std::size_t i = 0; i < limit; ++i) {
        char c = text[i];
        if (c == '.' || c == '!' || c == '?') cut = i + 1;
    }
    if (cut == 0) cut = limit;
    return text.substr(0, cut);
}

std::string search_query_for(const NewsItem& item) {
    auto tokens = tokenize(item.text);
    if (tokens.size() > 10) tokens.resize(10);
    std::string query;
    for (const auto& t : tokens) {
        if (!query.empty()) query.push_back(' ');
        query += t;
    }
    return query;
}

namespace {

std::optional<std::int64_t> parse_published(const json& value) {
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_string()) {
        // ISO-8601 date prefix; time-of-day is ignored.
        std::tm tm{};
        std::istringstream ss(value.get<std::string>());
        ss >> std::get_time(&tm, "%Y-%m-%d");
        if (!ss.fail()) {
            tm.tm_hour = tm.tm_min = tm.tm_sec = 0;
            return static_cast<std::int64_t>(timegm(&tm));
        }
    }
    return std::nullopt;
}

std::pair<std::string, std::string> split_url(const std::string& url) {
    // scheme://host[/path] -> (scheme://host, /path)
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

NewsSearchClient::NewsSearchClient(SearchProviderConfig config, ReplayCache& cache)
    : config_(std::move(config)), cache_(cache) {}

bool NewsSearchClient::configured() const {
    return config_.enabled && (!config_.base_url.empty() || !cache_.allow_live());
}

std::string NewsSearchClient::fetch_live(const std::string& query) const {
    auto [host, base_path] = split_url(config_.base_url);
    httplib::Client client(host);
    client.set_connection_timeout(10);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        headers.emplace("Ocp-Apim-Subscription-Key", key);
    }
    httplib::Params params{{"q", query}, {"mkt", config_.market}};
    auto res = client.Get(base_path + config_.path, params, headers);
    if (!res || res->status != 200) {
        throw ProviderUnavailable("news search request failed for query \"" + query + "\"" +
                                  (res ? " (status " + std::to_string(res->status) + ")" : ""));
    }
    return res->body;
}

std::vector<RetrievedDoc> NewsSearchClient::search(const std::string& query,
                                                   std::size_t limit) const {
    if (!config_.enabled) {
        throw ProviderUnavailable("news search provider is disabled");
    }
    std::string key = ReplayCache::make_key("search", config_.market + "|" + query);
    std::string body = cache_.fetch_through("search", key, [&] { return fetch_live(query); });

    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed search response: ") + e.what());
    }
    if (!parsed.contains("value") || !parsed.at("value").is_array()) {
        throw ParseError("search response has no \"value\" array");
    }

    std::vector<RetrievedDoc> docs;
    std::size_t i = 0;
    for (const json& hit : parsed.at("value")) {
        if (docs.size() >= limit) break;
        RetrievedDoc doc;
        doc.source = Source::SearchEngine;
        std::string title = hit.value("name", "");
        std::string snippet = hit.value("description", "");
        doc.text = snippet.empty() ? title : title + ". " + snippet;
        doc.doc_id = hit.contains("url") && hit.at("url").is_string()
                         ? hit.at("url").get<std::string>()
                         : "search-" + det::hex(det::fnv1a(key)) + "-" + std::to_string(i);
        if (hit.contains("datePublished")) {
            doc.published_at = parse_published(hit.at("datePublished"));
        }
        if (!doc.text.empty()) docs.push_back(std::move(doc));
        ++i;
    }
    return docs;
}

CorpusStore CorpusStore::load(const std::filesystem::path& path, Bm25Params params) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open news corpus file: " + path.string());
    }
    CorpusStore store;
    std::vector<TokenizedDoc> tokenized;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
        RetrievedDoc doc;
        doc.source = Source::NewsCorpus;
        doc.doc_id = rec.at("id").get<std::string>();
        doc.text = rec.at("text").get<std::string>();
        if (rec.contains("event_id")) doc.event_id = rec.at("event_id").get<std::string>();
        if (rec.contains("published_at")) {
            doc.published_at = rec.at("published_at").get<std::int64_t>();
        }
        if (!seen.insert(doc.doc_id).second) {
            throw ValidationError("corpus line " + std::to_string(line_no) +
                                  ": duplicate id \"" + doc.doc_id + "\"");
        }
        tokenized.push_back({doc.doc_id, tokenize(doc.text)});
        store.docs_.push_back(std::move(doc));
    }
    store.index_ = Bm25Index::build(tokenized, params);
    return store;
}

std::vector<RetrievedDoc> CorpusStore::fetch(const std::string& query,
                                             std::size_t limit) const {
    std::vector<RetrievedDoc> out;
    for (const ScoredDoc& hit : index_.top_k(query, limit)) {
        for (const RetrievedDoc& doc : docs_) {
            if (doc.doc_id == hit.doc_id) {
                out.push_back(doc);
                break;
            }
        }
    }
    return out;
}

WikiClient::WikiClient(WikiConfig config, ReplayCache& cache)
    : config_(std::move(config)), cache_(cache) {}

std::optional<KnowledgeEntry> WikiClient::lookup(const std::string& entity) const {
    if (entity.empty()) return std::nullopt;
    std::string key = ReplayCache::make_key("wiki", config_.language + "|" + entity);
    std::string body = cache_.fetch_through("wiki", key, [&]() -> std::string {
        std::string base = config_.base_url.empty()
                               ? "https://" + config_.language + ".wikipedia.org/api/rest_v1"
                               : config_.base_url;
        auto [host, base_path] = split_url(base);
        httplib::Client client(host);
        client.set_connection_timeout(10);
        std::string title = entity;
        for (char& c : title) {
            if (c == ' ') c = '_';
        }
        auto res = client.Get(base_path + "/page/summary/" + title);
        if (!res) {
            throw ProviderUnavailable("wikipedia request failed for \"" + entity + "\"");
        }
        if (res->status == 404) return json{{"mrcd_not_found", true}}.dump();
        if (res->status != 200) {
            throw ProviderUnavailable("wikipedia returned status " +
                                      std::to_string(res->status) + " for \"" + entity + "\"");
        }
        return res->body;
    });

    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed wikipedia response: ") + e.what());
    }
    if (parsed.value("mrcd_not_found", false)) return std::nullopt;
    KnowledgeEntry entry;
    entry.entity = parsed.value("title", entity);
    entry.summary = truncate_at_sentence(parsed.value("extract", ""));
    if (entry.summary.empty()) return std::nullopt;
    return entry;
}

}  // namespace mrcd
