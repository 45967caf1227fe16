#include "mrcd/cache.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mrcd/det.hpp"
#include "mrcd/errors.hpp"

namespace mrcd {

using nlohmann::json;

namespace {

std::string normalize_request(const std::string& request) {
    std::string out;
    out.reserve(request.size());
    bool pending_space = false;
    for (unsigned char c : request) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                           : static_cast<char>(c));
    }
    return out;
}

std::int64_t now_epoch() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

ReplayCache::ReplayCache(std::filesystem::path dir, bool allow_live)
    : dir_(std::move(dir)), allow_live_(allow_live) {
    std::filesystem::create_directories(dir_);
}

std::string ReplayCache::make_key(const std::string& provider, const std::string& request) {
    return provider + "|" + normalize_request(request);
}

std::filesystem::path ReplayCache::record_path(const std::string& provider,
                                               const std::string& key) const {
    return dir_ / (det::hex(det::fnv1a(provider + "\x1f" + key)) + ".json");
}

std::optional<std::string> ReplayCache::get(const std::string& provider,
                                            const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto path = record_path(provider, key);
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json rec;
    try {
        in >> rec;
    } catch (const json::parse_error& e) {
        throw IntegrityError("corrupt cache record " + path.string() + ": " + e.what());
    }
    auto body = rec.at("body").get<std::string>();
    if (rec.at("digest").get<std::string>() != det::hex(det::fnv1a(body))) {
        throw IntegrityError("cache record digest mismatch: " + path.string());
    }
    return body;
}

void ReplayCache::put(const std::string& provider, const std::string& key,
                      const std::string& body) {
    std::lock_guard lock(mutex_);
    json rec{{"provider", provider},
             {"request_key", key},
             {"body", body},
             {"digest", det::hex(det::fnv1a(body))},
             {"fetched_at", now_epoch()}};
    std::ofstream out(record_path(provider, key));
    out << rec.dump(2) << '\n';
}

std::string ReplayCache::fetch_through(const std::string& provider, const std::string& key,
                                       const std::function<std::string()>& fetch) {
    if (auto cached = get(provider, key)) return *cached;
    if (!allow_live_) {
        throw ProviderUnavailable("no cached response for " + provider + " key \"" + key +
                                  "\" and live fetching is disabled");
    }
    std::string body = fetch();
    put(provider, key, body);
    return body;
}

std::vector<std::string> ReplayCache::verify() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> bad;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        json rec;
        try {
            in >> rec;
            auto body = rec.at("body").get<std::string>();
            auto provider = rec.at("provider").get<std::string>();
            auto key = rec.at("request_key").get<std::string>();
            bool digest_ok = rec.at("digest").get<std::string>() == det::hex(det::fnv1a(body));
            bool name_ok = record_path(provider, key) == entry.path();
            if (!digest_ok || !name_ok) bad.push_back(entry.path().filename().string());
        } catch (const json::exception&) {
            bad.push_back(entry.path().filename().string());
        }
    }
    std::sort(bad.begin(), bad.end());
    return bad;
}

std::size_t ReplayCache::gc_older_than(std::int64_t cutoff_epoch_seconds) {
    std::lock_guard lock(mutex_);
    std::vector<std::filesystem::path> doomed;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        json rec;
        try {
            in >> rec;
            if (rec.at("fetched_at").get<std::int64_t>() < cutoff_epoch_seconds) {
                doomed.push_back(entry.path());
            }
        } catch (const json::exception&) {
            continue;  // verify reports these; gc leaves them alone
        }
    }
    for (const auto& p : doomed) std::filesystem::remove(p);
    return doomed.size();
}

std::string ReplayCache::digest() const {
    std::lock_guard lock(mutex_);
    std::uint64_t acc = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        std::stringstream ss;
        ss << in.rdbuf();
        acc ^= det::fnv1a(entry.path().filename().string() + "\x1f" + ss.str());
    }
    return det::hex(acc);
}

}  // namespace mrcd
