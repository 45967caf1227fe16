#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mrcd {

// Write-through on-disk record store for provider responses. One JSON file
// per record, named by the hash of (provider, request_key), each carrying a
// body digest so tampering is detectable. With live fetching disabled the
// cache is the only source of truth, which makes whole runs replayable.
class ReplayCache {
public:
    ReplayCache(std::filesystem::path dir, bool allow_live);

    // Canonical key: provider + normalized (trimmed, lowercased, whitespace
    // collapsed) request. Pure function.
    static std::string make_key(const std::string& provider, const std::string& request);

    std::optional<std::string> get(const std::string& provider, const std::string& key) const;
    void put(const std::string& provider, const std::string& key, const std::string& body);

    // Cached body if present; otherwise calls fetch (live mode only) and
    // stores the result. Throws ProviderUnavailable on a cold cache when live
    // fetching is off or fetch fails.
    std::string fetch_through(const std::string& provider, const std::string& key,
                              const std::function<std::string()>& fetch);

    bool allow_live() const { return allow_live_; }
    const std::filesystem::path& dir() const { return dir_; }

    // Record keys whose stored digest or filename no longer match.
    std::vector<std::string> verify() const;
    // Remove records fetched strictly before the cutoff; returns count removed.
    std::size_t gc_older_than(std::int64_t cutoff_epoch_seconds);
    // Order-insensitive digest over all records, for run manifests.
    std::string digest() const;

private:
    std::filesystem::path record_path(const std::string& provider,
                                      const std::string& key) const;

    std::filesystem::path dir_;
    bool allow_live_;
    mutable std::mutex mutex_;
};

}  // namespace mrcd
