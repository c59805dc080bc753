#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "ragfaith/util.hpp"

namespace ragfaith {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;

    std::chrono::milliseconds backoff_for(int attempt) const;
};

/// One line of the append-only call ledger.
struct LedgerEntry {
    std::string template_id;
    std::string cache_key_hash;
    std::size_t prompt_chars = 0;
    std::string reply;
    std::string parse_status;
    /// "provider" for a live call, "cache" for a replay.
    std::string source;
};

/// Thread-safe JSON-lines appender. A default-constructed ledger only counts.
class CallLedger {
public:
    CallLedger() = default;
    explicit CallLedger(const std::filesystem::path& path);

    void append(const LedgerEntry& entry);

    std::size_t provider_calls() const noexcept { return provider_calls_.load(); }
    std::size_t cache_replays() const noexcept { return cache_replays_.load(); }

private:
    std::mutex mu_;
    std::ofstream out_;
    std::atomic<std::size_t> provider_calls_{0};
    std::atomic<std::size_t> cache_replays_{0};
};

/// Content-addressed reply store: `<dir>/<hh>/<hash>.json`. With an empty
/// directory the cache lives in memory only. Concurrent writers of the same
/// key store identical values, so last-writer-wins is harmless.
class ResponseCache {
public:
    ResponseCache() = default;
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key_hash);
    void put(const std::string& key_hash, const json& key, const std::string& value);

    std::size_t hits() const noexcept { return hits_.load(); }
    std::size_t misses() const noexcept { return misses_.load(); }

private:
    std::filesystem::path path_for(const std::string& key_hash) const;

    std::filesystem::path dir_;
    std::shared_mutex mu_;
    std::map<std::string, std::string> memory_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

/// Hash of the canonical (sorted-key) JSON dump of `key`.
std::string cache_key_hash(const json& key);

}  // namespace ragfaith
