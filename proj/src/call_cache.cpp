#include "ragfaith/call_cache.hpp"

#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "ragfaith/error.hpp"

namespace ragfaith {

namespace fs = std::filesystem;

std::chrono::milliseconds RetryPolicy::backoff_for(int attempt) const {
    const double scale = std::pow(multiplier, std::max(0, attempt - 1));
    return std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(initial_backoff.count()) * scale));
}

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() %
        1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0')
       << ms << 'Z';
    return ss.str();
}

}  // namespace

CallLedger::CallLedger(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_) {
        throw ConfigError("cannot open call ledger " + path.string());
    }
}

void CallLedger::append(const LedgerEntry& e) {
    if (e.source == "cache") {
        ++cache_replays_;
    } else {
        ++provider_calls_;
    }
    std::lock_guard lock(mu_);
    if (!out_.is_open()) {
        return;
    }
    json line = {{"timestamp", utc_timestamp()},   {"template_id", e.template_id},
                 {"cache_key_hash", e.cache_key_hash}, {"prompt_chars", e.prompt_chars},
                 {"reply", e.reply},                   {"parse_status", e.parse_status},
                 {"source", e.source}};
    out_ << line.dump() << '\n';
    out_.flush();
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) {
        fs::create_directories(dir_);
    }
}

fs::path ResponseCache::path_for(const std::string& key_hash) const {
    return dir_ / key_hash.substr(0, 2) / (key_hash + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key_hash) {
    {
        std::shared_lock lock(mu_);
        if (auto it = memory_.find(key_hash); it != memory_.end()) {
            ++hits_;
            return it->second;
        }
    }
    if (!dir_.empty()) {
        const auto p = path_for(key_hash);
        std::error_code ec;
        if (fs::exists(p, ec)) {
            try {
                auto entry = json::parse(read_file(p));
                auto value = entry.at("value").get<std::string>();
                std::unique_lock lock(mu_);
                memory_[key_hash] = value;
                ++hits_;
                return value;
            } catch (const std::exception&) {
                // A torn or foreign file counts as a miss and is overwritten later.
            }
        }
    }
    ++misses_;
    return std::nullopt;
}

void ResponseCache::put(const std::string& key_hash, const json& key, const std::string& value) {
    {
        std::unique_lock lock(mu_);
        memory_[key_hash] = value;
    }
    if (!dir_.empty()) {
        json entry = {{"key", key}, {"value", value}};
        write_file_atomic(path_for(key_hash), entry.dump());
    }
}

std::string cache_key_hash(const json& key) { return sha256_hex(key.dump()); }

}  // namespace ragfaith
