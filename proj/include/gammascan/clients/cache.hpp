#pragma once

#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "gammascan/clients/clients.hpp"
#include "gammascan/util/clock.hpp"

namespace gammascan::clients {

struct CacheKeyParts {
    std::string kind;      // "completion" or "embedding"
    std::string provider;
    std::string model_id;
    double temperature = 0.0;
    std::string input;     // exact request bytes
};

// SHA-256 over the canonical serialization of the parts; identical
// requests always map to identical keys.
std::string cache_key(const CacheKeyParts& parts);

struct CacheValue {
    enum class Kind { Text, Vector };
    Kind kind = Kind::Text;
    std::string text;
    bool truncated = false;
    std::vector<double> vector;
};

struct GcPolicy {
    std::optional<std::int64_t> max_age_seconds;
    std::optional<std::uint64_t> max_bytes;
};

struct GcReport {
    std::vector<std::string> evicted_keys;
    std::size_t entries_before = 0;
    std::size_t entries_after = 0;
    std::uint64_t bytes_before = 0;
    std::uint64_t bytes_after = 0;
};

// Persistent response cache: one append-only log per (kind, provider,
// model), length-prefixed JSON records with a per-entry CRC, plus a side
// index for warm starts. The log is the source of truth; a stale or
// missing index is rebuilt from it. A truncated final record (crash mid
// append) is trimmed on open; a checksum mismatch on a complete record
// raises StoreCorrupt.
class CacheStore {
public:
    explicit CacheStore(std::filesystem::path dir, util::Clock clock = util::system_clock());

    std::optional<CacheValue> get(const CacheKeyParts& parts) const;
    void put(const CacheKeyParts& parts, const CacheValue& value,
             const std::string& model_snapshot = "");

    GcReport gc(const GcPolicy& policy);

    std::size_t size() const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    struct Entry {
        CacheKeyParts parts;
        CacheValue value;
        std::int64_t created_at = 0;
        std::string model_snapshot;
        std::string log_name;
        std::uint64_t payload_bytes = 0;
    };

    void load();
    void load_log(const std::filesystem::path& path);
    std::string log_name_for(const CacheKeyParts& parts) const;
    void write_index(const std::string& log_name) const;

    std::filesystem::path dir_;
    util::Clock clock_;
    mutable std::shared_mutex mu_;
    std::map<std::string, Entry> entries_;                       // key -> entry
    std::map<std::string, std::vector<std::string>> by_log_;     // log name -> keys
};

// Cache-through wrappers. On a miss the inner client is consulted exactly
// once per key even under concurrent demand (in-flight deduplication).
class CachedCompletionClient : public CompletionClient {
public:
    CachedCompletionClient(CompletionClient& inner, CacheStore& store);

    CompletionResult complete(const std::string& prompt) override;
    std::string provider() const override { return inner_.provider(); }
    std::string model_id() const override { return inner_.model_id(); }

private:
    CompletionClient& inner_;
    CacheStore& store_;
    std::mutex mu_;
    std::map<std::string, std::shared_future<CompletionResult>> in_flight_;
};

class CachedEmbeddingClient : public EmbeddingClient {
public:
    CachedEmbeddingClient(EmbeddingClient& inner, CacheStore& store);

    vec::EmbeddingVector embed(const std::string& text) override;
    std::string provider() const override { return inner_.provider(); }
    std::string model_id() const override { return inner_.model_id(); }
    std::size_t dim() const override { return inner_.dim(); }

private:
    EmbeddingClient& inner_;
    CacheStore& store_;
    std::mutex mu_;
    std::map<std::string, std::shared_future<std::vector<double>>> in_flight_;
};

}  // namespace gammascan::clients
