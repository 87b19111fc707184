#include "gammascan/clients/cache.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "gammascan/errors.hpp"

namespace gammascan::clients {

using nlohmann::json;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorClass::Other, "SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string crc32_hex(const std::string& data) {
    const auto crc = ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
                             static_cast<uInt>(data.size()));
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

std::string sanitize(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
        out.push_back(ok ? c : '_');
    }
    return out;
}

json entry_to_json(const CacheKeyParts& parts, const CacheValue& value, std::int64_t created_at,
                   const std::string& snapshot) {
    json e = {
        {"key", cache_key(parts)},
        {"kind", parts.kind},
        {"provider", parts.provider},
        {"model_id", parts.model_id},
        {"temperature", parts.temperature},
        {"input", parts.input},
        {"created_at", created_at},
        {"model_snapshot", snapshot},
    };
    if (value.kind == CacheValue::Kind::Text) {
        e["value_kind"] = "text";
        e["text"] = value.text;
        e["truncated"] = value.truncated;
    } else {
        e["value_kind"] = "vector";
        e["vector"] = value.vector;
    }
    return e;
}

}  // namespace

std::string cache_key(const CacheKeyParts& parts) {
    const json material =
        json::array({parts.kind, parts.provider, parts.model_id, parts.temperature, parts.input});
    return sha256_hex(material.dump());
}

CacheStore::CacheStore(std::filesystem::path dir, util::Clock clock)
    : dir_(std::move(dir)), clock_(std::move(clock)) {
    std::filesystem::create_directories(dir_);
    load();
}

std::string CacheStore::log_name_for(const CacheKeyParts& parts) const {
    return sanitize(parts.kind) + "__" + sanitize(parts.provider) + "__" +
           sanitize(parts.model_id) + ".log";
}

void CacheStore::load() {
    for (const auto& de : std::filesystem::directory_iterator(dir_)) {
        if (de.is_regular_file() && de.path().extension() == ".log") {
            load_log(de.path());
        }
    }
}

void CacheStore::load_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreCorrupt("cannot open cache log " + path.string());
    const std::string log_name = path.filename().string();

    std::uint64_t good_end = 0;
    std::string line;
    for (;;) {
        const std::uint64_t record_start = static_cast<std::uint64_t>(in.tellg());
        if (!std::getline(in, line)) break;  // clean EOF
        if (line.size() != 8 || line.find_first_not_of("0123456789abcdef") != std::string::npos) {
            // A partial length prefix at the tail is crash debris; anything
            // before the tail is real corruption.
            if (in.peek() == EOF) break;
            throw StoreCorrupt("malformed record length in " + path.string() + " at offset " +
                               std::to_string(record_start));
        }
        const std::size_t len = static_cast<std::size_t>(std::stoul(line, nullptr, 16));
        std::string payload(len, '\0');
        in.read(payload.data(), static_cast<std::streamsize>(len));
        if (static_cast<std::size_t>(in.gcount()) != len) break;  // truncated tail
        int trailer = in.get();
        if (trailer == EOF) break;  // newline lost in a crash; drop the record
        if (trailer != '\n') {
            throw StoreCorrupt("missing record terminator in " + path.string() + " at offset " +
                               std::to_string(record_start));
        }

        json record;
        try {
            record = json::parse(payload);
        } catch (const json::exception&) {
            throw StoreCorrupt("unparseable record in " + path.string() + " at offset " +
                               std::to_string(record_start));
        }
        const json& e = record.at("entry");
        if (record.value("crc32", "") != crc32_hex(e.dump())) {
            throw StoreCorrupt("checksum mismatch in " + path.string() + " at offset " +
                               std::to_string(record_start));
        }

        Entry entry;
        entry.parts.kind = e.at("kind").get<std::string>();
        entry.parts.provider = e.at("provider").get<std::string>();
        entry.parts.model_id = e.at("model_id").get<std::string>();
        entry.parts.temperature = e.at("temperature").get<double>();
        entry.parts.input = e.at("input").get<std::string>();
        entry.created_at = e.at("created_at").get<std::int64_t>();
        entry.model_snapshot = e.value("model_snapshot", "");
        if (e.at("value_kind").get<std::string>() == "text") {
            entry.value.kind = CacheValue::Kind::Text;
            entry.value.text = e.at("text").get<std::string>();
            entry.value.truncated = e.value("truncated", false);
        } else {
            entry.value.kind = CacheValue::Kind::Vector;
            entry.value.vector = e.at("vector").get<std::vector<double>>();
        }
        entry.log_name = log_name;
        entry.payload_bytes = 9 + len + 1;  // prefix line + payload + newline

        const std::string key = e.at("key").get<std::string>();
        by_log_[log_name].push_back(key);
        entries_[key] = std::move(entry);
        good_end = static_cast<std::uint64_t>(in.tellg());
    }

    // Trim crash debris so future appends start on a record boundary.
    in.close();
    if (std::filesystem::file_size(path) != good_end) {
        std::filesystem::resize_file(path, good_end);
    }
}

std::optional<CacheValue> CacheStore::get(const CacheKeyParts& parts) const {
    const std::string key = cache_key(parts);
    std::shared_lock lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
}

void CacheStore::put(const CacheKeyParts& parts, const CacheValue& value,
                     const std::string& model_snapshot) {
    const std::string key = cache_key(parts);
    const json e = entry_to_json(parts, value, clock_(), model_snapshot);
    const json record = {{"crc32", crc32_hex(e.dump())}, {"entry", e}};
    const std::string payload = record.dump();

    std::unique_lock lock(mu_);
    if (entries_.count(key)) return;  // identical request, nothing new to learn

    const std::string log_name = log_name_for(parts);
    {
        std::ofstream out(dir_ / log_name, std::ios::binary | std::ios::app);
        char prefix[10];
        std::snprintf(prefix, sizeof prefix, "%08zx\n", payload.size());
        out << prefix << payload << '\n';
        if (!out) throw Error(ErrorClass::Other, "failed to append to cache log " + log_name);
    }

    Entry entry;
    entry.parts = parts;
    entry.value = value;
    entry.created_at = e.at("created_at").get<std::int64_t>();
    entry.model_snapshot = model_snapshot;
    entry.log_name = log_name;
    entry.payload_bytes = 9 + payload.size() + 1;
    by_log_[log_name].push_back(key);
    entries_[key] = std::move(entry);
    write_index(log_name);
}

void CacheStore::write_index(const std::string& log_name) const {
    json keys = json::array();
    auto it = by_log_.find(log_name);
    if (it != by_log_.end()) {
        for (const auto& k : it->second) keys.push_back(k);
    }
    const json idx = {
        {"log_size", static_cast<std::uint64_t>(std::filesystem::file_size(dir_ / log_name))},
        {"keys", keys},
    };
    std::ofstream out(dir_ / (log_name + ".idx"), std::ios::binary | std::ios::trunc);
    out << idx.dump() << '\n';
}

std::size_t CacheStore::size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
}

GcReport CacheStore::gc(const GcPolicy& policy) {
    std::unique_lock lock(mu_);
    GcReport report;
    report.entries_before = entries_.size();
    for (const auto& [key, entry] : entries_) report.bytes_before += entry.payload_bytes;

    std::vector<std::string> evict;
    if (policy.max_age_seconds) {
        const std::int64_t cutoff = clock_() - *policy.max_age_seconds;
        for (const auto& [key, entry] : entries_) {
            if (entry.created_at < cutoff) evict.push_back(key);
        }
    }
    if (policy.max_bytes) {
        std::uint64_t total = report.bytes_before;
        for (const auto& key : evict) total -= entries_.at(key).payload_bytes;

        // Oldest first; ties broken by key for a stable eviction order.
        std::vector<std::string> survivors;
        for (const auto& [key, entry] : entries_) {
            if (std::find(evict.begin(), evict.end(), key) == evict.end()) {
                survivors.push_back(key);
            }
        }
        std::sort(survivors.begin(), survivors.end(), [&](const auto& a, const auto& b) {
            const auto& ea = entries_.at(a);
            const auto& eb = entries_.at(b);
            return ea.created_at != eb.created_at ? ea.created_at < eb.created_at : a < b;
        });
        for (const auto& key : survivors) {
            if (total <= *policy.max_bytes) break;
            total -= entries_.at(key).payload_bytes;
            evict.push_back(key);
        }
    }

    // Rewrite only logs that actually lose entries; a no-op gc leaves
    // every file byte-identical.
    std::sort(evict.begin(), evict.end());
    evict.erase(std::unique(evict.begin(), evict.end()), evict.end());
    std::map<std::string, bool> log_dirty;
    for (const auto& key : evict) log_dirty[entries_.at(key).log_name] = true;

    for (const auto& [log_name, dirty] : log_dirty) {
        (void)dirty;
        const auto tmp = dir_ / (log_name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            for (const auto& key : by_log_[log_name]) {
                if (std::binary_search(evict.begin(), evict.end(), key)) continue;
                const Entry& entry = entries_.at(key);
                const json e = entry_to_json(entry.parts, entry.value, entry.created_at,
                                             entry.model_snapshot);
                const json record = {{"crc32", crc32_hex(e.dump())}, {"entry", e}};
                const std::string payload = record.dump();
                char prefix[10];
                std::snprintf(prefix, sizeof prefix, "%08zx\n", payload.size());
                out << prefix << payload << '\n';
            }
        }
        std::filesystem::rename(tmp, dir_ / log_name);
    }

    for (const auto& key : evict) {
        auto& keys = by_log_[entries_.at(key).log_name];
        keys.erase(std::remove(keys.begin(), keys.end(), key), keys.end());
        entries_.erase(key);
        report.evicted_keys.push_back(key);
    }
    for (const auto& [log_name, dirty] : log_dirty) {
        (void)dirty;
        write_index(log_name);
    }

    report.entries_after = entries_.size();
    for (const auto& [key, entry] : entries_) report.bytes_after += entry.payload_bytes;
    return report;
}

CachedCompletionClient::CachedCompletionClient(CompletionClient& inner, CacheStore& store)
    : inner_(inner), store_(store) {}

CompletionResult CachedCompletionClient::complete(const std::string& prompt) {
    if (prompt.empty()) throw EmptyInput("prompt must be nonempty");
    const CacheKeyParts parts{"completion", inner_.provider(), inner_.model_id(),
                              CompletionClient::temperature(), prompt};
    if (auto hit = store_.get(parts)) {
        return CompletionResult{hit->text, hit->truncated};
    }

    const std::string key = cache_key(parts);
    std::shared_future<CompletionResult> fut;
    {
        std::unique_lock lock(mu_);
        auto it = in_flight_.find(key);
        if (it != in_flight_.end()) {
            fut = it->second;
        } else {
            std::promise<CompletionResult> promise;
            fut = promise.get_future().share();
            in_flight_.emplace(key, fut);
            lock.unlock();
            try {
                CompletionResult result = inner_.complete(prompt);
                store_.put(parts,
                           CacheValue{CacheValue::Kind::Text, result.text, result.truncated, {}});
                promise.set_value(result);
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
            lock.lock();
            in_flight_.erase(key);
        }
    }
    return fut.get();
}

CachedEmbeddingClient::CachedEmbeddingClient(EmbeddingClient& inner, CacheStore& store)
    : inner_(inner), store_(store) {}

vec::EmbeddingVector CachedEmbeddingClient::embed(const std::string& text) {
    if (text.empty()) throw EmptyInput("text to embed must be nonempty");
    const CacheKeyParts parts{"embedding", inner_.provider(), inner_.model_id(), 0.0, text};
    if (auto hit = store_.get(parts)) {
        return vec::EmbeddingVector(hit->vector);
    }

    const std::string key = cache_key(parts);
    std::shared_future<std::vector<double>> fut;
    {
        std::unique_lock lock(mu_);
        auto it = in_flight_.find(key);
        if (it != in_flight_.end()) {
            fut = it->second;
        } else {
            std::promise<std::vector<double>> promise;
            fut = promise.get_future().share();
            in_flight_.emplace(key, fut);
            lock.unlock();
            try {
                vec::EmbeddingVector v = inner_.embed(text);
                store_.put(parts, CacheValue{CacheValue::Kind::Vector, "", false, v.data()});
                promise.set_value(v.data());
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
            lock.lock();
            in_flight_.erase(key);
        }
    }
    return vec::EmbeddingVector(fut.get());
}

}  // namespace gammascan::clients
