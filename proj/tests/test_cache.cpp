#include "gammascan/clients/cache.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>
#include <vector>

#include "doctest.h"
#include "gammascan/clients/mock.hpp"
#include "gammascan/errors.hpp"

using namespace gammascan;
using clients::CacheKeyParts;
using clients::CacheStore;
using clients::CacheValue;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("gammascan_cache_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

CacheKeyParts completion_key(const std::string& input) {
    return CacheKeyParts{"completion", "mock", "model-a", 0.0, input};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cache keys are pure functions of the parts") {
    const auto a = clients::cache_key(completion_key("input"));
    CHECK(a == clients::cache_key(completion_key("input")));
    CHECK(a.size() == 64);
    CHECK(a != clients::cache_key(completion_key("other")));
    CHECK(a != clients::cache_key({"embedding", "mock", "model-a", 0.0, "input"}));
    CHECK(a != clients::cache_key({"completion", "mock", "model-b", 0.0, "input"}));
}

TEST_CASE("text and vector values round-trip exactly across reopen") {
    TempDir dir;
    const std::vector<double> v = {0.1, -2.5e-17, 3.0, 1.0 / 3.0};
    {
        CacheStore store(dir.path);
        store.put(completion_key("q1"), CacheValue{CacheValue::Kind::Text, "answer \x01 text", true, {}});
        store.put({"embedding", "mock", "emb", 0.0, "t"},
                  CacheValue{CacheValue::Kind::Vector, "", false, v});
        CHECK(store.size() == 2);
    }
    CacheStore reopened(dir.path);
    CHECK(reopened.size() == 2);
    const auto text = reopened.get(completion_key("q1"));
    REQUIRE(text.has_value());
    CHECK(text->text == "answer \x01 text");
    CHECK(text->truncated);
    const auto vec = reopened.get({"embedding", "mock", "emb", 0.0, "t"});
    REQUIRE(vec.has_value());
    CHECK(vec->vector == v);  // bitwise
    CHECK_FALSE(reopened.get(completion_key("missing")).has_value());
}

TEST_CASE("cached clients serve repeats without touching the inner client") {
    TempDir dir;
    CacheStore store(dir.path);
    clients::EchoCompletionClient echo;
    clients::CachedCompletionClient cached(echo, store);

    CHECK(cached.complete("hello").text == "hello");
    CHECK(echo.calls() == 1);
    CHECK(cached.complete("hello").text == "hello");
    CHECK(echo.calls() == 1);  // served from cache
    CHECK(cached.complete("other").text == "other");
    CHECK(echo.calls() == 2);

    clients::HashEmbeddingClient hash(8, 1);
    clients::CachedEmbeddingClient cached_embed(hash, store);
    const auto v1 = cached_embed.embed("text");
    const auto v2 = cached_embed.embed("text");
    CHECK(hash.calls() == 1);
    CHECK(v1 == v2);
}

TEST_CASE("a fresh store instance serves previous runs from disk") {
    TempDir dir;
    clients::EchoCompletionClient echo;
    {
        CacheStore store(dir.path);
        clients::CachedCompletionClient cached(echo, store);
        cached.complete("persisted");
    }
    CHECK(echo.calls() == 1);
    CacheStore store(dir.path);
    clients::CachedCompletionClient cached(echo, store);
    CHECK(cached.complete("persisted").text == "persisted");
    CHECK(echo.calls() == 1);  // no new inner call
}

TEST_CASE("in-flight deduplication: one fetch per key under concurrent demand") {
    TempDir dir;
    CacheStore store(dir.path);

    std::atomic<int> slow_calls{0};
    clients::FnCompletionClient slow([&](const std::string& p) {
        slow_calls.fetch_add(1);
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        return "r:" + p;
    });
    clients::CachedCompletionClient cached(slow, store);

    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&] {
            if (cached.complete("same prompt").text == "r:same prompt") ok.fetch_add(1);
        });
    }
    for (auto& t : threads) t.join();
    CHECK(ok == 8);
    CHECK(slow_calls == 1);
}

TEST_CASE("gc by age evicts exactly the stale entries") {
    TempDir dir;
    std::int64_t now = 1000;
    auto clock = [&now] { return now; };
    CacheStore store(dir.path, clock);

    store.put(completion_key("old1"), CacheValue{CacheValue::Kind::Text, "a", false, {}});
    store.put(completion_key("old2"), CacheValue{CacheValue::Kind::Text, "b", false, {}});
    now = 5000;
    store.put(completion_key("new1"), CacheValue{CacheValue::Kind::Text, "c", false, {}});

    clients::GcPolicy policy;
    policy.max_age_seconds = 2000;  // cutoff at 3000: the two old entries go
    const auto report = store.gc(policy);
    CHECK(report.entries_before == 3);
    CHECK(report.entries_after == 1);
    REQUIRE(report.evicted_keys.size() == 2);
    std::vector<std::string> expected = {clients::cache_key(completion_key("old1")),
                                         clients::cache_key(completion_key("old2"))};
    std::sort(expected.begin(), expected.end());
    CHECK(report.evicted_keys == expected);

    CHECK_FALSE(store.get(completion_key("old1")).has_value());
    CHECK(store.get(completion_key("new1")).has_value());

    // Survivors are intact after reopen.
    CacheStore reopened(dir.path, clock);
    CHECK(reopened.size() == 1);
    CHECK(reopened.get(completion_key("new1"))->text == "c");
}

TEST_CASE("a policy retaining everything leaves files byte-identical") {
    TempDir dir;
    std::int64_t now = 1000;
    CacheStore store(dir.path, [&now] { return now; });
    store.put(completion_key("k1"), CacheValue{CacheValue::Kind::Text, "v1", false, {}});
    store.put(completion_key("k2"), CacheValue{CacheValue::Kind::Text, "v2", false, {}});

    std::map<fs::path, std::string> before;
    for (const auto& de : fs::directory_iterator(dir.path)) {
        before[de.path()] = read_file(de.path());
    }

    clients::GcPolicy policy;
    policy.max_age_seconds = 1 << 30;
    policy.max_bytes = 1ull << 40;
    const auto report = store.gc(policy);
    CHECK(report.evicted_keys.empty());

    for (const auto& de : fs::directory_iterator(dir.path)) {
        CHECK(before.at(de.path()) == read_file(de.path()));
    }
}

TEST_CASE("gc on an empty store evicts nothing") {
    TempDir dir;
    CacheStore store(dir.path);
    clients::GcPolicy policy;
    policy.max_age_seconds = 0;
    const auto report = store.gc(policy);
    CHECK(report.evicted_keys.empty());
    CHECK(report.entries_before == 0);
}

TEST_CASE("gc by size drops oldest entries first") {
    TempDir dir;
    std::int64_t now = 0;
    CacheStore store(dir.path, [&now] { return now; });
    for (int i = 0; i < 5; ++i) {
        now = i;
        store.put(completion_key("k" + std::to_string(i)),
                  CacheValue{CacheValue::Kind::Text, std::string(100, 'x'), false, {}});
    }
    clients::GcPolicy policy;
    policy.max_bytes = 3 * 400ull;  // roughly three entries worth
    const auto report = store.gc(policy);
    CHECK(report.bytes_after <= *policy.max_bytes);
    CHECK_FALSE(store.get(completion_key("k0")).has_value());  // oldest gone
    CHECK(store.get(completion_key("k4")).has_value());        // newest kept
}

TEST_CASE("corrupted records are detected; truncated tails are repaired") {
    TempDir dir;
    fs::path log_path;
    {
        CacheStore store(dir.path);
        store.put(completion_key("q1"), CacheValue{CacheValue::Kind::Text, "answer-one", false, {}});
        store.put(completion_key("q2"), CacheValue{CacheValue::Kind::Text, "answer-two", false, {}});
        for (const auto& de : fs::directory_iterator(dir.path)) {
            if (de.path().extension() == ".log") log_path = de.path();
        }
    }
    REQUIRE(!log_path.empty());

    SUBCASE("bit flip inside a record payload raises StoreCorrupt") {
        std::string data = read_file(log_path);
        const auto pos = data.find("answer-one");
        REQUIRE(pos != std::string::npos);
        data[pos] = 'X';
        std::ofstream(log_path, std::ios::binary | std::ios::trunc) << data;
        CHECK_THROWS_AS(CacheStore(dir.path), StoreCorrupt);
    }

    SUBCASE("a partially written final record is dropped and trimmed") {
        std::string data = read_file(log_path);
        data.resize(data.size() - 25);  // chop into the last record
        std::ofstream(log_path, std::ios::binary | std::ios::trunc) << data;
        CacheStore store(dir.path);
        CHECK(store.size() == 1);
        CHECK(store.get(completion_key("q1")).has_value());
        CHECK_FALSE(store.get(completion_key("q2")).has_value());
        // The repaired log reloads cleanly.
        CacheStore again(dir.path);
        CHECK(again.size() == 1);
    }
}

TEST_CASE("one log file per kind/provider/model plus an index") {
    TempDir dir;
    CacheStore store(dir.path);
    store.put({"completion", "p1", "m1", 0.0, "a"}, CacheValue{CacheValue::Kind::Text, "x", false, {}});
    store.put({"completion", "p1", "m2", 0.0, "a"}, CacheValue{CacheValue::Kind::Text, "y", false, {}});
    store.put({"embedding", "p1", "m1", 0.0, "a"},
              CacheValue{CacheValue::Kind::Vector, "", false, {1.0}});

    std::size_t logs = 0, idx = 0;
    for (const auto& de : fs::directory_iterator(dir.path)) {
        if (de.path().extension() == ".log") ++logs;
        if (de.path().extension() == ".idx") ++idx;
    }
    CHECK(logs == 3);
    CHECK(idx == 3);
}
