#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "gammascan/clients/clients.hpp"

namespace gammascan::clients {

// Deterministic offline backends. All of them are pure functions of their
// construction parameters and inputs, so full pipeline runs against mocks
// are bit-reproducible. Call counters let tests assert cache behavior.

// Returns the canned response whose key is the longest prefix of the
// prompt. Prefix matching makes a single fixture answer every perturbed
// variant of its base prompt.
class KeyedCompletionClient : public CompletionClient {
public:
    explicit KeyedCompletionClient(std::map<std::string, std::string> responses);

    CompletionResult complete(const std::string& prompt) override;
    std::string provider() const override { return "mock-keyed"; }
    std::string model_id() const override { return "keyed"; }

    long calls() const { return calls_.load(); }

private:
    std::map<std::string, std::string> responses_;
    std::atomic<long> calls_{0};
};

// Identity backend: the response is the prompt.
class EchoCompletionClient : public CompletionClient {
public:
    CompletionResult complete(const std::string& prompt) override;
    std::string provider() const override { return "mock-echo"; }
    std::string model_id() const override { return "echo"; }

    long calls() const { return calls_.load(); }

private:
    std::atomic<long> calls_{0};
};

// Arbitrary prompt -> text function; the function must be thread-safe.
class FnCompletionClient : public CompletionClient {
public:
    explicit FnCompletionClient(std::function<std::string(const std::string&)> fn,
                                std::string model = "fn");

    CompletionResult complete(const std::string& prompt) override;
    std::string provider() const override { return "mock-fn"; }
    std::string model_id() const override { return model_; }

    long calls() const { return calls_.load(); }

private:
    std::function<std::string(const std::string&)> fn_;
    std::string model_;
    std::atomic<long> calls_{0};
};

// Hashes the text into a seeded unit vector with i.i.d. gaussian
// components: direction is isotropic and content-sensitive, which is what
// the geometry tests need.
class HashEmbeddingClient : public EmbeddingClient {
public:
    HashEmbeddingClient(std::size_t dim, std::uint64_t seed);

    vec::EmbeddingVector embed(const std::string& text) override;
    std::string provider() const override { return "mock-hash"; }
    std::string model_id() const override;
    std::size_t dim() const override { return dim_; }

    long calls() const { return calls_.load(); }

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::atomic<long> calls_{0};
};

// Bucketed token counts: a crude semantic proxy where word order is
// ignored and shared vocabulary means a small angle.
class BagOfTokensEmbeddingClient : public EmbeddingClient {
public:
    explicit BagOfTokensEmbeddingClient(std::size_t dim);

    vec::EmbeddingVector embed(const std::string& text) override;
    std::string provider() const override { return "mock-bag"; }
    std::string model_id() const override;
    std::size_t dim() const override { return dim_; }

    long calls() const { return calls_.load(); }

private:
    std::size_t dim_;
    std::atomic<long> calls_{0};
};

// Test helper: maps exact texts to fixed vectors.
class MapEmbeddingClient : public EmbeddingClient {
public:
    MapEmbeddingClient(std::size_t dim, std::map<std::string, std::vector<double>> table);

    vec::EmbeddingVector embed(const std::string& text) override;
    std::string provider() const override { return "mock-map"; }
    std::string model_id() const override { return "map"; }
    std::size_t dim() const override { return dim_; }

private:
    std::size_t dim_;
    std::map<std::string, std::vector<double>> table_;
};

}  // namespace gammascan::clients
