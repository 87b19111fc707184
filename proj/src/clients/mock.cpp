#include "gammascan/clients/mock.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

#include "gammascan/errors.hpp"
#include "gammascan/util/rng.hpp"

namespace gammascan::clients {
namespace {

void require_nonempty_prompt(const std::string& prompt) {
    if (prompt.empty()) throw EmptyInput("prompt must be nonempty");
}

void require_nonempty_text(const std::string& text) {
    if (text.empty()) throw EmptyInput("text to embed must be nonempty");
}

CompletionResult checked(std::string text) {
    if (text.empty()) throw EmptyResponse("backend produced an empty response");
    return CompletionResult{std::move(text), false};
}

}  // namespace

KeyedCompletionClient::KeyedCompletionClient(std::map<std::string, std::string> responses)
    : responses_(std::move(responses)) {}

CompletionResult KeyedCompletionClient::complete(const std::string& prompt) {
    require_nonempty_prompt(prompt);
    calls_.fetch_add(1);
    const std::string* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [key, value] : responses_) {
        if (key.size() >= best_len && prompt.compare(0, key.size(), key) == 0) {
            best = &value;
            best_len = key.size();
        }
    }
    if (best == nullptr) {
        throw ProviderRefusal(404, "no canned response matches prompt");
    }
    return checked(*best);
}

CompletionResult EchoCompletionClient::complete(const std::string& prompt) {
    require_nonempty_prompt(prompt);
    calls_.fetch_add(1);
    return checked(prompt);
}

FnCompletionClient::FnCompletionClient(std::function<std::string(const std::string&)> fn,
                                       std::string model)
    : fn_(std::move(fn)), model_(std::move(model)) {}

CompletionResult FnCompletionClient::complete(const std::string& prompt) {
    require_nonempty_prompt(prompt);
    calls_.fetch_add(1);
    return checked(fn_(prompt));
}

HashEmbeddingClient::HashEmbeddingClient(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ConfigError("embedding dim must be >= 1");
}

std::string HashEmbeddingClient::model_id() const {
    return "hash-d" + std::to_string(dim_) + "-s" + std::to_string(seed_);
}

vec::EmbeddingVector HashEmbeddingClient::embed(const std::string& text) {
    require_nonempty_text(text);
    calls_.fetch_add(1);
    std::mt19937_64 rng(util::mix_seed(seed_, util::fnv1a64(text)));
    std::vector<double> v(dim_);
    // Box-Muller, fixed form so streams do not depend on the C++ library.
    for (std::size_t i = 0; i < dim_; i += 2) {
        const double u1 = util::uniform_unit(rng);
        const double u2 = util::uniform_unit(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        v[i] = r * std::cos(2.0 * std::numbers::pi * u2);
        if (i + 1 < dim_) v[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
    }
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    const double norm = std::sqrt(norm_sq);
    if (norm == 0.0) {
        v[0] = 1.0;  // measure-zero draw; keep the output a unit vector
    } else {
        for (double& x : v) x /= norm;
    }
    return vec::EmbeddingVector(std::move(v));
}

BagOfTokensEmbeddingClient::BagOfTokensEmbeddingClient(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("embedding dim must be >= 1");
}

std::string BagOfTokensEmbeddingClient::model_id() const {
    return "bag-d" + std::to_string(dim_);
}

vec::EmbeddingVector BagOfTokensEmbeddingClient::embed(const std::string& text) {
    require_nonempty_text(text);
    calls_.fetch_add(1);
    std::vector<double> v(dim_, 0.0);
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            v[util::fnv1a64(token) % dim_] += 1.0;
            token.clear();
        }
    };
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    flush();
    return vec::EmbeddingVector(std::move(v));
}

MapEmbeddingClient::MapEmbeddingClient(std::size_t dim,
                                       std::map<std::string, std::vector<double>> table)
    : dim_(dim), table_(std::move(table)) {}

vec::EmbeddingVector MapEmbeddingClient::embed(const std::string& text) {
    require_nonempty_text(text);
    auto it = table_.find(text);
    if (it == table_.end()) {
        throw ProviderRefusal(404, "no canned embedding for text");
    }
    if (it->second.size() != dim_) {
        throw DimensionMismatch("canned embedding has wrong dim");
    }
    return vec::EmbeddingVector(it->second);
}

}  // namespace gammascan::clients
