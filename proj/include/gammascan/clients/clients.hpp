#pragma once

#include <string>

#include "gammascan/vecmath/vecmath.hpp"

namespace gammascan::clients {

struct CompletionResult {
    std::string text;
    bool truncated = false;  // provider reported a length-limited response
};

// Black-box string -> string completion at temperature 0. Implementations
// must be safe for concurrent calls and must pass the prompt through
// byte-for-byte: control characters are part of the measurement.
class CompletionClient {
public:
    virtual ~CompletionClient() = default;

    virtual CompletionResult complete(const std::string& prompt) = 0;

    virtual std::string provider() const = 0;
    virtual std::string model_id() const = 0;

    // Measurements are only meaningful for a deterministic model.
    static constexpr double temperature() { return 0.0; }
};

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;

    virtual vec::EmbeddingVector embed(const std::string& text) = 0;

    virtual std::string provider() const = 0;
    virtual std::string model_id() const = 0;
    virtual std::size_t dim() const = 0;
};

}  // namespace gammascan::clients
