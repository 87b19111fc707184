#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <utility>
#include <vector>

#include "gammascan/clients/clients.hpp"

namespace gammascan::clients {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;        // 0 means the request never completed
    std::string body;
    std::string error;     // transport-level failure description
};

// Seam between the protocol clients and the network. Tests substitute a
// capturing transport; production uses cpp-httplib.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& path, const std::string& body,
                                   const Headers& headers) = 0;
};

class HttplibTransport : public HttpTransport {
public:
    explicit HttplibTransport(std::string base_url, int timeout_seconds = 120);
    HttpResponse post_json(const std::string& path, const std::string& body,
                           const Headers& headers) override;

private:
    std::string base_url_;     // scheme://host:port
    std::string path_prefix_;  // path component of the configured base URL
    int timeout_seconds_;
};

// Records every request and replies from a scripted queue (last entry
// repeats). The workhorse of the wire-fidelity and retry tests.
class CaptureTransport : public HttpTransport {
public:
    struct Request {
        std::string path;
        std::string body;
        Headers headers;
    };

    explicit CaptureTransport(std::vector<HttpResponse> script);

    HttpResponse post_json(const std::string& path, const std::string& body,
                           const Headers& headers) override;

    std::vector<Request> requests() const;
    long calls() const { return calls_.load(); }

private:
    mutable std::mutex mu_;
    std::vector<HttpResponse> script_;
    std::vector<Request> requests_;
    std::atomic<long> calls_{0};
};

// Simple token bucket; rps <= 0 disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second);
    void acquire();

private:
    std::mutex mu_;
    double rps_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

// Caps the number of simultaneous requests per client.
class InFlightGate {
public:
    explicit InFlightGate(int limit) : sem_(limit > 0 ? limit : 1) {}

    class Pass {
    public:
        explicit Pass(InFlightGate& gate) : gate_(&gate) { gate_->sem_.acquire(); }
        ~Pass() { gate_->sem_.release(); }
        Pass(const Pass&) = delete;
        Pass& operator=(const Pass&) = delete;

    private:
        InFlightGate* gate_;
    };

private:
    std::counting_semaphore<> sem_;
};

struct HttpClientOptions {
    int max_attempts = 3;           // bounded retries, then TransportError
    int backoff_initial_ms = 250;   // doubled per retry
    int backoff_max_ms = 4000;
    double requests_per_second = 0; // 0 = unlimited
    int max_in_flight = 16;
    std::string api_key;            // empty = no Authorization header
    std::function<void(int)> sleep_ms;  // injectable for tests
};

// OpenAI-compatible chat-completion endpoint: single user message,
// temperature pinned to 0, first choice taken. Prompts are embedded in
// JSON with standard \u escapes so control characters arrive intact.
class OpenAiCompletionClient : public CompletionClient {
public:
    OpenAiCompletionClient(std::shared_ptr<HttpTransport> transport, std::string provider,
                           std::string model, HttpClientOptions opts = {});

    CompletionResult complete(const std::string& prompt) override;
    std::string provider() const override { return provider_; }
    std::string model_id() const override { return model_; }

private:
    std::shared_ptr<HttpTransport> transport_;
    std::string provider_;
    std::string model_;
    HttpClientOptions opts_;
    std::shared_ptr<RateLimiter> limiter_;
    std::unique_ptr<InFlightGate> gate_;
};

class OpenAiEmbeddingClient : public EmbeddingClient {
public:
    OpenAiEmbeddingClient(std::shared_ptr<HttpTransport> transport, std::string provider,
                          std::string model, std::size_t dim, HttpClientOptions opts = {});

    vec::EmbeddingVector embed(const std::string& text) override;
    std::string provider() const override { return provider_; }
    std::string model_id() const override { return model_; }
    std::size_t dim() const override { return dim_; }

private:
    std::shared_ptr<HttpTransport> transport_;
    std::string provider_;
    std::string model_;
    std::size_t dim_;
    HttpClientOptions opts_;
    std::shared_ptr<RateLimiter> limiter_;
    std::unique_ptr<InFlightGate> gate_;
};

}  // namespace gammascan::clients
