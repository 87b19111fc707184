#include "gammascan/clients/http.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "gammascan/errors.hpp"

namespace gammascan::clients {

using nlohmann::json;

HttplibTransport::HttplibTransport(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    // httplib clients take scheme://host:port; any path component of the
    // base URL becomes a prefix for request paths.
    const auto scheme_end = base_url_.find("://");
    const auto path_start =
        base_url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        path_prefix_ = base_url_.substr(path_start);
        base_url_.resize(path_start);
    }
}

HttpResponse HttplibTransport::post_json(const std::string& path, const std::string& body,
                                         const Headers& headers) {
    // A client per request keeps this safe under concurrent callers.
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(timeout_seconds_, 0);
    cli.set_read_timeout(timeout_seconds_, 0);
    cli.set_write_timeout(timeout_seconds_, 0);

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    auto res = cli.Post(path_prefix_ + path, h, body, "application/json");
    HttpResponse out;
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

CaptureTransport::CaptureTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}

HttpResponse CaptureTransport::post_json(const std::string& path, const std::string& body,
                                         const Headers& headers) {
    std::lock_guard lock(mu_);
    requests_.push_back({path, body, headers});
    calls_.fetch_add(1);
    if (script_.empty()) {
        return HttpResponse{0, "", "capture transport has no scripted response"};
    }
    HttpResponse res = script_.front();
    if (script_.size() > 1) script_.erase(script_.begin());
    return res;
}

std::vector<CaptureTransport::Request> CaptureTransport::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

RateLimiter::RateLimiter(double requests_per_second)
    : rps_(requests_per_second), tokens_(requests_per_second), last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (rps_ <= 0) return;
    for (;;) {
        double wait_s = 0;
        {
            std::lock_guard lock(mu_);
            const auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(rps_, tokens_ + rps_ * std::chrono::duration<double>(now - last_).count());
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait_s = (1.0 - tokens_) / rps_;
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    }
}

namespace {

Headers make_headers(const HttpClientOptions& opts) {
    Headers h;
    if (!opts.api_key.empty()) h.emplace_back("Authorization", "Bearer " + opts.api_key);
    return h;
}

void sleep_backoff(const HttpClientOptions& opts, int attempt) {
    const int ms = std::min(opts.backoff_max_ms, opts.backoff_initial_ms * (1 << attempt));
    if (opts.sleep_ms) {
        opts.sleep_ms(ms);
    } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
}

bool retryable_status(int status) {
    return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

// Shared retry loop: bounded attempts with exponential backoff on
// transport failures and retryable statuses; other non-2xx statuses are
// final and become ProviderRefusal.
json request_with_retries(HttpTransport& transport, RateLimiter& limiter,
                          const HttpClientOptions& opts, const std::string& path,
                          const std::string& body) {
    std::string last_error;
    const int attempts = std::max(1, opts.max_attempts);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) sleep_backoff(opts, attempt - 1);
        limiter.acquire();
        const HttpResponse res = transport.post_json(path, body, make_headers(opts));
        if (res.status == 0) {
            last_error = res.error.empty() ? "connection failed" : res.error;
            continue;
        }
        if (res.status >= 200 && res.status < 300) {
            try {
                return json::parse(res.body);
            } catch (const json::exception& e) {
                throw TransportError(std::string("provider returned unparseable JSON: ") + e.what());
            }
        }
        if (retryable_status(res.status)) {
            last_error = "HTTP " + std::to_string(res.status);
            continue;
        }
        throw ProviderRefusal(res.status, res.body);
    }
    throw TransportError("request failed after " + std::to_string(attempts) +
                         " attempts: " + last_error);
}

}  // namespace

OpenAiCompletionClient::OpenAiCompletionClient(std::shared_ptr<HttpTransport> transport,
                                               std::string provider, std::string model,
                                               HttpClientOptions opts)
    : transport_(std::move(transport)),
      provider_(std::move(provider)),
      model_(std::move(model)),
      opts_(std::move(opts)),
      limiter_(std::make_shared<RateLimiter>(opts_.requests_per_second)),
      gate_(std::make_unique<InFlightGate>(opts_.max_in_flight)) {}

CompletionResult OpenAiCompletionClient::complete(const std::string& prompt) {
    if (prompt.empty()) throw EmptyInput("prompt must be nonempty");
    InFlightGate::Pass pass(*gate_);

    // nlohmann emits \uNNNN escapes for control characters, so the exact
    // code points survive the wire inside valid JSON.
    const json payload = {
        {"model", model_},
        {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
        {"temperature", 0},
    };

    const json res =
        request_with_retries(*transport_, *limiter_, opts_, "/chat/completions", payload.dump());

    if (!res.contains("choices") || !res["choices"].is_array() || res["choices"].empty()) {
        throw TransportError("completion response has no choices");
    }
    const json& choice = res["choices"][0];
    const json& message = choice.value("message", json::object());
    if (!message.contains("content") || message["content"].is_null()) {
        throw EmptyResponse("completion response has no message content");
    }
    CompletionResult out;
    out.text = message["content"].get<std::string>();
    if (out.text.empty()) throw EmptyResponse("provider returned zero-length text");
    out.truncated = choice.value("finish_reason", "") == "length";
    return out;
}

OpenAiEmbeddingClient::OpenAiEmbeddingClient(std::shared_ptr<HttpTransport> transport,
                                             std::string provider, std::string model,
                                             std::size_t dim, HttpClientOptions opts)
    : transport_(std::move(transport)),
      provider_(std::move(provider)),
      model_(std::move(model)),
      dim_(dim),
      opts_(std::move(opts)),
      limiter_(std::make_shared<RateLimiter>(opts_.requests_per_second)),
      gate_(std::make_unique<InFlightGate>(opts_.max_in_flight)) {
    if (dim_ == 0) throw ConfigError("embedding dim must be >= 1");
}

vec::EmbeddingVector OpenAiEmbeddingClient::embed(const std::string& text) {
    if (text.empty()) throw EmptyInput("text to embed must be nonempty");
    InFlightGate::Pass pass(*gate_);

    const json payload = {{"model", model_}, {"input", text}};
    const json res =
        request_with_retries(*transport_, *limiter_, opts_, "/embeddings", payload.dump());

    if (!res.contains("data") || !res["data"].is_array() || res["data"].empty() ||
        !res["data"][0].contains("embedding")) {
        throw TransportError("embedding response has no data[0].embedding");
    }
    std::vector<double> values = res["data"][0]["embedding"].get<std::vector<double>>();
    if (values.size() != dim_) {
        throw DimensionMismatch("provider returned dim " + std::to_string(values.size()) +
                                ", expected " + std::to_string(dim_));
    }
    return vec::EmbeddingVector(std::move(values));
}

}  // namespace gammascan::clients
