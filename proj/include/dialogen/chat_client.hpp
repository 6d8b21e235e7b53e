#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dialogen {

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

/// A chat-completions endpoint. The API key is never stored here, only the
/// name of the environment variable holding it.
struct EndpointConfig {
    std::string name;     // label recorded in provenance, e.g. "teacher"
    std::string base_url; // e.g. "https://api.example.com/v1"; requests go to {base_url}/chat/completions
    std::string model_id;
    std::string api_key_env; // empty: send no Authorization header
    double temperature = 0.7;
    std::size_t max_tokens = 4096;
    std::chrono::milliseconds timeout{120'000};
    std::size_t max_retries = 3;

    void validate() const;
};

EndpointConfig endpoint_from_json(const std::string& name, const nlohmann::json& j);
nlohmann::ordered_json to_json(const EndpointConfig& e);

struct TokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    std::size_t total_tokens = 0;

    bool operator==(const TokenUsage&) const = default;
};

/// Exponential backoff: delay before retry k (0-based) is
/// min(max_delay, base * factor^k * (1 + jitter * u)) with u in [0, 1).
struct RetryPolicy {
    std::chrono::milliseconds base{1000};
    double factor = 2.0;
    double jitter = 0.25;
    std::chrono::milliseconds max_delay{60'000};

    std::chrono::milliseconds delay(std::size_t retry, double u) const;
};

struct HttpRequest {
    std::string origin; // scheme://host[:port]
    std::string path;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
    std::chrono::milliseconds timeout{0};
};

struct HttpResult {
    enum class Failure { none, timeout, connection, other };

    int status = 0;
    std::string body;
    Failure failure = Failure::none;
    std::string error; // transport error description
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResult post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport; supports http:// and https:// origins.
std::shared_ptr<HttpTransport> make_default_transport();

struct CallOptions {
    RetryPolicy retry{};
    std::function<void(std::chrono::milliseconds)> sleep;   // default: this_thread::sleep_for
    std::function<double()> jitter;                          // default: thread-local generator
    std::shared_ptr<HttpTransport> transport;                // default: make_default_transport()
};

struct ChatCompletion {
    std::string content;
    std::string model;
    std::optional<TokenUsage> usage;
    int attempts = 0;
    std::chrono::milliseconds latency{0};
    std::vector<std::chrono::milliseconds> backoff; // delays slept before each retry
};

struct SplitUrl {
    std::string origin;
    std::string path_prefix;
};

/// "https://host:8443/v1/" -> {"https://host:8443", "/v1"}
SplitUrl split_url(const std::string& url);

std::string chat_request_body(std::span<const ChatMessage> messages, const EndpointConfig& config);

/// Extracts choices[0].message.content; throws EndpointError(envelope).
ChatCompletion parse_chat_envelope(const std::string& body);

/// One POST per attempt. Retries timeouts, connection failures, 429 and 5xx
/// up to config.max_retries; 401/403 fail at once.
ChatCompletion call_endpoint(std::span<const ChatMessage> messages, const EndpointConfig& config,
                             const CallOptions& options = {});

} // namespace dialogen
