#include "dialogen/chat_client.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

using Reason = EndpointError::Reason;

class HttplibTransport final : public HttpTransport {
public:
    HttpResult post(const HttpRequest& request) override {
        httplib::Client client(request.origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
        client.set_connection_timeout(secs.count(), static_cast<time_t>(usecs.count()));
        client.set_read_timeout(secs.count(), static_cast<time_t>(usecs.count()));
        client.set_write_timeout(secs.count(), static_cast<time_t>(usecs.count()));

        httplib::Headers headers;
        for (const auto& [k, v] : request.headers) {
            headers.emplace(k, v);
        }
        HttpResult out;
        auto res = client.Post(request.path, headers, request.body, "application/json");
        if (!res) {
            const auto err = res.error();
            out.error = httplib::to_string(err);
            switch (err) {
            case httplib::Error::Read:
            case httplib::Error::Write:
            case httplib::Error::ConnectionTimeout:
                out.failure = HttpResult::Failure::timeout;
                break;
            case httplib::Error::Connection:
                out.failure = HttpResult::Failure::connection;
                break;
            default:
                out.failure = HttpResult::Failure::other;
                break;
            }
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        return out;
    }
};

double default_jitter() {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

std::string snippet(const std::string& body) {
    constexpr std::size_t kMax = 300;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

} // namespace

void EndpointConfig::validate() const {
    if (base_url.empty()) {
        throw EndpointError(Reason::config, "endpoint '" + name + "' has no base_url");
    }
    if (!(temperature >= 0.0)) {
        throw EndpointError(Reason::config, "endpoint '" + name + "' temperature must be >= 0");
    }
    if (model_id.empty()) {
        throw EndpointError(Reason::config, "endpoint '" + name + "' has no model");
    }
}

EndpointConfig endpoint_from_json(const std::string& name, const nlohmann::json& j) {
    EndpointConfig e;
    e.name = name;
    try {
        e.base_url = j.at("base_url").get<std::string>();
        e.model_id = j.at("model").get<std::string>();
        e.api_key_env = j.value("api_key_env", std::string{});
        e.temperature = j.value("temperature", e.temperature);
        e.max_tokens = j.value("max_tokens", e.max_tokens);
        e.timeout = std::chrono::milliseconds(
            static_cast<long long>(j.value("timeout_s", 120.0) * 1000.0));
        e.max_retries = j.value("max_retries", e.max_retries);
    } catch (const nlohmann::json::exception& ex) {
        throw EndpointError(Reason::config,
                            "endpoint '" + name + "' is misconfigured: " + ex.what());
    }
    e.validate();
    return e;
}

nlohmann::ordered_json to_json(const EndpointConfig& e) {
    nlohmann::ordered_json j;
    j["base_url"] = e.base_url;
    j["model"] = e.model_id;
    j["api_key_env"] = e.api_key_env;
    j["temperature"] = e.temperature;
    j["max_tokens"] = e.max_tokens;
    j["timeout_s"] = static_cast<double>(e.timeout.count()) / 1000.0;
    j["max_retries"] = e.max_retries;
    return j;
}

std::chrono::milliseconds RetryPolicy::delay(std::size_t retry, double u) const {
    const double raw = static_cast<double>(base.count()) *
                       std::pow(factor, static_cast<double>(retry)) * (1.0 + jitter * u);
    const double capped = std::min(raw, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<long long>(std::llround(capped)));
}

std::shared_ptr<HttpTransport> make_default_transport() {
    return std::make_shared<HttplibTransport>();
}

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw EndpointError(Reason::config, "base_url '" + url + "' has no scheme");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw EndpointError(Reason::config, "unsupported scheme in '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) {
        out.path_prefix = url.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
            out.path_prefix.pop_back();
        }
    }
    if (out.origin.size() <= scheme_end + 3) {
        throw EndpointError(Reason::config, "base_url '" + url + "' has no host");
    }
    return out;
}

std::string chat_request_body(std::span<const ChatMessage> messages, const EndpointConfig& config) {
    nlohmann::ordered_json body;
    body["model"] = config.model_id;
    auto msgs = nlohmann::ordered_json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    body["messages"] = std::move(msgs);
    body["temperature"] = config.temperature;
    body["max_tokens"] = config.max_tokens;
    return body.dump();
}

ChatCompletion parse_chat_envelope(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw EndpointError(Reason::envelope, "response is not JSON: " + snippet(body));
    }
    ChatCompletion out;
    try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) {
            throw EndpointError(Reason::envelope, "choices[0].message.content is not a string");
        }
        out.content = content.get<std::string>();
        out.model = j.value("model", std::string{});
        if (auto it = j.find("usage"); it != j.end() && it->is_object()) {
            TokenUsage u;
            u.prompt_tokens = it->value("prompt_tokens", std::size_t{0});
            u.completion_tokens = it->value("completion_tokens", std::size_t{0});
            u.total_tokens = it->value("total_tokens", u.prompt_tokens + u.completion_tokens);
            out.usage = u;
        }
    } catch (const nlohmann::json::exception&) {
        throw EndpointError(Reason::envelope, "malformed chat completion envelope: " + snippet(body));
    }
    return out;
}

ChatCompletion call_endpoint(std::span<const ChatMessage> messages, const EndpointConfig& config,
                             const CallOptions& options) {
    config.validate();
    const auto url = split_url(config.base_url);

    HttpRequest request;
    request.origin = url.origin;
    request.path = url.path_prefix + "/chat/completions";
    request.body = chat_request_body(messages, config);
    request.timeout = config.timeout;
    if (!config.api_key_env.empty()) {
        const char* key = std::getenv(config.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw EndpointError(Reason::config, "environment variable " + config.api_key_env +
                                                    " (API key for endpoint '" + config.name +
                                                    "') is not set");
        }
        request.headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }

    auto transport = options.transport ? options.transport : make_default_transport();
    const auto sleep = options.sleep ? options.sleep : [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
    const auto jitter = options.jitter ? options.jitter : default_jitter;

    std::vector<std::chrono::milliseconds> backoff;
    const auto started = std::chrono::steady_clock::now();
    std::string last_problem;
    const std::size_t attempts_allowed = config.max_retries + 1;

    for (std::size_t attempt = 1; attempt <= attempts_allowed; ++attempt) {
        const auto result = transport->post(request);
        const int attempts = static_cast<int>(attempt);
        bool retry = false;

        if (result.failure != HttpResult::Failure::none) {
            last_problem = "transport error: " + result.error;
            retry = result.failure != HttpResult::Failure::other;
            if (!retry) {
                throw EndpointError(Reason::http, last_problem, attempts);
            }
        } else if (result.status == 401 || result.status == 403) {
            throw EndpointError(Reason::auth,
                                "endpoint '" + config.name + "' rejected the credentials (HTTP " +
                                    std::to_string(result.status) + ")",
                                attempts);
        } else if (retryable_status(result.status)) {
            last_problem = "HTTP " + std::to_string(result.status);
            retry = true;
        } else if (result.status < 200 || result.status > 299) {
            throw EndpointError(Reason::http,
                                "HTTP " + std::to_string(result.status) + ": " + snippet(result.body),
                                attempts);
        } else {
            auto completion = parse_chat_envelope(result.body);
            completion.attempts = attempts;
            completion.backoff = std::move(backoff);
            completion.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            return completion;
        }

        if (retry && attempt < attempts_allowed) {
            const auto d = options.retry.delay(attempt - 1, jitter());
            backoff.push_back(d);
            sleep(d);
        }
    }
    throw EndpointError(Reason::exhausted,
                        "endpoint '" + config.name + "' failed after " +
                            std::to_string(attempts_allowed) + " attempts (last: " + last_problem + ")",
                        static_cast<int>(attempts_allowed));
}

} // namespace dialogen
