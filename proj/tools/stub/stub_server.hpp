#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace dialogen::stub {

/// What the stub does for one request.
struct Reply {
    enum class Kind {
        realize,      // compliant dialogue
        leak,         // compliant except turn 0 names a symbol
        drop_keyword, // compliant except turn 0 omits its first keyword
        fenced,       // compliant, wrapped in prose and a code fence
        status,       // bare HTTP status with an error body
        content,      // 200 with `text` as the message content
        body,         // `status` with `text` as the raw response body
    };

    Kind kind = Kind::realize;
    int status = 200;
    std::string text;
    std::chrono::milliseconds delay{0}; // sleep before answering

    static Reply realize() { return {}; }
    static Reply leak(std::string symbol = {}) { return {Kind::leak, 200, std::move(symbol), {}}; }
    static Reply drop_keyword() { return {Kind::drop_keyword, 200, {}, {}}; }
    static Reply fenced() { return {Kind::fenced, 200, {}, {}}; }
    static Reply http_status(int code) { return {Kind::status, code, {}, {}}; }
    static Reply content(std::string text) { return {Kind::content, 200, std::move(text), {}}; }
    static Reply body(std::string raw, int code = 200) { return {Kind::body, code, std::move(raw), {}}; }
    Reply after(std::chrono::milliseconds d) const {
        auto r = *this;
        r.delay = d;
        return r;
    }
};

/// The script object ({"turns": [...], ...}) embedded in the last user message.
std::optional<nlohmann::json> extract_script(const nlohmann::json& messages);

/// One deterministic utterance per turn, rendered as the {role, text} array.
nlohmann::json realize_turns(const nlohmann::json& script);

struct Response {
    int status = 200;
    std::string body;
};

/// Request handling without sockets; the server delegates to this.
class Handler {
public:
    explicit Handler(std::string model = "stub-model") : model_(std::move(model)) {}

    void enqueue(Reply r);
    void set_default(Reply r);
    /// When set, requests must carry "Authorization: Bearer <key>".
    void require_key(std::string key);

    Response handle(const std::string& body, const std::string& authorization);

    std::size_t request_count() const;
    std::vector<nlohmann::json> requests() const;

private:
    Response complete(const Reply& r, const nlohmann::json& request);

    std::string model_;
    mutable std::mutex mu_;
    std::deque<Reply> queue_;
    Reply default_{};
    std::optional<std::string> key_;
    std::vector<nlohmann::json> requests_;
    std::size_t served_ = 0;
};

/// Chat-completions server on a background thread. POST {prefix}/chat/completions.
class Server {
public:
    explicit Server(std::string model = "stub-model");
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds (port 0 picks a free port) and starts serving. Returns the port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();

    /// Runs in the calling thread until stop().
    void serve(const std::string& host, int port);

    std::string base_url() const;
    Handler& handler() { return handler_; }

private:
    void install_routes();

    Handler handler_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string host_;
    int port_ = 0;
};

} // namespace dialogen::stub
