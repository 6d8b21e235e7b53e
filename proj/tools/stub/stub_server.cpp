#include "stub_server.hpp"

#include <stdexcept>

#include <httplib.h>

namespace dialogen::stub {

namespace {

std::size_t object_end(const std::string& s, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
        } else if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (--depth == 0) {
                return i;
            }
        }
    }
    return std::string::npos;
}

std::string joined(const nlohmann::json& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) {
            out += i + 1 == items.size() ? " and " : ", ";
        }
        out += items[i].get<std::string>();
    }
    return out;
}

std::string description_of(const nlohmann::json& script, const std::string& symbol) {
    if (const auto api = script.find("api"); api != script.end()) {
        for (const auto& doc : *api) {
            if (doc.value("name", "") == symbol) {
                return doc.value("description", "");
            }
        }
    }
    return {};
}

std::string utterance(const nlohmann::json& script, const nlohmann::json& turn) {
    const auto act = turn.value("act", "");
    const auto sym = turn.value("symbol", "");
    if (act == "ProvideQuery") {
        return "I'm stuck on a task that involves " + joined(turn.value("keywords", nlohmann::json::array())) +
               ". Is there something in the library for that?";
    }
    if (act == "ElicitInfo") {
        return "Could you tell me more about " + sym + "?";
    }
    if (act == "ElicitSuggestion") {
        return "That isn't quite it. Can you suggest something else?";
    }
    if (act == "RejectSuggestion") {
        return "I don't think " + sym + " fits what I need.";
    }
    if (act == "Accept") {
        return "Great, " + sym + " is what I was looking for. Thanks!";
    }
    if (act == "EndUser") {
        return "Never mind, I'll look elsewhere. Thanks anyway.";
    }
    if (act == "Suggest") {
        return "You could try " + sym + ".";
    }
    if (act == "Info") {
        const auto desc = description_of(script, sym);
        return desc.empty() ? sym + " is part of the library's public interface." : sym + ": " + desc;
    }
    if (act == "ListOptions") {
        return "A few candidates: " + joined(turn.value("symbols", nlohmann::json::array())) + ".";
    }
    if (act == "ElicitQuery") {
        return "Could you describe what you are trying to do in a bit more detail?";
    }
    if (act == "EndSystem") {
        return "Sorry, I couldn't find anything that matches.";
    }
    return "...";
}

nlohmann::json envelope(const std::string& model, std::size_t id, const std::string& content,
                        std::size_t prompt_chars) {
    const auto completion_tokens = content.size() / 4 + 1;
    const auto prompt_tokens = prompt_chars / 4 + 1;
    return {{"id", "stub-" + std::to_string(id)},
            {"object", "chat.completion"},
            {"model", model},
            {"choices",
             {{{"index", 0},
               {"message", {{"role", "assistant"}, {"content", content}}},
               {"finish_reason", "stop"}}}},
            {"usage",
             {{"prompt_tokens", prompt_tokens},
              {"completion_tokens", completion_tokens},
              {"total_tokens", prompt_tokens + completion_tokens}}}};
}

std::string error_body(int status, const std::string& message) {
    return nlohmann::json{{"error", {{"code", status}, {"message", message}}}}.dump();
}

} // namespace

std::optional<nlohmann::json> extract_script(const nlohmann::json& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->value("role", "") != "user") {
            continue;
        }
        const auto content = it->value("content", "");
        for (auto pos = content.find('{'); pos != std::string::npos; pos = content.find('{', pos + 1)) {
            const auto end = object_end(content, pos);
            if (end == std::string::npos) {
                continue;
            }
            auto j = nlohmann::json::parse(content.substr(pos, end - pos + 1), nullptr, false);
            if (!j.is_discarded() && j.is_object() && j.contains("turns") && j["turns"].is_array()) {
                return j;
            }
        }
    }
    return std::nullopt;
}

nlohmann::json realize_turns(const nlohmann::json& script) {
    auto out = nlohmann::json::array();
    for (const auto& turn : script.at("turns")) {
        out.push_back({{"role", turn.value("role", "user")}, {"text", utterance(script, turn)}});
    }
    return out;
}

void Handler::enqueue(Reply r) {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(r));
}

void Handler::set_default(Reply r) {
    std::lock_guard lock(mu_);
    default_ = std::move(r);
}

void Handler::require_key(std::string key) {
    std::lock_guard lock(mu_);
    key_ = std::move(key);
}

std::size_t Handler::request_count() const {
    std::lock_guard lock(mu_);
    return served_;
}

std::vector<nlohmann::json> Handler::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

Response Handler::handle(const std::string& body, const std::string& authorization) {
    Reply reply;
    auto request = nlohmann::json::parse(body, nullptr, false);
    {
        std::lock_guard lock(mu_);
        ++served_;
        requests_.push_back(request.is_discarded() ? nlohmann::json(body) : request);
        if (key_ && authorization != "Bearer " + *key_) {
            return {401, error_body(401, "invalid api key")};
        }
        if (!queue_.empty()) {
            reply = queue_.front();
            queue_.pop_front();
        } else {
            reply = default_;
        }
    }
    if (reply.delay.count() > 0) {
        std::this_thread::sleep_for(reply.delay);
    }
    if (request.is_discarded() || !request.is_object() || !request.contains("model") ||
        !request.contains("messages") || !request["messages"].is_array()) {
        return {400, error_body(400, "expected {model, messages}")};
    }
    return complete(reply, request);
}

Response Handler::complete(const Reply& r, const nlohmann::json& request) {
    const auto prompt_chars = request["messages"].dump().size();
    const auto id = request_count();
    switch (r.kind) {
    case Reply::Kind::status:
        return {r.status, error_body(r.status, "stub status " + std::to_string(r.status))};
    case Reply::Kind::body:
        return {r.status, r.text};
    case Reply::Kind::content:
        return {200, envelope(model_, id, r.text, prompt_chars).dump()};
    default:
        break;
    }

    const auto script = extract_script(request["messages"]);
    if (!script) {
        return {200, envelope(model_, id, "I could not find a script in the prompt.", prompt_chars).dump()};
    }
    auto turns = realize_turns(*script);
    if (r.kind == Reply::Kind::leak && !turns.empty()) {
        auto symbol = r.text;
        for (const auto& t : (*script)["turns"]) {
            if (!symbol.empty()) {
                break;
            }
            if (t.contains("symbol")) {
                symbol = t["symbol"].get<std::string>();
            } else if (t.contains("symbols") && !t["symbols"].empty()) {
                symbol = t["symbols"][0].get<std::string>();
            }
        }
        if (!symbol.empty()) {
            turns[0]["text"] = turns[0]["text"].get<std::string>() + " Maybe " + symbol + " would work?";
        }
    }
    if (r.kind == Reply::Kind::drop_keyword && !turns.empty()) {
        const auto& t0 = (*script)["turns"][0];
        if (t0.value("act", "") == "ProvideQuery" && !t0.value("keywords", nlohmann::json::array()).empty()) {
            auto kws = t0["keywords"];
            kws.erase(kws.begin());
            turns[0]["text"] = kws.empty() ? std::string("I'm stuck on a task. Is there something for that?")
                                           : "I'm stuck on a task that involves " + joined(kws) +
                                                 ". Is there something in the library for that?";
        }
    }
    auto content = turns.dump();
    if (r.kind == Reply::Kind::fenced) {
        content = "Here is the dialogue you asked for:\n```json\n" + turns.dump(2) + "\n```\nLet me know if "
                  "you want changes.";
    }
    return {200, envelope(model_, id, content, prompt_chars).dump()};
}

Server::Server(std::string model) : handler_(std::move(model)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

Server::~Server() { stop(); }

void Server::install_routes() {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        const auto out = handler_.handle(req.body, req.get_header_value("Authorization"));
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };
    server_->Post(R"(/.*chat/completions)", route);
}

int Server::start(const std::string& host, int port) {
    host_ = host;
    port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) {
        throw std::runtime_error("stub server cannot bind " + host + ":" + std::to_string(port));
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void Server::serve(const std::string& host, int port) {
    host_ = host;
    port_ = port;
    if (!server_->listen(host, port)) {
        throw std::runtime_error("stub server cannot listen on " + host + ":" + std::to_string(port));
    }
}

void Server::stop() {
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::string Server::base_url() const { return "http://" + host_ + ":" + std::to_string(port_) + "/v1"; }

} // namespace dialogen::stub
