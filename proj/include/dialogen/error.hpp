#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace dialogen {

/// Base class for all pipeline errors. `kind()` is a stable machine-readable
/// tag surfaced by the CLI in its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class KbError : public Error {
public:
    // record is 1-based; 0 means the error is not tied to a record
    KbError(const std::string& message, std::size_t record = 0)
        : Error("kb", record == 0 ? message : "record " + std::to_string(record) + ": " + message),
          record_(record) {}

    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

class DialogueError : public Error {
public:
    explicit DialogueError(const std::string& message) : Error("dialogue", message) {}
};

class SimulatorError : public Error {
public:
    explicit SimulatorError(const std::string& message) : Error("simulator", message) {}
};

class PolicyError : public Error {
public:
    explicit PolicyError(const std::string& message) : Error("policy", message) {}
};

class PolicyFileError : public Error {
public:
    enum class Reason { version, corrupt, io };

    PolicyFileError(Reason reason, const std::string& message)
        : Error(reason == Reason::version ? "policy_version"
                : reason == Reason::corrupt ? "policy_corrupt"
                                            : "policy_io",
                message),
          reason_(reason) {}

    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

class TemplateError : public Error {
public:
    explicit TemplateError(const std::string& message) : Error("template", message) {}
};

class EndpointError : public Error {
public:
    enum class Reason { config, auth, http, exhausted, envelope };

    EndpointError(Reason reason, const std::string& message, int attempts = 0)
        : Error(reason_tag(reason), message), reason_(reason), attempts_(attempts) {}

    Reason reason() const noexcept { return reason_; }
    int attempts() const noexcept { return attempts_; }

private:
    static std::string reason_tag(Reason r) {
        switch (r) {
        case Reason::config: return "endpoint_config";
        case Reason::auth: return "endpoint_auth";
        case Reason::http: return "endpoint_http";
        case Reason::exhausted: return "endpoint_retries_exhausted";
        case Reason::envelope: return "endpoint_envelope";
        }
        return "endpoint";
    }

    Reason reason_;
    int attempts_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("parse", message) {}
};

class CorpusError : public Error {
public:
    explicit CorpusError(const std::string& message) : Error("corpus", message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config", message) {}
};

} // namespace dialogen
