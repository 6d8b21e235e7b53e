#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>

#include <json.hpp>

namespace dialogen {

/// UTC, second precision: 2026-01-31T12:00:00Z
std::string utc_timestamp();

/// Line-oriented JSON log. Each call writes one object with "ts" and "event"
/// first, followed by the given fields. Safe to share across threads.
class JsonLogger {
public:
    JsonLogger() = default; // discards everything
    explicit JsonLogger(std::ostream& out) : out_(&out) {}
    explicit JsonLogger(const std::filesystem::path& path);

    void log(const std::string& event, const nlohmann::ordered_json& fields = {});
    bool enabled() const noexcept { return out_ != nullptr; }

private:
    std::ofstream file_;
    std::ostream* out_ = nullptr;
    std::mutex mu_;
};

} // namespace dialogen
