#include "dialogen/log.hpp"

#include <chrono>
#include <ctime>

#include "dialogen/error.hpp"

namespace dialogen {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

JsonLogger::JsonLogger(const std::filesystem::path& path) : file_(path, std::ios::app) {
    if (!file_) {
        throw ConfigError("cannot open log file " + path.string());
    }
    out_ = &file_;
}

void JsonLogger::log(const std::string& event, const nlohmann::ordered_json& fields) {
    if (out_ == nullptr) {
        return;
    }
    nlohmann::ordered_json line;
    line["ts"] = utc_timestamp();
    line["event"] = event;
    if (fields.is_object()) {
        for (const auto& [k, v] : fields.items()) {
            line[k] = v;
        }
    }
    const auto text = line.dump();
    std::lock_guard lock(mu_);
    *out_ << text << '\n';
    out_->flush();
}

} // namespace dialogen
