#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dialogen::cli {

enum class ValueType { integer, number, boolean, text };

/// One configurable setting. `flags` maps subcommand -> flag name; within a
/// subcommand every flag names exactly one key and vice versa.
struct OptionSpec {
    std::string key; // dotted config path, e.g. "train.steps"
    ValueType type;
    nlohmann::json default_value;
    std::string help;
    std::map<std::string, std::string> flags;
};

const std::vector<OptionSpec>& option_registry();
const std::vector<std::string>& subcommands();

/// Keys usable by `command`, in registry order.
std::vector<const OptionSpec*> options_for(std::string_view command);

/// Flat key -> value view of the effective configuration.
class Settings {
public:
    /// Registry defaults.
    Settings();

    /// Overlays a nested config document. Unknown keys and ill-typed values
    /// throw ConfigError. The "endpoints" object is kept as is.
    void merge_config(const nlohmann::json& doc, const std::string& origin);
    void set(const std::string& key, const nlohmann::json& value);

    const nlohmann::json& get(const std::string& key) const;
    long long integer(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    double number(const std::string& key) const;
    bool boolean(const std::string& key) const;
    std::string text(const std::string& key) const;

    const nlohmann::json& endpoints() const { return endpoints_; }
    /// Nested form of every setting plus the endpoints.
    nlohmann::ordered_json to_json() const;

private:
    std::map<std::string, nlohmann::json> values_;
    nlohmann::json endpoints_;
};

/// Parses a command-line value for `spec`; throws ConfigError.
nlohmann::json parse_value(const OptionSpec& spec, const std::string& raw);

/// Built-in endpoint table (teacher, student, stub).
nlohmann::json default_endpoints();

} // namespace dialogen::cli
