#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialogen/chat_client.hpp"
#include "dialogen/dialogue.hpp"

namespace dialogen {

enum class Role { user, assistant };

std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view text);
constexpr Role role_of(ActType t) { return is_user_act(t) ? Role::user : Role::assistant; }

struct RealizedTurn {
    Role role = Role::user;
    std::string text;
    std::size_t act_index = 0;

    bool operator==(const RealizedTurn&) const = default;
};

/// Equality compares turns only; latency and usage describe the call, not
/// the content.
struct RealizedDialogue {
    std::vector<RealizedTurn> turns;
    std::string model_id;
    std::chrono::milliseconds latency{0};
    std::optional<TokenUsage> usage;

    bool operator==(const RealizedDialogue& o) const { return turns == o.turns; }
};

/// The array form the model is asked to return: [{"role", "text"}, ...].
nlohmann::ordered_json to_output_array(const RealizedDialogue& d);

enum class Constraint { keyword_coverage, symbol_licensing, turn_structure, response_format };

std::string_view to_string(Constraint c);
std::optional<Constraint> parse_constraint(std::string_view text);

struct RealizationViolation {
    Constraint constraint = Constraint::turn_structure;
    std::optional<std::size_t> turn;
    std::string subject; // the keyword or symbol involved, if any
    std::string message;

    bool operator==(const RealizationViolation&) const = default;
};

std::string describe(const RealizationViolation& v);

inline constexpr std::string_view kPipelineVersion = "dialogen/0.1.0";

/// Timestamps and latency are kept out of records so identical inputs give
/// byte-identical corpora; they go to the log and the export manifest.
struct Provenance {
    std::string model_id;
    std::string endpoint;
    std::string pipeline_version{kPipelineVersion};
    int attempts = 0;
    std::string trace_id;

    bool operator==(const Provenance&) const = default;
};

struct CorpusRecord {
    Script script;
    RealizedDialogue dialogue; // empty when no attempt produced a parsable response
    Provenance provenance;
    std::vector<RealizationViolation> violations; // non-empty: flagged record

    bool flagged() const noexcept { return !violations.empty(); }
    bool operator==(const CorpusRecord&) const = default;
};

nlohmann::ordered_json to_json(const RealizationViolation& v);
RealizationViolation violation_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const CorpusRecord& r);
CorpusRecord record_from_json(const nlohmann::json& j);

/// Deterministic per-script trace id.
std::string trace_id_for(const Script& script, std::size_t position);

} // namespace dialogen
