#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialogen/kb.hpp"
#include "dialogen/retrieval.hpp"

namespace dialogen {

/// User acts come first, then system acts. The numeric order is relied on by
/// the policy's one-hot features and its output layer.
enum class ActType {
    // user
    ProvideQuery,
    ElicitInfo,
    ElicitSuggestion,
    RejectSuggestion,
    Accept,
    EndUser,
    // system
    Suggest,
    Info,
    ListOptions,
    ElicitQuery,
    EndSystem,
};

enum class Side { user, system };

inline constexpr std::size_t kUserActCount = 6;
inline constexpr std::size_t kSystemActCount = 5;
inline constexpr std::size_t kActTypeCount = kUserActCount + kSystemActCount;

inline constexpr std::array<ActType, kUserActCount> kUserActs{
    ActType::ProvideQuery, ActType::ElicitInfo, ActType::ElicitSuggestion,
    ActType::RejectSuggestion, ActType::Accept, ActType::EndUser};

inline constexpr std::array<ActType, kSystemActCount> kSystemActs{
    ActType::Suggest, ActType::Info, ActType::ListOptions, ActType::ElicitQuery,
    ActType::EndSystem};

constexpr Side side_of(ActType t) {
    return static_cast<std::size_t>(t) < kUserActCount ? Side::user : Side::system;
}
constexpr bool is_user_act(ActType t) { return side_of(t) == Side::user; }
constexpr bool is_system_act(ActType t) { return side_of(t) == Side::system; }
constexpr bool is_terminal_act(ActType t) {
    return t == ActType::Accept || t == ActType::EndUser || t == ActType::EndSystem;
}

/// Position among user acts (0..5) or system acts (0..4).
constexpr std::size_t side_index(ActType t) {
    const auto i = static_cast<std::size_t>(t);
    return i < kUserActCount ? i : i - kUserActCount;
}

std::string_view to_string(ActType t);
std::optional<ActType> parse_act_type(std::string_view text);
std::string_view to_string(Side s);

struct DialogueAct {
    ActType type = ActType::ProvideQuery;
    std::vector<std::string> keywords;      // ProvideQuery only
    std::optional<std::string> symbol;      // single-symbol acts
    std::vector<std::string> symbols;       // ListOptions only

    static DialogueAct provide_query(std::vector<std::string> keywords);
    static DialogueAct with_symbol(ActType type, std::string symbol);
    static DialogueAct list_options(std::vector<std::string> symbols);
    static DialogueAct bare(ActType type);

    /// Every symbol name the act references, in slot order.
    std::vector<std::string> referenced_symbols() const;
    /// Empty when the argument slots fit the act type; otherwise a reason.
    std::optional<std::string> slot_error() const;

    bool operator==(const DialogueAct&) const = default;
};

/// Acts taking exactly one symbol argument.
constexpr bool takes_symbol(ActType t) {
    return t == ActType::Suggest || t == ActType::Info || t == ActType::ElicitInfo ||
           t == ActType::RejectSuggestion || t == ActType::Accept;
}

std::string describe(const DialogueAct& act);

inline constexpr std::string_view kGeneratorVersion = "dialogen-planner/1";

struct ScriptMetadata {
    std::string generator{kGeneratorVersion};
    bool turn_cap_reached = false;

    bool operator==(const ScriptMetadata&) const = default;
};

struct Script {
    std::vector<DialogueAct> acts;
    std::string goal_symbol;
    bool success = false;
    std::uint64_t seed = 0;
    ScriptMetadata metadata;

    bool operator==(const Script&) const = default;
};

nlohmann::ordered_json to_json(const DialogueAct& act);
DialogueAct act_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Script& script);
Script script_from_json(const nlohmann::json& j);

/// One script per line.
void write_scripts(std::ostream& out, const std::vector<Script>& scripts);
std::vector<Script> read_scripts(std::istream& in);

inline constexpr std::size_t kDefaultShortlistSize = 10;
inline constexpr std::size_t kDefaultTurnCap = 20;

struct DialogueState {
    std::size_t turn = 0;  // completed user/system act pairs
    std::vector<std::string> query_keywords;
    RetrievalResult shortlist;
    std::set<std::string> suggested;
    std::set<std::string> rejected;
    std::set<std::string> informed;
    std::optional<DialogueAct> last_user;
    std::optional<DialogueAct> last_system;
    /// Latest single suggestion (Suggest, or the head of ListOptions).
    std::optional<std::string> last_suggestion;
    std::size_t acts_applied = 0;
    bool terminal = false;

    std::optional<ActType> last_user_act() const {
        return last_user ? std::optional(last_user->type) : std::nullopt;
    }
    std::optional<ActType> last_system_act() const {
        return last_system ? std::optional(last_system->type) : std::nullopt;
    }
    /// Whose act is next. Users open every dialogue.
    Side next_side() const { return acts_applied % 2 == 0 ? Side::user : Side::system; }

    bool operator==(const DialogueState&) const = default;
};

/// Pure transition. Throws DialogueError for terminal states, acts out of
/// alternation, malformed slots, and rejections of symbols never suggested.
DialogueState apply_act(const DialogueState& state, const DialogueAct& act,
                        const TfIdfIndex& index, std::size_t shortlist_k = kDefaultShortlistSize);

enum class ViolationKind { alternation, first_act, termination, grounding, slot_shape, length };

std::string_view to_string(ViolationKind k);

struct ScriptViolation {
    ViolationKind kind;
    std::optional<std::size_t> act_index;
    std::string message;
};

struct ScriptReport {
    std::vector<ScriptViolation> violations;

    bool ok() const noexcept { return violations.empty(); }
    std::size_t count(ViolationKind k) const;
};

ScriptReport validate_script(const Script& script, const KnowledgeBase& kb,
                             std::size_t turn_cap = kDefaultTurnCap);

} // namespace dialogen
