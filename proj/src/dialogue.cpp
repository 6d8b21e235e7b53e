#include "dialogen/dialogue.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

constexpr std::array<std::string_view, kActTypeCount> kActNames{
    "ProvideQuery", "ElicitInfo", "ElicitSuggestion", "RejectSuggestion", "Accept", "EndUser",
    "Suggest",      "Info",       "ListOptions",      "ElicitQuery",      "EndSystem"};

} // namespace

std::string_view to_string(ActType t) { return kActNames[static_cast<std::size_t>(t)]; }

std::optional<ActType> parse_act_type(std::string_view text) {
    for (std::size_t i = 0; i < kActNames.size(); ++i) {
        if (kActNames[i] == text) {
            return static_cast<ActType>(i);
        }
    }
    return std::nullopt;
}

std::string_view to_string(Side s) { return s == Side::user ? "user" : "system"; }

DialogueAct DialogueAct::provide_query(std::vector<std::string> keywords) {
    DialogueAct a;
    a.type = ActType::ProvideQuery;
    a.keywords = std::move(keywords);
    return a;
}

DialogueAct DialogueAct::with_symbol(ActType type, std::string symbol) {
    DialogueAct a;
    a.type = type;
    a.symbol = std::move(symbol);
    return a;
}

DialogueAct DialogueAct::list_options(std::vector<std::string> symbols) {
    DialogueAct a;
    a.type = ActType::ListOptions;
    a.symbols = std::move(symbols);
    return a;
}

DialogueAct DialogueAct::bare(ActType type) {
    DialogueAct a;
    a.type = type;
    return a;
}

std::vector<std::string> DialogueAct::referenced_symbols() const {
    std::vector<std::string> out;
    if (symbol) {
        out.push_back(*symbol);
    }
    out.insert(out.end(), symbols.begin(), symbols.end());
    return out;
}

std::optional<std::string> DialogueAct::slot_error() const {
    const bool wants_keywords = type == ActType::ProvideQuery;
    const bool wants_symbol = takes_symbol(type);
    const bool wants_list = type == ActType::ListOptions;

    if (wants_keywords && keywords.empty()) {
        return "ProvideQuery needs at least one keyword";
    }
    if (!wants_keywords && !keywords.empty()) {
        return std::string(to_string(type)) + " takes no keywords";
    }
    if (wants_keywords &&
        std::any_of(keywords.begin(), keywords.end(), [](const auto& k) { return k.empty(); })) {
        return "empty keyword";
    }
    if (wants_symbol && (!symbol || symbol->empty())) {
        return std::string(to_string(type)) + " needs a symbol";
    }
    if (!wants_symbol && symbol) {
        return std::string(to_string(type)) + " takes no symbol";
    }
    if (wants_list && symbols.empty()) {
        return "ListOptions needs at least one symbol";
    }
    if (!wants_list && !symbols.empty()) {
        return std::string(to_string(type)) + " takes no symbol list";
    }
    if (wants_list) {
        auto sorted = symbols;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            return "ListOptions repeats a symbol";
        }
    }
    return std::nullopt;
}

std::string describe(const DialogueAct& act) {
    std::string out(to_string(act.type));
    out += '(';
    if (act.type == ActType::ProvideQuery) {
        out += '"';
        for (std::size_t i = 0; i < act.keywords.size(); ++i) {
            out += (i ? " " : "") + act.keywords[i];
        }
        out += '"';
    } else {
        auto refs = act.referenced_symbols();
        for (std::size_t i = 0; i < refs.size(); ++i) {
            out += (i ? ", " : "") + refs[i];
        }
    }
    out += ')';
    return out;
}

nlohmann::ordered_json to_json(const DialogueAct& act) {
    nlohmann::ordered_json j;
    j["type"] = std::string(to_string(act.type));
    if (!act.keywords.empty()) {
        j["keywords"] = act.keywords;
    }
    if (act.symbol) {
        j["symbol"] = *act.symbol;
    }
    if (!act.symbols.empty()) {
        j["symbols"] = act.symbols;
    }
    return j;
}

DialogueAct act_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ParseError("act must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "type" && key != "keywords" && key != "symbol" && key != "symbols") {
            throw ParseError("unknown act key '" + key + "'");
        }
    }
    DialogueAct act;
    try {
        const auto type_text = j.at("type").get<std::string>();
        auto type = parse_act_type(type_text);
        if (!type) {
            throw ParseError("unknown act type '" + type_text + "'");
        }
        act.type = *type;
        if (j.contains("keywords")) {
            act.keywords = j.at("keywords").get<std::vector<std::string>>();
        }
        if (j.contains("symbol")) {
            act.symbol = j.at("symbol").get<std::string>();
        }
        if (j.contains("symbols")) {
            act.symbols = j.at("symbols").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad act: ") + e.what());
    }
    return act;
}

nlohmann::ordered_json to_json(const Script& script) {
    nlohmann::ordered_json j;
    j["goal_symbol"] = script.goal_symbol;
    j["success"] = script.success;
    j["seed"] = script.seed;
    auto acts = nlohmann::ordered_json::array();
    for (const auto& a : script.acts) {
        acts.push_back(to_json(a));
    }
    j["acts"] = std::move(acts);
    j["metadata"] = {{"generator", script.metadata.generator},
                     {"turn_cap_reached", script.metadata.turn_cap_reached}};
    return j;
}

Script script_from_json(const nlohmann::json& j) {
    Script s;
    try {
        s.goal_symbol = j.at("goal_symbol").get<std::string>();
        s.success = j.at("success").get<bool>();
        s.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& a : j.at("acts")) {
            s.acts.push_back(act_from_json(a));
        }
        if (auto it = j.find("metadata"); it != j.end()) {
            s.metadata.generator = it->value("generator", std::string{});
            s.metadata.turn_cap_reached = it->value("turn_cap_reached", false);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad script: ") + e.what());
    }
    return s;
}

void write_scripts(std::ostream& out, const std::vector<Script>& scripts) {
    for (const auto& s : scripts) {
        out << to_json(s).dump() << '\n';
    }
}

std::vector<Script> read_scripts(std::istream& in) {
    std::vector<Script> scripts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            scripts.push_back(script_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scripts;
}

DialogueState apply_act(const DialogueState& state, const DialogueAct& act,
                        const TfIdfIndex& index, std::size_t shortlist_k) {
    if (state.terminal) {
        throw DialogueError("cannot apply " + describe(act) + " to a terminal state");
    }
    if (side_of(act.type) != state.next_side()) {
        throw DialogueError("out of alternation: " + describe(act) + " on the " +
                            std::string(to_string(state.next_side())) + "'s turn");
    }
    if (auto err = act.slot_error()) {
        throw DialogueError(*err);
    }

    DialogueState next = state;
    ++next.acts_applied;
    switch (act.type) {
    case ActType::ProvideQuery:
        next.query_keywords = act.keywords;
        next.shortlist = index.query(act.keywords, shortlist_k);
        break;
    case ActType::RejectSuggestion:
        if (!state.suggested.contains(*act.symbol)) {
            throw DialogueError("cannot reject " + *act.symbol + ": it was never suggested");
        }
        next.rejected.insert(*act.symbol);
        break;
    case ActType::Accept:
    case ActType::EndUser:
    case ActType::EndSystem:
        next.terminal = true;
        break;
    case ActType::Suggest:
        next.suggested.insert(*act.symbol);
        next.last_suggestion = *act.symbol;
        break;
    case ActType::ListOptions:
        next.suggested.insert(act.symbols.begin(), act.symbols.end());
        next.last_suggestion = act.symbols.front();
        break;
    case ActType::Info:
        next.informed.insert(*act.symbol);
        break;
    case ActType::ElicitInfo:
    case ActType::ElicitSuggestion:
    case ActType::ElicitQuery:
        break;
    }

    if (is_user_act(act.type)) {
        next.last_user = act;
    } else {
        next.last_system = act;
        ++next.turn;
    }
    return next;
}

std::string_view to_string(ViolationKind k) {
    switch (k) {
    case ViolationKind::alternation: return "alternation";
    case ViolationKind::first_act: return "first_act";
    case ViolationKind::termination: return "termination";
    case ViolationKind::grounding: return "grounding";
    case ViolationKind::slot_shape: return "slot_shape";
    case ViolationKind::length: return "length";
    }
    return "unknown";
}

std::size_t ScriptReport::count(ViolationKind k) const {
    return static_cast<std::size_t>(std::count_if(
        violations.begin(), violations.end(), [k](const auto& v) { return v.kind == k; }));
}

ScriptReport validate_script(const Script& script, const KnowledgeBase& kb,
                             std::size_t turn_cap) {
    ScriptReport report;
    auto add = [&](ViolationKind kind, std::optional<std::size_t> at, std::string msg) {
        report.violations.push_back({kind, at, std::move(msg)});
    };
    const auto& acts = script.acts;

    if (acts.empty()) {
        add(ViolationKind::first_act, std::nullopt, "script has no acts");
        return report;
    }
    if (acts.front().type != ActType::ProvideQuery) {
        add(ViolationKind::first_act, 0,
            "first act is " + std::string(to_string(acts.front().type)) + ", not ProvideQuery");
    }
    if (acts.size() > 2 * turn_cap) {
        add(ViolationKind::length, std::nullopt,
            std::to_string(acts.size()) + " acts exceed the cap of " +
                std::to_string(2 * turn_cap));
    }
    if (!kb.contains(script.goal_symbol)) {
        add(ViolationKind::grounding, std::nullopt,
            "goal symbol '" + script.goal_symbol + "' is not in the knowledge base");
    }

    for (std::size_t i = 0; i < acts.size(); ++i) {
        const auto& act = acts[i];
        const Side expected = i % 2 == 0 ? Side::user : Side::system;
        if (side_of(act.type) != expected) {
            add(ViolationKind::alternation, i,
                std::string(to_string(act.type)) + " where a " +
                    std::string(to_string(expected)) + " act was expected");
        }
        if (auto err = act.slot_error()) {
            add(ViolationKind::slot_shape, i, *err);
        }
        for (const auto& name : act.referenced_symbols()) {
            if (!kb.contains(name)) {
                add(ViolationKind::grounding, i, "act references unknown symbol '" + name + "'");
            }
        }
        if (is_terminal_act(act.type) && i + 1 != acts.size()) {
            add(ViolationKind::termination, i,
                std::string(to_string(act.type)) + " is followed by further acts");
        }
    }

    const auto& last = acts.back();
    if (!is_terminal_act(last.type)) {
        if (!script.metadata.turn_cap_reached) {
            add(ViolationKind::termination, acts.size() - 1,
                "script ends without a closing act and the turn cap is not flagged");
        } else if (acts.size() != 2 * turn_cap) {
            add(ViolationKind::termination, acts.size() - 1,
                "turn cap flagged but the script has " + std::to_string(acts.size()) + " acts");
        }
    }
    return report;
}

} // namespace dialogen
