#include "dialogen/record.hpp"

#include <cstdio>

#include "dialogen/error.hpp"
#include "dialogen/rng.hpp"

namespace dialogen {

std::string_view to_string(Role r) { return r == Role::user ? "user" : "assistant"; }

std::optional<Role> parse_role(std::string_view text) {
    if (text == "user") {
        return Role::user;
    }
    if (text == "assistant") {
        return Role::assistant;
    }
    return std::nullopt;
}

nlohmann::ordered_json to_output_array(const RealizedDialogue& d) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : d.turns) {
        arr.push_back({{"role", std::string(to_string(t.role))}, {"text", t.text}});
    }
    return arr;
}

std::string_view to_string(Constraint c) {
    switch (c) {
    case Constraint::keyword_coverage: return "keyword_coverage";
    case Constraint::symbol_licensing: return "symbol_licensing";
    case Constraint::turn_structure: return "turn_structure";
    case Constraint::response_format: return "response_format";
    }
    return "unknown";
}

std::optional<Constraint> parse_constraint(std::string_view text) {
    for (auto c : {Constraint::keyword_coverage, Constraint::symbol_licensing,
                   Constraint::turn_structure, Constraint::response_format}) {
        if (to_string(c) == text) {
            return c;
        }
    }
    return std::nullopt;
}

std::string describe(const RealizationViolation& v) {
    std::string out(to_string(v.constraint));
    if (v.turn) {
        out += " (turn " + std::to_string(*v.turn) + ")";
    }
    return out + ": " + v.message;
}

nlohmann::ordered_json to_json(const RealizationViolation& v) {
    nlohmann::ordered_json j;
    j["constraint"] = std::string(to_string(v.constraint));
    j["turn"] = v.turn ? nlohmann::ordered_json(*v.turn) : nlohmann::ordered_json(nullptr);
    if (!v.subject.empty()) {
        j["subject"] = v.subject;
    }
    j["message"] = v.message;
    return j;
}

RealizationViolation violation_from_json(const nlohmann::json& j) {
    RealizationViolation v;
    const auto c = parse_constraint(j.at("constraint").get<std::string>());
    if (!c) {
        throw CorpusError("unknown constraint '" + j.at("constraint").get<std::string>() + "'");
    }
    v.constraint = *c;
    if (const auto it = j.find("turn"); it != j.end() && !it->is_null()) {
        v.turn = it->get<std::size_t>();
    }
    v.subject = j.value("subject", std::string{});
    v.message = j.at("message").get<std::string>();
    return v;
}

nlohmann::ordered_json to_json(const CorpusRecord& r) {
    nlohmann::ordered_json j;
    j["script"] = to_json(r.script);

    nlohmann::ordered_json d;
    d["model_id"] = r.dialogue.model_id;
    auto turns = nlohmann::ordered_json::array();
    for (const auto& t : r.dialogue.turns) {
        turns.push_back({{"role", std::string(to_string(t.role))},
                         {"text", t.text},
                         {"act_index", t.act_index}});
    }
    d["turns"] = std::move(turns);
    if (r.dialogue.usage) {
        d["usage"] = {{"prompt_tokens", r.dialogue.usage->prompt_tokens},
                      {"completion_tokens", r.dialogue.usage->completion_tokens},
                      {"total_tokens", r.dialogue.usage->total_tokens}};
    }
    j["dialogue"] = std::move(d);

    j["provenance"] = {{"model_id", r.provenance.model_id},
                       {"endpoint", r.provenance.endpoint},
                       {"pipeline_version", r.provenance.pipeline_version},
                       {"attempts", r.provenance.attempts},
                       {"trace_id", r.provenance.trace_id}};
    auto vs = nlohmann::ordered_json::array();
    for (const auto& v : r.violations) {
        vs.push_back(to_json(v));
    }
    j["violations"] = std::move(vs);
    return j;
}

CorpusRecord record_from_json(const nlohmann::json& j) {
    CorpusRecord r;
    try {
        r.script = script_from_json(j.at("script"));
        const auto& d = j.at("dialogue");
        r.dialogue.model_id = d.value("model_id", std::string{});
        for (const auto& t : d.at("turns")) {
            const auto role = parse_role(t.at("role").get<std::string>());
            if (!role) {
                throw CorpusError("unknown role '" + t.at("role").get<std::string>() + "'");
            }
            r.dialogue.turns.push_back(
                {*role, t.at("text").get<std::string>(), t.at("act_index").get<std::size_t>()});
        }
        if (const auto it = d.find("usage"); it != d.end()) {
            r.dialogue.usage = TokenUsage{it->at("prompt_tokens").get<std::size_t>(),
                                          it->at("completion_tokens").get<std::size_t>(),
                                          it->at("total_tokens").get<std::size_t>()};
        }
        const auto& p = j.at("provenance");
        r.provenance.model_id = p.at("model_id").get<std::string>();
        r.provenance.endpoint = p.at("endpoint").get<std::string>();
        r.provenance.pipeline_version = p.at("pipeline_version").get<std::string>();
        r.provenance.attempts = p.at("attempts").get<int>();
        r.provenance.trace_id = p.at("trace_id").get<std::string>();
        for (const auto& v : j.at("violations")) {
            r.violations.push_back(violation_from_json(v));
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorpusError(std::string("malformed corpus record: ") + e.what());
    }
    return r;
}

std::string trace_id_for(const Script& script, std::size_t position) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(derive_seed(script.seed, position)));
    return buf;
}

} // namespace dialogen
