#include "options.hpp"

#include <algorithm>
#include <cmath>

#include "dialogen/error.hpp"

namespace dialogen::cli {

namespace {

using J = nlohmann::json;

const std::vector<std::string> kTrainLike{"train", "pipeline"};
const std::vector<std::string> kSimLike{"train", "plan", "pipeline"};

std::map<std::string, std::string> same_flag(const std::vector<std::string>& commands, const std::string& flag) {
    std::map<std::string, std::string> out;
    for (const auto& c : commands) {
        out[c] = flag;
    }
    return out;
}

std::vector<OptionSpec> build_registry() {
    const std::vector<std::string> all{"ingest", "index", "train", "plan", "realize",
                                       "export", "stats", "eval", "pipeline"};
    std::vector<OptionSpec> r;
    auto add = [&](std::string key, ValueType type, J def, std::string help,
                   std::map<std::string, std::string> flags) {
        r.push_back({std::move(key), type, std::move(def), std::move(help), std::move(flags)});
    };

    add("paths.workdir", ValueType::text, "work", "Directory holding every artifact", same_flag(all, "--workdir"));
    add("paths.log", ValueType::text, "", "JSON-lines log file (default: <workdir>/logs.jsonl)",
        same_flag(all, "--log"));
    add("paths.kb", ValueType::text, "data/allegro_sample.jsonl", "API knowledge base (JSON lines)",
        {{"ingest", "kb"}, {"pipeline", "--kb"}});
    add("paths.policy", ValueType::text, "", "Policy file (default: <workdir>/policy.json)",
        same_flag({"train", "plan"}, "--policy"));
    add("paths.scripts", ValueType::text, "", "Script batch (default: <workdir>/scripts.jsonl)",
        same_flag({"plan", "realize"}, "--scripts"));
    add("paths.corpus", ValueType::text, "", "Corpus records (default: <workdir>/corpus.jsonl)",
        same_flag({"realize", "export", "stats"}, "--corpus"));
    add("paths.export", ValueType::text, "", "Export file (default: <workdir>/<format>.jsonl)",
        {{"export", "--out"}});
    add("paths.prompt", ValueType::text, "prompts/realizer.txt", "Realizer prompt template",
        same_flag({"realize", "pipeline"}, "--prompt"));

    add("index.query", ValueType::text, "", "Keywords to look up after building the index",
        {{"index", "--query"}});
    add("index.top_k", ValueType::integer, 10, "Results shown for --query", {{"index", "--top-k"}});

    add("train.steps", ValueType::integer, 100000, "Self-play steps (system turns)", same_flag(kTrainLike, "--steps"));
    add("train.seed", ValueType::integer, 11, "Training seed", {{"train", "--seed"}, {"pipeline", "--train-seed"}});
    add("train.alpha", ValueType::number, 0.01, "Learning rate", same_flag(kTrainLike, "--alpha"));
    add("train.gamma", ValueType::number, 0.95, "Discount factor", same_flag(kTrainLike, "--gamma"));
    add("train.epsilon_start", ValueType::number, 1.0, "Initial exploration rate",
        same_flag(kTrainLike, "--epsilon-start"));
    add("train.epsilon_end", ValueType::number, 0.05, "Final exploration rate", same_flag(kTrainLike, "--epsilon-end"));
    add("train.epsilon_decay_steps", ValueType::integer, 0, "Linear decay length (0: half the steps)",
        same_flag(kTrainLike, "--epsilon-decay-steps"));
    add("train.hidden", ValueType::integer, 32, "Hidden units (0: linear Q-function)", same_flag(kTrainLike, "--hidden"));
    add("train.init_scale", ValueType::number, 0.1, "Initial weights drawn from U[-s, s]",
        same_flag(kTrainLike, "--init-scale"));
    add("train.eval_episodes", ValueType::integer, 500, "Greedy evaluation episodes after training",
        same_flag(kTrainLike, "--eval-episodes"));
    add("reward.turn_penalty", ValueType::number, -1.0, "Reward per system turn", same_flag(kTrainLike, "--turn-penalty"));
    add("reward.success_bonus", ValueType::number, 20.0, "Reward when the user accepts the goal",
        same_flag(kTrainLike, "--success-bonus"));
    add("reward.failure_penalty", ValueType::number, -20.0, "Reward on failure", same_flag(kTrainLike, "--failure-penalty"));

    add("simulator.p_elicit_info", ValueType::number, 0.5, "User asks for details before accepting",
        same_flag(kSimLike, "--p-elicit-info"));
    add("simulator.p_reformulate", ValueType::number, 0.5, "User reformulates after a rejection",
        same_flag(kSimLike, "--p-reformulate"));
    add("simulator.p_noise_keyword", ValueType::number, 0.2, "Per-keyword noise probability",
        same_flag(kSimLike, "--p-noise-keyword"));
    add("simulator.keyword_count_min", ValueType::integer, 2, "Fewest query keywords",
        same_flag(kSimLike, "--keyword-count-min"));
    add("simulator.keyword_count_max", ValueType::integer, 5, "Most query keywords",
        same_flag(kSimLike, "--keyword-count-max"));
    add("simulator.patience", ValueType::integer, 3, "Rejections tolerated", same_flag(kSimLike, "--patience"));
    add("dialogue.turn_cap", ValueType::integer, 20, "Maximum act pairs per dialogue", same_flag(kSimLike, "--turn-cap"));
    add("dialogue.shortlist_k", ValueType::integer, 10, "Retrieval shortlist size", same_flag(kSimLike, "--shortlist-k"));

    add("plan.n", ValueType::integer, 250, "Scripts to plan", same_flag({"plan", "pipeline"}, "--n"));
    add("plan.seed", ValueType::integer, 1, "Base seed of the script batch", {{"plan", "--seed"}, {"pipeline", "--plan-seed"}});
    add("plan.phase2_seed", ValueType::integer, 2, "Base seed used by pipeline phase 2",
        {{"pipeline", "--phase2-seed"}});
    add("plan.epsilon", ValueType::number, 0.05, "Residual exploration while planning",
        same_flag({"plan", "pipeline"}, "--epsilon"));
    add("plan.threads", ValueType::integer, 1, "Planner worker threads", same_flag({"plan", "pipeline"}, "--threads"));

    add("realize.endpoint", ValueType::text, "", "Endpoint name under endpoints.* (default: teacher; phase 2: student)",
        same_flag({"realize", "pipeline"}, "--endpoint"));
    add("realize.concurrency", ValueType::integer, 4, "Realizations in flight",
        same_flag({"realize", "pipeline"}, "--concurrency"));
    add("realize.max_regen", ValueType::integer, 2, "Regenerations after a failed validation",
        same_flag({"realize", "pipeline"}, "--max-regen"));
    add("realize.strict", ValueType::boolean, false, "Require the response to be exactly one JSON array",
        same_flag({"realize", "pipeline"}, "--strict"));

    add("export.format", ValueType::text, "chat", "chat | script-paired", {{"export", "--format"}});
    add("export.include_flagged", ValueType::boolean, false, "Export records that failed validation",
        same_flag({"export", "pipeline"}, "--include-flagged"));

    add("stats.report", ValueType::text, "", "Also write the statistics JSON here", {{"stats", "--report"}});

    add("eval.candidates", ValueType::text, "", "Candidate corpus", {{"eval", "--candidates"}});
    add("eval.references", ValueType::text, "", "Reference corpus", {{"eval", "--references"}});
    add("eval.report", ValueType::text, "", "Also write the comparison JSON here", {{"eval", "--report"}});

    add("pipeline.phase", ValueType::integer, 1, "1: teacher bootstrap, 2: student generation",
        {{"pipeline", "--phase"}});
    return r;
}

bool type_ok(ValueType t, const J& v) {
    switch (t) {
    case ValueType::integer: return v.is_number_integer();
    case ValueType::number: return v.is_number();
    case ValueType::boolean: return v.is_boolean();
    case ValueType::text: return v.is_string();
    }
    return false;
}

std::string_view type_name(ValueType t) {
    switch (t) {
    case ValueType::integer: return "integer";
    case ValueType::number: return "number";
    case ValueType::boolean: return "boolean";
    case ValueType::text: return "string";
    }
    return "value";
}

const OptionSpec* find_spec(const std::string& key) {
    const auto& reg = option_registry();
    const auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& s) { return s.key == key; });
    return it == reg.end() ? nullptr : &*it;
}

void flatten(const J& doc, const std::string& prefix, std::vector<std::pair<std::string, J>>& out) {
    for (const auto& [k, v] : doc.items()) {
        const auto key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object()) {
            flatten(v, key, out);
        } else {
            out.emplace_back(key, v);
        }
    }
}

} // namespace

const std::vector<OptionSpec>& option_registry() {
    static const auto registry = build_registry();
    return registry;
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"ingest", "index", "train", "plan", "realize",
                                                "export", "stats", "eval", "pipeline"};
    return names;
}

std::vector<const OptionSpec*> options_for(std::string_view command) {
    std::vector<const OptionSpec*> out;
    for (const auto& s : option_registry()) {
        if (s.flags.contains(std::string(command))) {
            out.push_back(&s);
        }
    }
    return out;
}

nlohmann::json default_endpoints() {
    return {
        {"teacher",
         {{"base_url", "https://api.openai.com/v1"},
          {"model", "gpt-4o-mini"},
          {"api_key_env", "OPENAI_API_KEY"},
          {"temperature", 0.7},
          {"max_tokens", 4096},
          {"timeout_s", 120},
          {"max_retries", 3}}},
        {"student",
         {{"base_url", "http://127.0.0.1:8000/v1"},
          {"model", "student-3b-lora"},
          {"api_key_env", ""},
          {"temperature", 0.7},
          {"max_tokens", 4096},
          {"timeout_s", 300},
          {"max_retries", 3}}},
        {"stub",
         {{"base_url", "http://127.0.0.1:8089/v1"},
          {"model", "stub-model"},
          {"api_key_env", ""},
          {"temperature", 0.0},
          {"max_tokens", 4096},
          {"timeout_s", 10},
          {"max_retries", 3}}},
    };
}

Settings::Settings() : endpoints_(default_endpoints()) {
    for (const auto& s : option_registry()) {
        values_[s.key] = s.default_value;
    }
}

void Settings::merge_config(const nlohmann::json& doc, const std::string& origin) {
    if (!doc.is_object()) {
        throw ConfigError(origin + ": configuration must be a JSON object");
    }
    for (const auto& [k, v] : doc.items()) {
        if (k == "endpoints") {
            if (!v.is_object()) {
                throw ConfigError(origin + ": endpoints must be an object");
            }
            for (const auto& [name, e] : v.items()) {
                endpoints_[name] = e;
            }
        }
    }
    std::vector<std::pair<std::string, J>> flat;
    auto rest = doc;
    rest.erase("endpoints");
    flatten(rest, "", flat);
    for (const auto& [key, value] : flat) {
        if (find_spec(key) == nullptr) {
            throw ConfigError(origin + ": unknown config key '" + key + "'");
        }
        set(key, value);
    }
}

void Settings::set(const std::string& key, const nlohmann::json& value) {
    const auto* spec = find_spec(key);
    if (spec == nullptr) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    if (!type_ok(spec->type, value)) {
        throw ConfigError("config key '" + key + "' expects a " + std::string(type_name(spec->type)) + ", got " +
                          value.dump());
    }
    values_[key] = value;
}

const nlohmann::json& Settings::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("missing config key '" + key + "'");
    }
    return it->second;
}

long long Settings::integer(const std::string& key) const { return get(key).get<long long>(); }

std::size_t Settings::count(const std::string& key) const {
    const auto v = integer(key);
    if (v < 0) {
        throw ConfigError("config key '" + key + "' must be >= 0");
    }
    return static_cast<std::size_t>(v);
}

double Settings::number(const std::string& key) const { return get(key).get<double>(); }
bool Settings::boolean(const std::string& key) const { return get(key).get<bool>(); }
std::string Settings::text(const std::string& key) const { return get(key).get<std::string>(); }

nlohmann::ordered_json Settings::to_json() const {
    nlohmann::ordered_json out;
    for (const auto& s : option_registry()) {
        const auto dot = s.key.find('.');
        out[s.key.substr(0, dot)][s.key.substr(dot + 1)] = values_.at(s.key);
    }
    out["endpoints"] = endpoints_;
    return out;
}

nlohmann::json parse_value(const OptionSpec& spec, const std::string& raw) {
    auto bad = [&] {
        return ConfigError("invalid " + std::string(type_name(spec.type)) + " '" + raw + "' for " + spec.key);
    };
    switch (spec.type) {
    case ValueType::text:
        return raw;
    case ValueType::integer: {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(raw, &used);
        } catch (const std::exception&) {
            throw bad();
        }
        if (used != raw.size()) {
            throw bad();
        }
        return v;
    }
    case ValueType::number: {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(raw, &used);
        } catch (const std::exception&) {
            throw bad();
        }
        if (used != raw.size() || !std::isfinite(v)) {
            throw bad();
        }
        return v;
    }
    case ValueType::boolean:
        if (raw == "true" || raw == "1") {
            return true;
        }
        if (raw == "false" || raw == "0") {
            return false;
        }
        throw bad();
    }
    throw bad();
}

} // namespace dialogen::cli
