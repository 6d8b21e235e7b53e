#include "dialogen/realizer.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "dialogen/error.hpp"
#include "dialogen/retrieval.hpp"

namespace dialogen {

namespace {

bool word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowered(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

bool is_numeral(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

// End of the bracketed value opening at raw[start], or npos when unbalanced.
std::size_t matching_close(std::string_view raw, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        switch (c) {
        case '"': in_string = true; break;
        case '[': stack.push_back(']'); break;
        case '{': stack.push_back('}'); break;
        case ']':
        case '}':
            if (stack.empty() || stack.back() != c) {
                return std::string_view::npos;
            }
            stack.pop_back();
            if (stack.empty()) {
                return i;
            }
            break;
        default: break;
        }
    }
    return std::string_view::npos;
}

bool all_objects(const nlohmann::json& arr) {
    return std::all_of(arr.begin(), arr.end(), [](const auto& e) { return e.is_object(); });
}

} // namespace

std::optional<std::string> find_json_array(std::string_view raw) {
    // Prefer an array of objects, so a stray "[-1, 1]" in surrounding prose
    // does not shadow the dialogue.
    std::optional<std::string> first_any;
    for (auto pos = raw.find('['); pos != std::string_view::npos; pos = raw.find('[', pos + 1)) {
        const auto end = matching_close(raw, pos);
        if (end == std::string_view::npos) {
            continue;
        }
        const std::string candidate(raw.substr(pos, end - pos + 1));
        const auto parsed = nlohmann::json::parse(candidate, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_array()) {
            continue;
        }
        if (all_objects(parsed)) {
            return candidate;
        }
        if (!first_any) {
            first_any = candidate;
        }
        pos = end;
    }
    return first_any;
}

RealizedDialogue parse_response(std::string_view raw, const Script& script, const ParseOptions& options) {
    nlohmann::json arr;
    if (options.strict) {
        arr = nlohmann::json::parse(raw, nullptr, false);
        if (arr.is_discarded() || !arr.is_array()) {
            throw ParseError("response is not a JSON array");
        }
    } else {
        const auto text = find_json_array(raw);
        if (!text) {
            throw ParseError("no JSON array found in response");
        }
        arr = nlohmann::json::parse(*text);
    }
    if (arr.size() != script.acts.size()) {
        throw ParseError("response has " + std::to_string(arr.size()) + " turns, script has " +
                         std::to_string(script.acts.size()));
    }
    RealizedDialogue d;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& e = arr[i];
        const auto expected = role_of(script.acts[i].type);
        const auto where = "turn " + std::to_string(i) + ": ";
        if (!e.is_object()) {
            throw ParseError(where + "entry is not an object");
        }
        const auto text_it = e.contains("text") ? e.find("text") : e.find("content");
        if (text_it == e.end() || !text_it->is_string()) {
            throw ParseError(where + "missing \"text\"");
        }
        auto text = text_it->get<std::string>();
        if (blank(text)) {
            throw ParseError(where + "empty text");
        }
        if (const auto r = e.find("role"); r != e.end()) {
            const auto role = r->is_string() ? parse_role(r->get<std::string>()) : std::nullopt;
            if (role != expected) {
                throw ParseError(where + "role " + r->dump() + " conflicts with " +
                                 std::string(to_string(script.acts[i].type)) + " (spoken by " +
                                 std::string(to_string(expected)) + ")");
            }
        }
        d.turns.push_back({expected, std::move(text), i});
    }
    return d;
}

std::size_t RealizationReport::count(Constraint c) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [c](const auto& v) { return v.constraint == c; }));
}

std::vector<std::string> RealizationReport::messages() const {
    std::vector<std::string> out;
    for (const auto& v : violations) {
        out.push_back(describe(v));
    }
    return out;
}

bool keyword_covered(std::string_view keyword, const std::vector<std::string>& turn_tokens) {
    const auto parts = tokenize(keyword);
    if (parts.empty()) {
        return true;
    }
    return std::all_of(parts.begin(), parts.end(), [&](const std::string& k) {
        return std::any_of(turn_tokens.begin(), turn_tokens.end(), [&](const std::string& t) {
            return is_numeral(k) ? t == k : t.find(k) != std::string::npos;
        });
    });
}

bool mentions_symbol(std::string_view text, std::string_view name) {
    if (name.empty()) {
        return false;
    }
    const auto hay = lowered(text);
    const auto needle = lowered(name);
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        const bool left = pos == 0 || !word_char(hay[pos - 1]) || !word_char(needle.front());
        const auto after = pos + needle.size();
        const bool right = after == hay.size() || !word_char(hay[after]) || !word_char(needle.back());
        if (left && right) {
            return true;
        }
    }
    return false;
}

RealizationReport validate_realization(const RealizedDialogue& d, const Script& script,
                                       const KnowledgeBase& kb) {
    RealizationReport report;
    auto add = [&](Constraint c, std::optional<std::size_t> turn, std::string subject, std::string msg) {
        report.violations.push_back({c, turn, std::move(subject), std::move(msg)});
    };

    // C3: structure
    if (d.turns.size() != script.acts.size()) {
        add(Constraint::turn_structure, std::nullopt, "",
            "dialogue has " + std::to_string(d.turns.size()) + " turns, script has " +
                std::to_string(script.acts.size()));
    }
    const auto n = std::min(d.turns.size(), script.acts.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& t = d.turns[i];
        const auto expected = i % 2 == 0 ? Role::user : Role::assistant;
        if (t.role != expected || t.role != role_of(script.acts[i].type)) {
            add(Constraint::turn_structure, i, "",
                "role " + std::string(to_string(t.role)) + " breaks user/assistant alternation");
        }
        if (t.act_index != i) {
            add(Constraint::turn_structure, i, "",
                "act_index " + std::to_string(t.act_index) + " should be " + std::to_string(i));
        }
        if (blank(t.text)) {
            add(Constraint::turn_structure, i, "", "empty text");
        }
    }

    // C1: keyword coverage
    for (std::size_t i = 0; i < n; ++i) {
        const auto& act = script.acts[i];
        if (act.type != ActType::ProvideQuery) {
            continue;
        }
        const auto tokens = tokenize(d.turns[i].text);
        for (const auto& kw : act.keywords) {
            if (!keyword_covered(kw, tokens)) {
                add(Constraint::keyword_coverage, i, kw, "keyword \"" + kw + "\" is missing");
            }
        }
    }

    // C2: symbol licensing. Names made only of word characters are checked
    // against the turn's word set; anything else falls back to a scan.
    std::set<std::string> licensed;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& s : script.acts[i].referenced_symbols()) {
            licensed.insert(lowered(s));
        }
        const auto& text = d.turns[i].text;
        std::set<std::string> words;
        std::string cur;
        for (const char c : text) {
            if (word_char(c)) {
                cur += lower(c);
            } else if (!cur.empty()) {
                words.insert(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) {
            words.insert(std::move(cur));
        }
        for (const auto& sym : kb.symbols()) {
            const auto name = lowered(sym.name);
            if (licensed.contains(name)) {
                continue;
            }
            const bool plain = std::all_of(name.begin(), name.end(), word_char);
            if (plain ? words.contains(name) : mentions_symbol(text, name)) {
                add(Constraint::symbol_licensing, i, sym.name,
                    "names " + sym.name + " before the script introduces it");
            }
        }
    }

    std::stable_sort(report.violations.begin(), report.violations.end(), [](const auto& a, const auto& b) {
        return a.turn.value_or(0) < b.turn.value_or(0);
    });
    return report;
}

CorpusRecord realize(const Script& script, const PromptTemplate& tmpl, const EndpointConfig& endpoint,
                     const KnowledgeBase& kb, const RealizeOptions& options, const CallOptions& call,
                     std::size_t position) {
    CorpusRecord record;
    record.script = script;
    record.provenance.model_id = endpoint.model_id;
    record.provenance.endpoint = endpoint.name;
    record.provenance.trace_id = trace_id_for(script, position);

    PromptOptions prompt_options;
    prompt_options.style_rules = options.style_rules;
    const auto base = build_prompt(script, tmpl, &kb, prompt_options);

    std::vector<std::string> previous;
    const std::size_t max_attempts = options.max_regen + 1;
    for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
        const auto messages = attempt == 1 ? base : with_correction(base, tmpl, previous);
        const auto completion = call_endpoint(messages, endpoint, call);
        record.provenance.attempts = static_cast<int>(attempt);

        std::vector<RealizationViolation> violations;
        RealizedDialogue dialogue;
        try {
            dialogue = parse_response(completion.content, script, {options.strict_parse});
            dialogue.model_id = completion.model.empty() ? endpoint.model_id : completion.model;
            dialogue.latency = completion.latency;
            dialogue.usage = completion.usage;
            violations = validate_realization(dialogue, script, kb).violations;
        } catch (const ParseError& e) {
            violations.push_back({Constraint::response_format, std::nullopt, "", e.what()});
        }

        if (options.log != nullptr) {
            nlohmann::ordered_json f;
            f["trace_id"] = record.provenance.trace_id;
            f["endpoint"] = endpoint.name;
            f["model"] = endpoint.model_id;
            f["attempt"] = attempt;
            f["http_attempts"] = completion.attempts;
            f["latency_ms"] = completion.latency.count();
            if (completion.usage) {
                f["total_tokens"] = completion.usage->total_tokens;
            }
            auto vs = nlohmann::ordered_json::array();
            for (const auto& v : violations) {
                vs.push_back(describe(v));
            }
            f["violations"] = std::move(vs);
            options.log->log("realize_attempt", f);
        }

        record.dialogue = std::move(dialogue);
        record.violations = std::move(violations);
        if (record.violations.empty()) {
            break;
        }
        previous.clear();
        for (const auto& v : record.violations) {
            previous.push_back(describe(v));
        }
    }
    return record;
}

std::vector<CorpusRecord> realize_batch(const std::vector<Script>& scripts, const PromptTemplate& tmpl,
                                        const EndpointConfig& endpoint, const KnowledgeBase& kb,
                                        const RealizeOptions& options, const CallOptions& call) {
    std::vector<CorpusRecord> out(scripts.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr error;
    std::mutex error_mu;

    auto worker = [&] {
        while (!stop) {
            const auto i = next.fetch_add(1);
            if (i >= scripts.size()) {
                return;
            }
            try {
                out[i] = realize(scripts[i], tmpl, endpoint, kb, options, call, i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) {
                    error = std::current_exception();
                }
                stop = true;
            }
        }
    };
    const auto n = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(scripts.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t) {
        threads.emplace_back(worker);
    }
    worker();
    for (auto& t : threads) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return out;
}

} // namespace dialogen
