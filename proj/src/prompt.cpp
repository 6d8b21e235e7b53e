#include "dialogen/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

bool placeholder_char(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'; }

// Length of a {NAME} placeholder starting at text[i], or 0.
std::size_t placeholder_at(std::string_view text, std::size_t i) {
    if (text[i] != '{' || i + 2 >= text.size() || !(text[i + 1] >= 'A' && text[i + 1] <= 'Z')) {
        return 0;
    }
    std::size_t j = i + 1;
    while (j < text.size() && placeholder_char(text[j])) {
        ++j;
    }
    return j < text.size() && text[j] == '}' ? j - i + 1 : 0;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

void expect_exactly(std::string_view section, std::string_view text,
                    const std::vector<std::string>& required) {
    const auto found = placeholders(text);
    for (const auto& name : required) {
        const auto n = std::count(found.begin(), found.end(), name);
        if (n != 1) {
            throw TemplateError("section '" + std::string(section) + "' must contain {" + name +
                                "} exactly once (found " + std::to_string(n) + ")");
        }
    }
    for (const auto& name : found) {
        if (std::find(required.begin(), required.end(), name) == required.end()) {
            throw TemplateError("section '" + std::string(section) + "' has unknown placeholder {" +
                                name + "}");
        }
    }
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) {
            out += '\n';
        }
        out += l;
    }
    return out;
}

std::string quoted_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i == 0 ? "" : ", ") + ("\"" + items[i] + "\"");
    }
    return out;
}

} // namespace

std::vector<std::string> placeholders(std::string_view text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (const auto n = placeholder_at(text, i); n > 0) {
            out.emplace_back(text.substr(i + 1, n - 2));
            i += n - 1;
        }
    }
    return out;
}

std::string render(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (const auto n = placeholder_at(text, i); n > 0) {
            const std::string name(text.substr(i + 1, n - 2));
            const auto it = values.find(name);
            if (it == values.end()) {
                throw TemplateError("unresolved placeholder {" + name + "}");
            }
            out += it->second;
            i += n - 1;
        } else {
            out += text[i];
        }
    }
    return out;
}

void PromptTemplate::validate() const {
    expect_exactly("system", system_template, {"STYLE_RULES"});
    expect_exactly("user", user_template, {"DA_DEFINITIONS", "CONSTRAINTS", "SCRIPT_JSON"});
    expect_exactly("correction", correction_template, {"VIOLATIONS"});
    expect_exactly("style_rules", style_rules, {});
    expect_exactly("da_definitions", da_definitions, {});
    expect_exactly("constraints", constraints, {});
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
    std::map<std::string, std::string> sections;
    std::string current;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.size() > 4 && line.starts_with("[[") && line.ends_with("]]")) {
            current = line.substr(2, line.size() - 4);
            if (sections.contains(current)) {
                throw TemplateError("line " + std::to_string(line_no) + ": duplicate section [[" +
                                    current + "]]");
            }
            sections[current];
            continue;
        }
        if (current.empty()) {
            if (!trim(line).empty() && !line.starts_with("#")) {
                throw TemplateError("line " + std::to_string(line_no) + ": text before the first section");
            }
            continue;
        }
        sections[current] += line;
        sections[current] += '\n';
    }

    static const std::vector<std::string> kKnown{"system",      "user",           "style_rules",
                                                 "da_definitions", "constraints", "correction"};
    for (const auto& [name, _] : sections) {
        if (std::find(kKnown.begin(), kKnown.end(), name) == kKnown.end()) {
            throw TemplateError("unknown section [[" + name + "]]");
        }
    }
    auto take = [&](const std::string& name, bool required) {
        const auto it = sections.find(name);
        if (it == sections.end()) {
            if (required) {
                throw TemplateError("missing section [[" + name + "]]");
            }
            return std::string{};
        }
        return trim(it->second);
    };

    PromptTemplate t;
    t.system_template = take("system", true);
    t.user_template = take("user", true);
    t.style_rules = take("style_rules", false);
    t.da_definitions = take("da_definitions", false);
    t.constraints = take("constraints", false);
    t.correction_template = take("correction", false);
    if (t.correction_template.empty()) {
        t.correction_template = "Your previous answer broke these rules:\n{VIOLATIONS}\n"
                                "Return the corrected dialogue as a single JSON array.";
    }
    t.validate();
    return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw TemplateError("cannot read prompt template " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

nlohmann::ordered_json script_prompt_json(const Script& script, const KnowledgeBase* kb) {
    nlohmann::ordered_json out;
    auto turns = nlohmann::ordered_json::array();
    std::vector<std::string> referenced;
    for (std::size_t i = 0; i < script.acts.size(); ++i) {
        const auto& act = script.acts[i];
        nlohmann::ordered_json t;
        t["index"] = i;
        t["role"] = is_user_act(act.type) ? "user" : "assistant";
        t["act"] = std::string(to_string(act.type));
        if (act.type == ActType::ProvideQuery) {
            t["keywords"] = act.keywords;
        }
        if (act.symbol) {
            t["symbol"] = *act.symbol;
        }
        if (act.type == ActType::ListOptions) {
            t["symbols"] = act.symbols;
        }
        for (const auto& s : act.referenced_symbols()) {
            if (std::find(referenced.begin(), referenced.end(), s) == referenced.end()) {
                referenced.push_back(s);
            }
        }
        turns.push_back(std::move(t));
    }
    out["turns"] = std::move(turns);
    if (kb != nullptr) {
        auto api = nlohmann::ordered_json::array();
        for (const auto& name : referenced) {
            if (const auto* sym = kb->find(name)) {
                nlohmann::ordered_json doc;
                doc["name"] = sym->name;
                doc["kind"] = std::string(to_string(sym->kind));
                if (!sym->signature.empty()) {
                    doc["signature"] = sym->signature;
                }
                doc["description"] = sym->description;
                api.push_back(std::move(doc));
            }
        }
        out["api"] = std::move(api);
    }
    return out;
}

std::string script_constraints(const Script& script, const PromptTemplate& tmpl) {
    std::vector<std::string> lines;
    if (!tmpl.constraints.empty()) {
        lines.push_back(tmpl.constraints);
    }
    std::vector<std::string> introduced;
    for (std::size_t i = 0; i < script.acts.size(); ++i) {
        const auto& act = script.acts[i];
        if (act.type == ActType::ProvideQuery && !act.keywords.empty()) {
            lines.push_back("- Turn " + std::to_string(i) + " must contain each of these keywords verbatim: " +
                            quoted_list(act.keywords) + ".");
        }
        for (const auto& s : act.referenced_symbols()) {
            if (std::find(introduced.begin(), introduced.end(), s) == introduced.end()) {
                introduced.push_back(s);
                lines.push_back("- " + s + " may be named from turn " + std::to_string(i) +
                                " onward, never earlier.");
            }
        }
    }
    lines.push_back(introduced.empty() ? "- Do not name any API symbol."
                                       : "- Do not name any API symbol other than the ones listed above.");
    return join_lines(lines);
}

std::vector<ChatMessage> build_prompt(const Script& script, const PromptTemplate& tmpl,
                                      const KnowledgeBase* kb, const PromptOptions& options) {
    const auto system = render(tmpl.system_template,
                               {{"STYLE_RULES", options.style_rules.value_or(tmpl.style_rules)}});
    const auto user = render(tmpl.user_template,
                             {{"DA_DEFINITIONS", tmpl.da_definitions},
                              {"CONSTRAINTS", script_constraints(script, tmpl)},
                              {"SCRIPT_JSON", script_prompt_json(script, kb).dump(2)}});
    return {{"system", trim(system)}, {"user", trim(user)}};
}

std::vector<ChatMessage> with_correction(std::vector<ChatMessage> messages,
                                         const PromptTemplate& tmpl,
                                         const std::vector<std::string>& violations) {
    std::vector<std::string> bullets;
    for (const auto& v : violations) {
        bullets.push_back("- " + v);
    }
    const auto note = render(tmpl.correction_template, {{"VIOLATIONS", join_lines(bullets)}});
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == "user") {
            it->content += "\n\n" + note;
            return messages;
        }
    }
    messages.push_back({"user", note});
    return messages;
}

} // namespace dialogen
