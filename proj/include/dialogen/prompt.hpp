#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialogen/chat_client.hpp"
#include "dialogen/dialogue.hpp"
#include "dialogen/kb.hpp"

namespace dialogen {

/// Realizer prompt, loaded from a sectioned text file (see prompts/realizer.txt).
///
/// `system` must contain {STYLE_RULES} once; `user` must contain
/// {DA_DEFINITIONS}, {CONSTRAINTS} and {SCRIPT_JSON} once each; `correction`
/// must contain {VIOLATIONS} once. The remaining sections are plain text.
struct PromptTemplate {
    std::string system_template;
    std::string user_template;
    std::string style_rules;
    std::string da_definitions;
    std::string constraints;
    std::string correction_template;

    /// Throws TemplateError.
    void validate() const;

    static PromptTemplate parse(std::string_view text);
    static PromptTemplate load(const std::filesystem::path& path);
};

/// Placeholder names ({NAME}) appearing in text, in order of appearance.
std::vector<std::string> placeholders(std::string_view text);

/// Single pass: substituted values are never rescanned. Throws TemplateError
/// when the template names a placeholder missing from `values`.
std::string render(std::string_view text, const std::map<std::string, std::string>& values);

/// The script as handed to the model: turns with speaker and act slots, plus
/// the reference docs of referenced symbols when a KB is given.
nlohmann::ordered_json script_prompt_json(const Script& script, const KnowledgeBase* kb);

/// Template constraints followed by the per-script keyword and symbol rules.
std::string script_constraints(const Script& script, const PromptTemplate& tmpl);

struct PromptOptions {
    std::optional<std::string> style_rules; // replaces the template's section
};

/// [system, user]
std::vector<ChatMessage> build_prompt(const Script& script, const PromptTemplate& tmpl,
                                      const KnowledgeBase* kb = nullptr,
                                      const PromptOptions& options = {});

/// Appends the rendered correction note to the final user message.
std::vector<ChatMessage> with_correction(std::vector<ChatMessage> messages,
                                         const PromptTemplate& tmpl,
                                         const std::vector<std::string>& violations);

} // namespace dialogen
