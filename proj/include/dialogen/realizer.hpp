#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialogen/chat_client.hpp"
#include "dialogen/dialogue.hpp"
#include "dialogen/kb.hpp"
#include "dialogen/log.hpp"
#include "dialogen/prompt.hpp"
#include "dialogen/record.hpp"

namespace dialogen {

struct ParseOptions {
    /// Strict: the whole response must be the JSON array. Otherwise the
    /// first well-formed array anywhere in the text is used.
    bool strict = false;
};

/// Text of the first well-formed JSON array in `raw`, if any.
std::optional<std::string> find_json_array(std::string_view raw);

/// Maps array entries positionally onto script acts. Throws ParseError when no
/// array is found, lengths differ, a text is empty, or a role contradicts the
/// act's speaker.
RealizedDialogue parse_response(std::string_view raw, const Script& script,
                                const ParseOptions& options = {});

struct RealizationReport {
    std::vector<RealizationViolation> violations;

    bool ok() const noexcept { return violations.empty(); }
    std::size_t count(Constraint c) const;
    std::vector<std::string> messages() const;
};

/// Keyword rule: a numeral keyword must equal a token of the turn; any other
/// keyword must be a substring of some token (so "holes" is found in
/// "pinholes" but not in "hole").
bool keyword_covered(std::string_view keyword, const std::vector<std::string>& turn_tokens);

/// Case-insensitive occurrence of `name` bounded by non-word characters
/// ([A-Za-z0-9_] are word characters).
bool mentions_symbol(std::string_view text, std::string_view name);

RealizationReport validate_realization(const RealizedDialogue& d, const Script& script,
                                       const KnowledgeBase& kb);

inline constexpr std::size_t kDefaultMaxRegen = 2;
inline constexpr std::size_t kDefaultConcurrency = 4;

struct RealizeOptions {
    std::size_t max_regen = kDefaultMaxRegen;
    bool strict_parse = false;
    std::optional<std::string> style_rules;
    std::size_t concurrency = kDefaultConcurrency; // realize_batch only
    JsonLogger* log = nullptr;
};

/// build -> call -> parse -> validate, regenerating with a corrective note up
/// to max_regen times. A final failure yields a flagged record (violations
/// attached); endpoint errors propagate.
CorpusRecord realize(const Script& script, const PromptTemplate& tmpl, const EndpointConfig& endpoint,
                     const KnowledgeBase& kb, const RealizeOptions& options = {},
                     const CallOptions& call = {}, std::size_t position = 0);

/// Output order equals input order. The first endpoint error stops the batch
/// and is rethrown once in-flight work finishes.
std::vector<CorpusRecord> realize_batch(const std::vector<Script>& scripts, const PromptTemplate& tmpl,
                                        const EndpointConfig& endpoint, const KnowledgeBase& kb,
                                        const RealizeOptions& options = {}, const CallOptions& call = {});

} // namespace dialogen
