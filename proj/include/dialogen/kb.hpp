#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace dialogen {

enum class SymbolKind { function, type, macro, constant, module };

std::string_view to_string(SymbolKind kind);
std::optional<SymbolKind> parse_symbol_kind(std::string_view text);

struct ApiSymbol {
    std::string name;
    SymbolKind kind = SymbolKind::function;
    std::string signature;
    std::string description;
    std::string category;

    bool operator==(const ApiSymbol&) const = default;
};

/// Immutable, validated collection of API symbols. Names are unique and
/// matched exactly (case-sensitive).
class KnowledgeBase {
public:
    /// Validates every symbol; throws KbError on the first offending record
    /// (1-based record index in the message).
    explicit KnowledgeBase(std::vector<ApiSymbol> symbols);

    std::span<const ApiSymbol> symbols() const noexcept { return symbols_; }
    std::size_t size() const noexcept { return symbols_.size(); }
    const ApiSymbol& operator[](std::size_t i) const { return symbols_[i]; }

    const ApiSymbol* find(std::string_view name) const;
    std::optional<std::size_t> position(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }

    bool operator==(const KnowledgeBase& other) const { return symbols_ == other.symbols_; }

private:
    std::vector<ApiSymbol> symbols_;
    std::unordered_map<std::string, std::size_t> name_index_;
};

/// Reads a JSON-lines knowledge base. Blank lines are skipped; every other
/// line must be one object with keys name, kind, description and optionally
/// signature and category. Unknown keys are rejected.
KnowledgeBase ingest(const std::filesystem::path& path);
KnowledgeBase ingest(std::istream& in);

std::optional<ApiSymbol> lookup(const KnowledgeBase& kb, std::string_view name);

void export_kb(const KnowledgeBase& kb, std::ostream& out);
void export_kb(const KnowledgeBase& kb, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const ApiSymbol& symbol);

} // namespace dialogen
