#include "dialogen/kb.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

constexpr std::array<std::pair<SymbolKind, std::string_view>, 5> kKindNames{{
    {SymbolKind::function, "function"},
    {SymbolKind::type, "type"},
    {SymbolKind::macro, "macro"},
    {SymbolKind::constant, "constant"},
    {SymbolKind::module, "module"},
}};

bool has_whitespace(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    });
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return c == ' ' || c == '\t' || c == '\r';
    });
}

std::string required_string(const nlohmann::json& obj, const char* key, std::size_t record) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw KbError(std::string("missing key '") + key + "'", record);
    }
    if (!it->is_string()) {
        throw KbError(std::string("key '") + key + "' must be a string", record);
    }
    return it->get<std::string>();
}

std::string optional_string(const nlohmann::json& obj, const char* key, std::size_t record) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return {};
    }
    if (!it->is_string()) {
        throw KbError(std::string("key '") + key + "' must be a string", record);
    }
    return it->get<std::string>();
}

ApiSymbol parse_record(const nlohmann::json& obj, std::size_t record) {
    if (!obj.is_object()) {
        throw KbError("record is not a JSON object", record);
    }
    static constexpr std::array<std::string_view, 5> kKeys{"name", "kind", "signature",
                                                           "description", "category"};
    for (const auto& [key, value] : obj.items()) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
            throw KbError("unknown key '" + key + "'", record);
        }
    }

    ApiSymbol sym;
    sym.name = required_string(obj, "name", record);
    const auto kind_text = required_string(obj, "kind", record);
    auto kind = parse_symbol_kind(kind_text);
    if (!kind) {
        throw KbError("unknown kind '" + kind_text + "'", record);
    }
    sym.kind = *kind;
    sym.signature = optional_string(obj, "signature", record);
    sym.description = required_string(obj, "description", record);
    sym.category = optional_string(obj, "category", record);
    return sym;
}

} // namespace

std::string_view to_string(SymbolKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) {
            return name;
        }
    }
    return "function";
}

std::optional<SymbolKind> parse_symbol_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames) {
        if (name == text) {
            return k;
        }
    }
    return std::nullopt;
}

KnowledgeBase::KnowledgeBase(std::vector<ApiSymbol> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) {
        throw KbError("empty knowledge base");
    }
    name_index_.reserve(symbols_.size());
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        const auto& sym = symbols_[i];
        if (sym.name.empty()) {
            throw KbError("empty name", i + 1);
        }
        if (has_whitespace(sym.name)) {
            throw KbError("name '" + sym.name + "' contains whitespace", i + 1);
        }
        if (sym.description.empty()) {
            throw KbError("empty description for '" + sym.name + "'", i + 1);
        }
        if (!name_index_.emplace(sym.name, i).second) {
            throw KbError("duplicate name '" + sym.name + "'", i + 1);
        }
    }
}

const ApiSymbol* KnowledgeBase::find(std::string_view name) const {
    auto pos = position(name);
    return pos ? &symbols_[*pos] : nullptr;
}

std::optional<std::size_t> KnowledgeBase::position(std::string_view name) const {
    auto it = name_index_.find(std::string(name));
    if (it == name_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

KnowledgeBase ingest(std::istream& in) {
    std::vector<ApiSymbol> symbols;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw KbError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        auto sym = parse_record(obj, line_no);
        if (sym.name.empty() || has_whitespace(sym.name)) {
            throw KbError("invalid name '" + sym.name + "'", line_no);
        }
        if (sym.description.empty()) {
            throw KbError("empty description for '" + sym.name + "'", line_no);
        }
        if (auto [it, fresh] = seen.emplace(sym.name, line_no); !fresh) {
            throw KbError("duplicate name '" + sym.name + "' (first defined at record " +
                              std::to_string(it->second) + ")",
                          line_no);
        }
        symbols.push_back(std::move(sym));
    }
    if (symbols.empty()) {
        throw KbError("empty knowledge base");
    }
    return KnowledgeBase(std::move(symbols));
}

KnowledgeBase ingest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw KbError("cannot read knowledge base file '" + path.string() + "'");
    }
    return ingest(in);
}

std::optional<ApiSymbol> lookup(const KnowledgeBase& kb, std::string_view name) {
    if (const auto* sym = kb.find(name)) {
        return *sym;
    }
    return std::nullopt;
}

nlohmann::ordered_json to_json(const ApiSymbol& symbol) {
    nlohmann::ordered_json j;
    j["name"] = symbol.name;
    j["kind"] = std::string(to_string(symbol.kind));
    j["signature"] = symbol.signature;
    j["description"] = symbol.description;
    j["category"] = symbol.category;
    return j;
}

void export_kb(const KnowledgeBase& kb, std::ostream& out) {
    for (const auto& sym : kb.symbols()) {
        out << to_json(sym).dump() << '\n';
    }
}

void export_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw KbError("cannot write '" + path.string() + "'");
    }
    export_kb(kb, out);
}

} // namespace dialogen
