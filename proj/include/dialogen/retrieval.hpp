#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dialogen/kb.hpp"

namespace dialogen {

/// Lowercases ASCII and splits on every character that is not a letter,
/// digit or underscore. Non-ASCII code points count as letters except for
/// punctuation/symbol blocks (general punctuation, dashes, quotes, arrows,
/// math operators, Latin-1 punctuation), which separate tokens.
std::vector<std::string> tokenize(std::string_view text);

struct TermWeight {
    std::uint32_t term;
    double weight;

    bool operator==(const TermWeight&) const = default;
};

/// Sorted by term id.
using SparseVector = std::vector<TermWeight>;

struct ScoredSymbol {
    std::string name;
    double score;

    bool operator==(const ScoredSymbol&) const = default;
};

/// Scores non-increasing, ties by ascending name, zero scores excluded.
struct RetrievalResult {
    std::vector<ScoredSymbol> ranked;

    bool empty() const noexcept { return ranked.empty(); }
    std::size_t size() const noexcept { return ranked.size(); }
    bool contains(std::string_view name) const;

    bool operator==(const RetrievalResult&) const = default;
};

struct IndexOptions {
    /// Append each symbol's name to its description before indexing.
    bool include_names = true;
};

/// Smoothed TF-IDF: weight(t,d) = count(t,d) * (ln((1+N)/(1+df(t))) + 1),
/// document vectors L2-normalized.
class TfIdfIndex {
public:
    static TfIdfIndex build(const KnowledgeBase& kb, IndexOptions options = {});

    std::size_t doc_count() const noexcept { return doc_vectors_.size(); }
    std::size_t vocabulary_size() const noexcept { return terms_.size(); }
    /// Symbols whose text tokenized to nothing; they can never be retrieved.
    std::size_t empty_documents() const noexcept { return empty_documents_; }

    std::optional<std::uint32_t> term_id(std::string_view term) const;
    const std::string& term(std::uint32_t id) const { return terms_[id]; }
    const std::vector<std::string>& terms() const noexcept { return terms_; }
    std::size_t document_frequency(std::uint32_t id) const { return df_[id]; }
    double idf(std::uint32_t id) const { return idf_[id]; }
    /// 0 for terms outside the vocabulary.
    double idf(std::string_view term) const;

    /// True when the term equals (case-insensitively) a symbol name.
    bool is_symbol_name(std::uint32_t id) const { return name_term_[id]; }

    const SparseVector& doc_vector(std::size_t doc) const { return doc_vectors_[doc]; }
    const std::string& symbol_name(std::size_t doc) const { return symbol_names_[doc]; }

    RetrievalResult query(std::span<const std::string> keywords, std::size_t k) const;

private:
    struct Posting {
        std::uint32_t doc;
        double weight;
    };

    std::unordered_map<std::string, std::uint32_t> vocabulary_;
    std::vector<std::string> terms_;
    std::vector<std::size_t> df_;
    std::vector<double> idf_;
    std::vector<SparseVector> doc_vectors_;
    std::vector<std::string> symbol_names_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<bool> name_term_;
    std::size_t empty_documents_ = 0;
};

inline TfIdfIndex build_index(const KnowledgeBase& kb, IndexOptions options = {}) {
    return TfIdfIndex::build(kb, options);
}

inline RetrievalResult query(const TfIdfIndex& index, std::span<const std::string> keywords,
                             std::size_t k) {
    return index.query(keywords, k);
}

} // namespace dialogen
