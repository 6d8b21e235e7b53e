#include "dialogen/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

// Decodes one UTF-8 code point starting at text[i]; advances i. Invalid
// sequences decode to U+FFFD, which is treated as a separator.
char32_t decode_utf8(std::string_view text, std::size_t& i) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
        ++i;
        return lead;
    } else if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + len > text.size()) {
        ++i;
        return 0xFFFD;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto c = static_cast<unsigned char>(text[i + k]);
        if ((c & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (c & 0x3F);
    }
    i += len;
    return cp;
}

bool is_word_code_point(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') ||
               cp == '_';
    }
    if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) {
        return false; // Latin-1 controls, punctuation, multiplication/division signs
    }
    if (cp >= 0x2000 && cp <= 0x2BFF) {
        return false; // punctuation, sub/superscripts, currency, arrows, math, box drawing
    }
    if ((cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFE30 && cp <= 0xFE4F) ||
        (cp >= 0xFF00 && cp <= 0xFF0F) || cp == 0xFEFF || cp == 0xFFFD) {
        return false;
    }
    return true;
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const char32_t cp = decode_utf8(text, i);
        if (is_word_code_point(cp)) {
            if (cp < 0x80) {
                char c = static_cast<char>(cp);
                if (c >= 'A' && c <= 'Z') {
                    c = static_cast<char>(c - 'A' + 'a');
                }
                current.push_back(c);
            } else {
                current.append(text.substr(start, i - start));
            }
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

bool RetrievalResult::contains(std::string_view name) const {
    return std::any_of(ranked.begin(), ranked.end(),
                       [&](const ScoredSymbol& s) { return s.name == name; });
}

TfIdfIndex TfIdfIndex::build(const KnowledgeBase& kb, IndexOptions options) {
    TfIdfIndex index;
    const std::size_t n = kb.size();

    // term id -> raw count, per document
    std::vector<std::map<std::uint32_t, std::size_t>> counts(n);
    for (std::size_t d = 0; d < n; ++d) {
        const auto& sym = kb[d];
        std::string text = sym.description;
        if (options.include_names) {
            text += ' ';
            text += sym.name;
        }
        for (auto& tok : tokenize(text)) {
            auto [it, fresh] =
                index.vocabulary_.emplace(tok, static_cast<std::uint32_t>(index.terms_.size()));
            if (fresh) {
                index.terms_.push_back(std::move(tok));
                index.df_.push_back(0);
            }
            if (counts[d][it->second]++ == 0) {
                ++index.df_[it->second];
            }
        }
    }

    index.name_term_.assign(index.terms_.size(), false);
    for (const auto& sym : kb.symbols()) {
        std::string lowered = sym.name;
        std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) {
            return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
        });
        if (auto it = index.vocabulary_.find(lowered); it != index.vocabulary_.end()) {
            index.name_term_[it->second] = true;
        }
    }

    index.idf_.resize(index.terms_.size());
    for (std::size_t t = 0; t < index.terms_.size(); ++t) {
        index.idf_[t] = std::log((1.0 + static_cast<double>(n)) /
                                 (1.0 + static_cast<double>(index.df_[t]))) +
                        1.0;
    }

    index.postings_.resize(index.terms_.size());
    index.doc_vectors_.resize(n);
    index.symbol_names_.reserve(n);
    for (std::size_t d = 0; d < n; ++d) {
        index.symbol_names_.push_back(kb[d].name);
        auto& vec = index.doc_vectors_[d];
        double norm_sq = 0.0;
        for (const auto& [term, count] : counts[d]) {
            const double w = static_cast<double>(count) * index.idf_[term];
            vec.push_back({term, w});
            norm_sq += w * w;
        }
        if (vec.empty()) {
            ++index.empty_documents_;
            continue;
        }
        const double norm = std::sqrt(norm_sq);
        for (auto& tw : vec) {
            tw.weight /= norm;
            index.postings_[tw.term].push_back({static_cast<std::uint32_t>(d), tw.weight});
        }
    }
    return index;
}

std::optional<std::uint32_t> TfIdfIndex::term_id(std::string_view term) const {
    auto it = vocabulary_.find(std::string(term));
    if (it == vocabulary_.end()) {
        return std::nullopt;
    }
    return it->second;
}

double TfIdfIndex::idf(std::string_view term) const {
    auto id = term_id(term);
    return id ? idf_[*id] : 0.0;
}

RetrievalResult TfIdfIndex::query(std::span<const std::string> keywords, std::size_t k) const {
    if (k == 0) {
        throw Error("retrieval", "query requires k >= 1");
    }
    std::map<std::uint32_t, std::size_t> tf;
    for (const auto& kw : keywords) {
        if (auto id = term_id(kw)) {
            ++tf[*id];
        }
    }
    RetrievalResult result;
    if (tf.empty()) {
        return result;
    }

    double norm_sq = 0.0;
    std::vector<std::pair<std::uint32_t, double>> qvec;
    qvec.reserve(tf.size());
    for (const auto& [term, count] : tf) {
        const double w = static_cast<double>(count) * idf_[term];
        qvec.emplace_back(term, w);
        norm_sq += w * w;
    }
    const double norm = std::sqrt(norm_sq);

    std::vector<double> scores(doc_vectors_.size(), 0.0);
    std::vector<bool> touched(doc_vectors_.size(), false);
    for (const auto& [term, w] : qvec) {
        for (const auto& p : postings_[term]) {
            scores[p.doc] += (w / norm) * p.weight;
            touched[p.doc] = true;
        }
    }

    for (std::size_t d = 0; d < scores.size(); ++d) {
        if (touched[d] && scores[d] > 0.0) {
            result.ranked.push_back({symbol_names_[d], std::min(1.0, scores[d])});
        }
    }
    std::sort(result.ranked.begin(), result.ranked.end(),
              [](const ScoredSymbol& a, const ScoredSymbol& b) {
                  if (a.score != b.score) {
                      return a.score > b.score;
                  }
                  return a.name < b.name;
              });
    if (result.ranked.size() > k) {
        result.ranked.resize(k);
    }
    return result;
}

} // namespace dialogen
