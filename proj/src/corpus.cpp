#include "dialogen/corpus.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "dialogen/error.hpp"
#include "dialogen/log.hpp"
#include "dialogen/retrieval.hpp"

namespace dialogen {

namespace {

std::string record_line(const CorpusRecord& r) { return to_json(r).dump(); }

std::string script_key(const Script& s) { return to_json(s).dump(); }

std::vector<std::string> turn_texts(const CorpusRecord& r) {
    std::vector<std::string> out;
    for (const auto& t : r.dialogue.turns) {
        out.push_back(t.text);
    }
    return out;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const TokenSeq& seq, std::size_t n) {
    NgramCounts out;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
        ++out[TokenSeq(seq.begin() + static_cast<std::ptrdiff_t>(i),
                       seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return out;
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

} // namespace

void write_records(std::ostream& out, const std::vector<CorpusRecord>& records) {
    for (const auto& r : records) {
        out << record_line(r) << '\n';
    }
}

void write_records(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CorpusError("cannot write " + path.string());
    }
    write_records(out, records);
    if (!out) {
        throw CorpusError("write failed for " + path.string());
    }
}

std::vector<CorpusRecord> read_records(std::istream& in) {
    std::vector<CorpusRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw CorpusError("line " + std::to_string(line_no) + ": invalid JSON");
        }
        try {
            out.push_back(record_from_json(j));
        } catch (const Error& e) {
            throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<CorpusRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CorpusError("cannot read " + path.string());
    }
    return read_records(in);
}

std::string_view to_string(ExportFormat f) { return f == ExportFormat::chat ? "chat" : "script-paired"; }

std::optional<ExportFormat> parse_export_format(std::string_view text) {
    if (text == "chat") {
        return ExportFormat::chat;
    }
    if (text == "script-paired") {
        return ExportFormat::script_paired;
    }
    return std::nullopt;
}

nlohmann::ordered_json to_json(const ExportManifest& m) {
    nlohmann::ordered_json j;
    j["format"] = m.format;
    j["file"] = m.file;
    j["records_in"] = m.records_in;
    j["lines_written"] = m.lines_written;
    j["flagged_excluded"] = m.flagged_excluded;
    j["unrealized_skipped"] = m.unrealized_skipped;
    j["turns_written"] = m.turns_written;
    j["sha256"] = m.sha256;
    j["created_at"] = m.created_at;
    j["pipeline_version"] = m.pipeline_version;
    return j;
}

nlohmann::ordered_json chat_line(const CorpusRecord& record) {
    auto msgs = nlohmann::ordered_json::array();
    for (const auto& t : record.dialogue.turns) {
        msgs.push_back({{"role", std::string(to_string(t.role))}, {"content", t.text}});
    }
    nlohmann::ordered_json j;
    j["messages"] = std::move(msgs);
    return j;
}

std::filesystem::path manifest_path(const std::filesystem::path& export_path) {
    auto p = export_path;
    p += ".manifest.json";
    return p;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw CorpusError("SHA-256 digest failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
}

ExportManifest export_jsonl(const std::vector<CorpusRecord>& records, const std::filesystem::path& path,
                            const ExportOptions& options) {
    if (records.empty()) {
        throw CorpusError("nothing to export: no records");
    }
    ExportManifest m;
    m.format = std::string(to_string(options.format));
    m.file = path.filename().string();
    m.records_in = records.size();

    std::string body;
    for (const auto& r : records) {
        if (r.flagged() && !options.include_flagged) {
            ++m.flagged_excluded;
            continue;
        }
        if (options.format == ExportFormat::chat) {
            if (r.dialogue.turns.empty()) {
                ++m.unrealized_skipped;
                continue;
            }
            body += chat_line(r).dump();
        } else {
            auto j = chat_line(r);
            const auto full = to_json(r);
            for (const auto& [k, v] : full.items()) {
                j[k] = v;
            }
            body += j.dump();
        }
        body += '\n';
        ++m.lines_written;
        m.turns_written += r.dialogue.turns.size();
    }
    m.sha256 = sha256_hex(body);
    m.created_at = utc_timestamp();

    auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        if (!out || !(out << text) || !out.flush()) {
            throw CorpusError("cannot write " + p.string());
        }
    };
    write(path, body);
    write(manifest_path(path), to_json(m).dump(2) + "\n");
    return m;
}

nlohmann::ordered_json to_json(const CorpusStats& s) {
    nlohmann::ordered_json j;
    j["dialogues"] = s.dialogue_count;
    j["turns"] = s.turn_count;
    j["tokens"] = s.token_count;
    j["avg_turn_length"] = s.avg_turn_length;
    j["unique_vocabulary"] = s.unique_vocabulary;
    return j;
}

CorpusStats compute_stats(const std::vector<CorpusRecord>& records) {
    CorpusStats s;
    std::set<std::string> vocab;
    s.dialogue_count = records.size();
    for (const auto& r : records) {
        for (const auto& t : r.dialogue.turns) {
            auto tokens = tokenize(t.text);
            ++s.turn_count;
            s.token_count += tokens.size();
            for (auto& tok : tokens) {
                vocab.insert(std::move(tok));
            }
        }
    }
    s.unique_vocabulary = vocab.size();
    s.avg_turn_length = s.turn_count == 0 ? 0.0
                                          : static_cast<double>(s.token_count) / static_cast<double>(s.turn_count);
    return s;
}

BleuResult corpus_bleu_detail(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references) {
    if (candidates.size() != references.size()) {
        throw CorpusError("BLEU needs aligned turns: " + std::to_string(candidates.size()) + " candidates vs " +
                          std::to_string(references.size()) + " references");
    }
    if (candidates.empty()) {
        throw CorpusError("BLEU needs at least one turn pair");
    }
    BleuResult r;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        const auto& ref = references[i];
        if (ref.empty()) {
            throw CorpusError("reference turn " + std::to_string(i) + " is empty");
        }
        r.candidate_length += c.size();
        r.reference_length += ref.size();
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto cn = ngrams(c, n);
            const auto rn = ngrams(ref, n);
            for (const auto& [gram, count] : cn) {
                r.candidates[n - 1] += count;
                if (const auto it = rn.find(gram); it != rn.end()) {
                    r.matches[n - 1] += std::min(count, it->second);
                }
            }
        }
    }
    if (r.candidate_length == 0) {
        return r;
    }
    r.brevity_penalty = std::min(1.0, std::exp(1.0 - static_cast<double>(r.reference_length) /
                                                         static_cast<double>(r.candidate_length)));
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        if (r.candidates[n] == 0) {
            continue;
        }
        if (r.matches[n] == 0) {
            r.orders_used = 0;
            return r;
        }
        ++r.orders_used;
        log_sum += std::log(static_cast<double>(r.matches[n]) / static_cast<double>(r.candidates[n]));
    }
    r.score = std::min(1.0, r.brevity_penalty * std::exp(log_sum / static_cast<double>(r.orders_used)));
    return r;
}

double corpus_bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references) {
    return corpus_bleu_detail(candidates, references).score;
}

nlohmann::ordered_json to_json(const ComparisonReport& r) {
    nlohmann::ordered_json j;
    j["reference"] = r.reference;
    j["avg_len_unit"] = "tokens per turn";
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json o;
        o["label"] = row.label;
        o["stats"] = to_json(row.stats);
        o["bleu"] = row.bleu ? nlohmann::ordered_json(*row.bleu) : nlohmann::ordered_json(nullptr);
        o["aligned_turns"] = row.aligned_turns;
        for (const auto& [name, value] : row.extra) {
            o[name] = value;
        }
        rows.push_back(std::move(o));
    }
    j["rows"] = std::move(rows);
    return j;
}

std::string to_table(const ComparisonReport& r) {
    std::vector<std::string> extra_names;
    for (const auto& row : r.rows) {
        for (const auto& [name, _] : row.extra) {
            if (std::find(extra_names.begin(), extra_names.end(), name) == extra_names.end()) {
                extra_names.push_back(name);
            }
        }
    }
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"Model", "Avg. Len", "# Unique", "BLEU"};
    header.insert(header.end(), extra_names.begin(), extra_names.end());
    cells.push_back(header);
    for (const auto& row : r.rows) {
        std::vector<std::string> line{row.label + (row.label == r.reference ? " (ref)" : ""),
                                      fixed(row.stats.avg_turn_length, 2),
                                      std::to_string(row.stats.unique_vocabulary),
                                      row.bleu ? fixed(*row.bleu, 3) : "-"};
        for (const auto& name : extra_names) {
            const auto it = std::find_if(row.extra.begin(), row.extra.end(),
                                         [&](const auto& e) { return e.first == name; });
            line.push_back(it == row.extra.end() ? "-" : fixed(it->second, 3));
        }
        cells.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            width[c] = std::max(width[c], line[c].size());
        }
    }
    std::ostringstream out;
    for (std::size_t l = 0; l < cells.size(); ++l) {
        for (std::size_t c = 0; c < cells[l].size(); ++c) {
            const auto& cell = cells[l][c];
            const auto pad = std::string(width[c] - cell.size(), ' ');
            out << (c == 0 ? cell + pad : "  " + pad + cell);
        }
        out << '\n';
        if (l == 0) {
            std::size_t total = 0;
            for (auto w : width) {
                total += w;
            }
            out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
        }
    }
    out << "Avg. Len is tokens per turn.\n";
    return out.str();
}

ComparisonReport compare_models(const std::vector<LabeledCorpus>& candidates, const LabeledCorpus& reference,
                                const std::vector<std::shared_ptr<SimilarityScorer>>& scorers) {
    ComparisonReport report;
    report.reference = reference.label;
    report.rows.push_back({reference.label, compute_stats(reference.records), std::nullopt, 0, {}});

    std::multimap<std::string, std::size_t> by_script;
    for (std::size_t i = 0; i < reference.records.size(); ++i) {
        by_script.emplace(script_key(reference.records[i].script), i);
    }

    for (const auto& cand : candidates) {
        if (cand.records.size() != reference.records.size()) {
            throw CorpusError("corpus '" + cand.label + "' has " + std::to_string(cand.records.size()) +
                              " records, reference '" + reference.label + "' has " +
                              std::to_string(reference.records.size()));
        }
        auto remaining = by_script;
        std::vector<TokenSeq> c_tokens;
        std::vector<TokenSeq> r_tokens;
        std::vector<std::string> c_texts;
        std::vector<std::string> r_texts;
        for (std::size_t i = 0; i < cand.records.size(); ++i) {
            const auto& rec = cand.records[i];
            const auto it = remaining.find(script_key(rec.script));
            if (it == remaining.end()) {
                throw CorpusError("corpus '" + cand.label + "' record " + std::to_string(i + 1) +
                                  " has a script missing from reference '" + reference.label + "'");
            }
            const auto& ref = reference.records[it->second];
            remaining.erase(it);
            if (rec.dialogue.turns.empty() || ref.dialogue.turns.empty()) {
                continue;
            }
            const auto ct = turn_texts(rec);
            const auto rt = turn_texts(ref);
            for (std::size_t t = 0; t < std::min(ct.size(), rt.size()); ++t) {
                c_tokens.push_back(tokenize(ct[t]));
                r_tokens.push_back(tokenize(rt[t]));
                c_texts.push_back(ct[t]);
                r_texts.push_back(rt[t]);
            }
        }
        ComparisonRow row{cand.label, compute_stats(cand.records), std::nullopt, c_tokens.size(), {}};
        if (!c_tokens.empty()) {
            row.bleu = corpus_bleu(c_tokens, r_tokens);
            for (const auto& s : scorers) {
                row.extra.emplace_back(s->name(), s->score(c_texts, r_texts));
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace dialogen
