#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dialogen/record.hpp"

namespace dialogen {

/// Corpus files hold one CorpusRecord (to_json form) per line.
void write_records(std::ostream& out, const std::vector<CorpusRecord>& records);
void write_records(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);
/// Reads corpus files and script-paired exports alike.
std::vector<CorpusRecord> read_records(std::istream& in);
std::vector<CorpusRecord> read_records(const std::filesystem::path& path);

enum class ExportFormat { chat, script_paired };

std::string_view to_string(ExportFormat f);
std::optional<ExportFormat> parse_export_format(std::string_view text);

struct ExportOptions {
    ExportFormat format = ExportFormat::chat;
    bool include_flagged = false;
};

struct ExportManifest {
    std::string format;
    std::string file;
    std::size_t records_in = 0;
    std::size_t lines_written = 0;
    std::size_t flagged_excluded = 0;
    std::size_t unrealized_skipped = 0; // flagged records without any parsed dialogue
    std::size_t turns_written = 0;
    std::string sha256;
    std::string created_at;
    std::string pipeline_version{kPipelineVersion};
};

nlohmann::ordered_json to_json(const ExportManifest& m);

/// {"messages": [{"role", "content"}, ...]} per dialogue.
nlohmann::ordered_json chat_line(const CorpusRecord& record);

/// Writes `path` and `path` + ".manifest.json". Throws CorpusError for an
/// empty record set or an unwritable path.
ExportManifest export_jsonl(const std::vector<CorpusRecord>& records, const std::filesystem::path& path,
                            const ExportOptions& options = {});

std::filesystem::path manifest_path(const std::filesystem::path& export_path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

struct CorpusStats {
    std::size_t dialogue_count = 0;
    std::size_t turn_count = 0;
    std::size_t token_count = 0;
    double avg_turn_length = 0.0; // tokens per turn
    std::size_t unique_vocabulary = 0;

    bool operator==(const CorpusStats&) const = default;
};

nlohmann::ordered_json to_json(const CorpusStats& s);

/// Tokens come from the retrieval tokenizer. Records without turns add to
/// dialogue_count only.
CorpusStats compute_stats(const std::vector<CorpusRecord>& records);

using TokenSeq = std::vector<std::string>;

struct BleuResult {
    double score = 0.0;
    std::array<std::size_t, 4> matches{};    // clipped n-gram matches per order
    std::array<std::size_t, 4> candidates{}; // candidate n-grams per order
    std::size_t orders_used = 0;
    double brevity_penalty = 0.0;
    std::size_t candidate_length = 0;
    std::size_t reference_length = 0;
};

/// Corpus BLEU over aligned turn pairs: clipped n-gram precisions pooled for
/// n = 1..4, orders with no candidate n-grams dropped and the rest weighted
/// uniformly, no smoothing (any zero precision gives 0), BP = min(1, exp(1 - r/c)).
/// Throws CorpusError on a length mismatch, no pairs, or an empty reference.
BleuResult corpus_bleu_detail(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references);
double corpus_bleu(const std::vector<TokenSeq>& candidates, const std::vector<TokenSeq>& references);

/// Extension point for embedding-based similarity columns. None ships.
class SimilarityScorer {
public:
    virtual ~SimilarityScorer() = default;
    virtual std::string name() const = 0;
    virtual double score(const std::vector<std::string>& candidate_turns,
                         const std::vector<std::string>& reference_turns) const = 0;
};

struct LabeledCorpus {
    std::string label;
    std::vector<CorpusRecord> records;
};

struct ComparisonRow {
    std::string label;
    CorpusStats stats;
    std::optional<double> bleu; // absent for the reference corpus
    std::size_t aligned_turns = 0;
    std::vector<std::pair<std::string, double>> extra; // SimilarityScorer columns
};

struct ComparisonReport {
    std::string reference;
    std::vector<ComparisonRow> rows; // reference first, then candidates in input order
};

nlohmann::ordered_json to_json(const ComparisonReport& r);
std::string to_table(const ComparisonReport& r);

/// Candidate turns are scored against the reference turns of the same script.
/// Throws CorpusError when the candidate's scripts differ from the reference's.
ComparisonReport compare_models(const std::vector<LabeledCorpus>& candidates, const LabeledCorpus& reference,
                                const std::vector<std::shared_ptr<SimilarityScorer>>& scorers = {});

} // namespace dialogen
