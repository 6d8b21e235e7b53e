#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dialogen/corpus.hpp"
#include "dialogen/error.hpp"
#include "fixtures.hpp"
#include "oracles/bleu_oracle.hpp"
#include "oracles/mutants.hpp"

using namespace dialogen;

namespace {

TokenSeq words(const std::string& text) {
    TokenSeq out;
    std::istringstream in(text);
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

CorpusRecord record_with(const std::vector<std::string>& texts, std::uint64_t seed = 1) {
    CorpusRecord r;
    r.script.seed = seed;
    r.script.goal_symbol = "g";
    for (std::size_t i = 0; i < texts.size(); ++i) {
        r.script.acts.push_back(i % 2 == 0 ? DialogueAct::bare(ActType::ElicitSuggestion)
                                           : DialogueAct::bare(ActType::ElicitQuery));
        r.dialogue.turns.push_back({i % 2 == 0 ? Role::user : Role::assistant, texts[i], i});
    }
    r.provenance.attempts = 1;
    return r;
}

std::vector<CorpusRecord> realized(std::size_t n, std::uint64_t seed) {
    const auto kb = fixtures::kb20();
    std::vector<CorpusRecord> out;
    std::size_t pos = 0;
    for (auto& s : oracle::compliant_samples(kb, n, seed)) {
        CorpusRecord r;
        r.provenance = {"stub-model", "stub", std::string(kPipelineVersion), 1, trace_id_for(s.script, pos++)};
        r.dialogue = std::move(s.dialogue);
        r.dialogue.model_id = "stub-model";
        r.script = std::move(s.script);
        out.push_back(std::move(r));
    }
    return out;
}

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "dialogen_test_corpus";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

} // namespace

TEST_CASE("corpus BLEU") {
    SUBCASE("hand computed example") {
        const auto d = corpus_bleu_detail({words("the cat sat")}, {words("the cat sat down")});
        CHECK(d.orders_used == 3);
        CHECK(d.brevity_penalty == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)));
        CHECK(d.score == doctest::Approx(0.716531).epsilon(1e-6));
    }
    SUBCASE("identity and disjoint") {
        const std::vector<TokenSeq> c{words("open the display"), words("use al_draw_bitmap for that")};
        CHECK(corpus_bleu(c, c) == doctest::Approx(1.0));
        CHECK(corpus_bleu({words("x y z")}, {words("a b c")}) == 0.0);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(corpus_bleu({}, {}), CorpusError);
        CHECK_THROWS_AS(corpus_bleu({words("a")}, {words("a"), words("b")}), CorpusError);
        CHECK_THROWS_AS(corpus_bleu({words("a")}, {TokenSeq{}}), CorpusError);
        CHECK(corpus_bleu({TokenSeq{}}, {words("a")}) == 0.0);
    }
    SUBCASE("agrees with brute-force counting") {
        Rng rng(2024);
        const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
        for (int trial = 0; trial < 2000; ++trial) {
            const auto pairs = uniform_index(rng, 1, 5);
            std::vector<TokenSeq> cands;
            std::vector<TokenSeq> refs;
            for (std::size_t p = 0; p < pairs; ++p) {
                TokenSeq c(uniform_index(rng, 0, 8));
                TokenSeq r(uniform_index(rng, 1, 8));
                for (auto& t : c) {
                    t = vocab[uniform_index(rng, 0, vocab.size() - 1)];
                }
                for (auto& t : r) {
                    t = vocab[uniform_index(rng, 0, vocab.size() - 1)];
                }
                cands.push_back(c);
                refs.push_back(r);
            }
            const double got = corpus_bleu(cands, refs);
            CHECK(std::abs(got - oracle::brute_bleu(cands, refs)) <= 1e-9);
            CHECK(got >= 0.0);
            CHECK(got <= 1.0);
            CHECK(corpus_bleu(refs, refs) == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("compute_stats") {
    const auto s = compute_stats({record_with({"a b c", "d e"})});
    CHECK(s.dialogue_count == 1);
    CHECK(s.turn_count == 2);
    CHECK(s.token_count == 5);
    CHECK(s.avg_turn_length == 2.5);
    CHECK(s.unique_vocabulary == 5);

    CHECK(compute_stats({}) == CorpusStats{});

    auto records = realized(40, 8);
    const auto base = compute_stats(records);
    CHECK(base.unique_vocabulary <= base.token_count);
    std::reverse(records.begin(), records.end());
    CHECK(compute_stats(records) == base);
    std::rotate(records.begin(), records.begin() + 13, records.end());
    CHECK(compute_stats(records) == base);
    CHECK(to_json(base)["avg_turn_length"] == base.avg_turn_length);
}

TEST_CASE("record serialization") {
    auto records = realized(10, 4);
    records[3].violations.push_back({Constraint::symbol_licensing, 0, "al_fixasin", "named too early"});
    std::stringstream buf;
    write_records(buf, records);
    CHECK(read_records(buf) == records);
    std::stringstream bad("{\"script\": 1}\n");
    CHECK_THROWS_AS(read_records(bad), CorpusError);
}

TEST_CASE("export_jsonl") {
    const auto records = realized(250, 6);

    SUBCASE("chat format, 250 records") {
        const auto path = temp_path("chat.jsonl");
        const auto m = export_jsonl(records, path);
        CHECK(m.lines_written == 250);
        const auto lines = lines_of(path);
        REQUIRE(lines.size() == 250);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto j = nlohmann::json::parse(lines[i]);
            REQUIRE(j.contains("messages"));
            CHECK(j["messages"].size() == records[i].dialogue.turns.size());
            CHECK(j["messages"][0]["role"] == "user");
            CHECK(j["messages"][0]["content"] == records[i].dialogue.turns[0].text);
        }
        std::ifstream in(path, std::ios::binary);
        const std::string bytes((std::istreambuf_iterator<char>(in)), {});
        CHECK(m.sha256 == sha256_hex(bytes));
        const auto manifest = nlohmann::json::parse(std::ifstream(manifest_path(path)));
        CHECK(manifest["lines_written"] == 250);
        CHECK(manifest["sha256"] == m.sha256);
        CHECK(manifest["format"] == "chat");
    }
    SUBCASE("flagged records are filtered unless asked for") {
        auto mixed = records;
        mixed[0].violations.push_back({Constraint::keyword_coverage, 0, "holes", "missing"});
        mixed[5].violations.push_back({Constraint::turn_structure, 2, "", "blank"});
        mixed[5].dialogue.turns.clear();
        const auto path = temp_path("filtered.jsonl");
        auto m = export_jsonl(mixed, path);
        CHECK(m.lines_written == 248);
        CHECK(m.flagged_excluded == 2);
        CHECK(lines_of(path).size() == 248);
        m = export_jsonl(mixed, path, {ExportFormat::chat, true});
        CHECK(m.lines_written == 249);
        CHECK(m.unrealized_skipped == 1);
    }
    SUBCASE("script-paired round trip") {
        const auto path = temp_path("paired.jsonl");
        export_jsonl(records, path, {ExportFormat::script_paired, false});
        std::vector<CorpusRecord> back;
        for (const auto& line : lines_of(path)) {
            const auto j = nlohmann::json::parse(line);
            CHECK(j.contains("messages"));
            back.push_back(record_from_json(j));
        }
        CHECK(back == records);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(export_jsonl({}, temp_path("empty.jsonl")), CorpusError);
        CHECK_THROWS_AS(export_jsonl(records, "/proc/dialogen/nope.jsonl"), Error);
    }
    SUBCASE("known hash") {
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}

TEST_CASE("compare_models") {
    const auto reference = realized(15, 9);

    SUBCASE("a corpus against itself") {
        const auto r = compare_models({{"copy", reference}}, {"teacher", reference});
        REQUIRE(r.rows.size() == 2);
        CHECK(r.rows[0].label == "teacher");
        CHECK_FALSE(r.rows[0].bleu.has_value());
        CHECK(*r.rows[1].bleu == doctest::Approx(1.0));
        CHECK(r.rows[0].stats == r.rows[1].stats);
        const auto table = to_table(r);
        CHECK(table.find("BLEU") != std::string::npos);
        CHECK(table.find("1.000") != std::string::npos);
        CHECK(to_json(r)["avg_len_unit"] == "tokens per turn");
    }
    SUBCASE("single-record corpora from the hand example") {
        const auto cand = record_with({"the cat sat"});
        const auto ref = record_with({"the cat sat down"});
        const auto r = compare_models({{"student", {cand}}}, {"teacher", {ref}});
        CHECK(*r.rows[1].bleu == doctest::Approx(0.716531).epsilon(1e-6));
    }
    SUBCASE("alignment is by script, not position") {
        auto shuffled = reference;
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(*compare_models({{"s", shuffled}}, {"t", reference}).rows[1].bleu == doctest::Approx(1.0));
    }
    SUBCASE("script mismatch") {
        auto other = reference;
        other[2].script.seed += 1000;
        CHECK_THROWS_AS(compare_models({{"s", other}}, {"t", reference}), CorpusError);
        other = reference;
        other.pop_back();
        CHECK_THROWS_AS(compare_models({{"s", other}}, {"t", reference}), CorpusError);
    }
}

TEST_CASE("chat export matches the frozen fixture consumed by the fine-tune harness") {
    const auto kb = fixtures::kb20();
    const auto index = build_index(kb);
    const PlanningContext ctx{kb, index};
    std::vector<CorpusRecord> records;
    std::size_t pos = 0;
    for (const auto& s : plan_batch(ctx, UniformRandomPolicy{}, 10, 2024)) {
        CorpusRecord r;
        r.dialogue = parse_response(stub::realize_turns(script_prompt_json(s, &kb)).dump(), s);
        r.provenance = {"stub-model", "stub", std::string(kPipelineVersion), 1, trace_id_for(s, pos++)};
        r.script = s;
        records.push_back(r);
    }
    const auto path = temp_path("golden.jsonl");
    export_jsonl(records, path);
    std::ifstream a(path, std::ios::binary);
    std::ifstream b(fixtures::source_dir() / "tests" / "fixtures" / "chat_export_10.jsonl", std::ios::binary);
    const std::string got((std::istreambuf_iterator<char>(a)), {});
    const std::string want((std::istreambuf_iterator<char>(b)), {});
    REQUIRE_FALSE(want.empty());
    CHECK(got == want);
}
