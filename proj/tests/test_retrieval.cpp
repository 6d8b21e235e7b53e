#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dialogen/retrieval.hpp"
#include "fixtures.hpp"
#include "oracles/tfidf_oracle.hpp"

using namespace dialogen;

namespace {

std::vector<std::string> v(std::initializer_list<const char*> items) {
    return {items.begin(), items.end()};
}

oracle::BruteTfIdf brute_of(const KnowledgeBase& kb, bool names) {
    std::vector<std::string> n;
    std::vector<std::string> texts;
    for (const auto& s : kb.symbols()) {
        n.push_back(s.name);
        texts.push_back(names ? s.description + " " + s.name : s.description);
    }
    return {n, texts};
}

} // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("al_fixasin(AL_FIXED y)") == v({"al_fixasin", "al_fixed", "y"}));
    CHECK(tokenize("").empty());
    CHECK(tokenize("draw Bitmap, draw!") == v({"draw", "bitmap", "draw"}));
    CHECK(tokenize("5000-hole") == v({"5000", "hole"}));
    CHECK(tokenize("caf\xc3\xa9 \xe2\x80\x94 na\xc3\xafve") == v({"caf\xc3\xa9", "na\xc3\xafve"}));
    CHECK(tokenize("a\xff" "b") == v({"a", "b"}));
}

TEST_CASE("idf hand values on the two-document fixture") {
    const auto index = build_index(fixtures::two_doc(), {.include_names = false});
    CHECK(index.doc_count() == 2);
    CHECK(index.idf("bitmap") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(index.idf("draw") == doctest::Approx(std::log(1.5) + 1.0).epsilon(1e-12));
    CHECK(index.idf("draw") == doctest::Approx(1.405465).epsilon(1e-6));
    CHECK(index.idf("zzz") == 0.0);
}

TEST_CASE("single document: every idf is 1") {
    const KnowledgeBase kb({{"only", SymbolKind::function, "", "one two three", ""}});
    const auto index = build_index(kb);
    for (std::uint32_t t = 0; t < index.vocabulary_size(); ++t) {
        CHECK(index.idf(t) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("query hand value") {
    const auto index = build_index(fixtures::two_doc(), {.include_names = false});
    const auto draw = *index.term_id("draw");
    const auto bitmap = *index.term_id("bitmap");
    double wd = 0;
    double wb = 0;
    for (const auto& tw : index.doc_vector(0)) {
        if (tw.term == draw) {
            wd = tw.weight;
        }
        if (tw.term == bitmap) {
            wb = tw.weight;
        }
    }
    CHECK(wd == doctest::Approx(0.81480).epsilon(1e-4));
    CHECK(wb == doctest::Approx(0.57974).epsilon(1e-4));

    const auto r = index.query(v({"draw"}), 2);
    REQUIRE(r.size() == 1);
    CHECK(r.ranked[0].name == "d1");
    CHECK(r.ranked[0].score == doctest::Approx(0.8148).epsilon(1e-4));
    CHECK_FALSE(r.contains("d2"));
    CHECK(index.query(v({"zzz_unknown"}), 3).empty());
    CHECK_THROWS(index.query(v({"draw"}), 0));
}

TEST_CASE("doc vectors are unit length") {
    const auto index = build_index(fixtures::kb20());
    for (std::size_t d = 0; d < index.doc_count(); ++d) {
        double n = 0;
        for (const auto& tw : index.doc_vector(d)) {
            n += tw.weight * tw.weight;
        }
        CHECK(std::abs(n - 1.0) < 1e-9);
    }
    for (std::uint32_t t = 0; t < index.vocabulary_size(); ++t) {
        CHECK(index.document_frequency(t) >= 1);
    }
}

TEST_CASE("oracle equivalence on the 20-symbol fixture") {
    const auto kb = fixtures::kb20();
    for (const bool names : {true, false}) {
        const auto index = build_index(kb, {.include_names = names});
        const auto brute = brute_of(kb, names);
        std::vector<std::vector<std::string>> queries;
        for (const auto& s : kb.symbols()) {
            queries.push_back(tokenize(s.description));
            auto t = tokenize(s.description);
            queries.push_back({t.begin(), t.begin() + std::min<std::ptrdiff_t>(3, static_cast<std::ptrdiff_t>(t.size()))});
            queries.push_back({s.name});
        }
        queries.push_back(v({"bitmap", "draw", "bitmap", "zzz"}));
        queries.push_back(v({"fixed", "point"}));
        for (const auto& q : queries) {
            const auto got = index.query(q, 20);
            const auto want = brute.query(q, 20);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < want.size(); ++i) {
                CHECK(got.ranked[i].name == want[i].first);
                CHECK(std::abs(got.ranked[i].score - want[i].second) <= 1e-9);
            }
        }
    }
}

TEST_CASE("self-retrieval on unique descriptions") {
    for (const auto& kb : {fixtures::kb10(), fixtures::kb20()}) {
        const auto index = build_index(kb);
        for (const auto& s : kb.symbols()) {
            const auto r = index.query(tokenize(s.description), 1);
            REQUIRE(r.size() == 1);
            CHECK(r.ranked[0].name == s.name);
        }
    }
}

TEST_CASE("scores ignore keyword order and ties sort by name") {
    const auto index = build_index(fixtures::kb20());
    const auto a = index.query(v({"bitmap", "draw", "angle"}), 10);
    const auto b = index.query(v({"angle", "bitmap", "draw"}), 10);
    CHECK(a.ranked == b.ranked);
    for (std::size_t i = 1; i < a.size(); ++i) {
        CHECK(a.ranked[i - 1].score >= a.ranked[i].score);
        if (a.ranked[i - 1].score == a.ranked[i].score) {
            CHECK(a.ranked[i - 1].name < a.ranked[i].name);
        }
    }

    const KnowledgeBase twins({{"zeta", SymbolKind::function, "", "same words", ""},
                               {"alpha", SymbolKind::function, "", "same words", ""}});
    const auto r = build_index(twins, {.include_names = false}).query(v({"same"}), 2);
    REQUIRE(r.size() == 2);
    CHECK(r.ranked[0].name == "alpha");
    CHECK(r.ranked[0].score == r.ranked[1].score);
}

TEST_CASE("empty documents are counted") {
    const KnowledgeBase kb({{"a", SymbolKind::function, "", "...", ""}, {"b", SymbolKind::function, "", "real text", ""}});
    const auto index = build_index(kb, {.include_names = false});
    CHECK(index.empty_documents() == 1);
    CHECK(index.doc_vector(0).empty());
}
