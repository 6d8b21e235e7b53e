#include <doctest.h>

#include <sstream>

#include "dialogen/error.hpp"
#include "dialogen/kb.hpp"
#include "fixtures.hpp"

using namespace dialogen;

namespace {

KnowledgeBase from_text(const std::string& text) {
    std::istringstream in(text);
    return ingest(in);
}

std::string error_of(const std::string& text) {
    try {
        from_text(text);
    } catch (const KbError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("single record ingests") {
    const auto kb = from_text(
        R"({"name":"al_fixasin","kind":"function","description":"Returns the inverse sine of a fixed point value."})");
    CHECK(kb.size() == 1);
    CHECK(kb.contains("al_fixasin"));
    CHECK(kb[0].signature.empty());
}

TEST_CASE("empty file is rejected") {
    CHECK(error_of("") == "empty knowledge base");
    CHECK(error_of("\n\n  \n") == "empty knowledge base");
}

TEST_CASE("duplicate names name the second record") {
    const auto msg = error_of(R"({"name":"al_fixasin","kind":"function","description":"a"}
{"name":"al_fixasin","kind":"function","description":"b"})");
    CHECK(msg.find("record 2") != std::string::npos);
    CHECK(msg.find("al_fixasin") != std::string::npos);
}

TEST_CASE("malformed records report their line") {
    CHECK(error_of("{\"name\":\"a\",\"kind\":\"function\",\"description\":\"x\"}\nnot json").find("record 2") !=
          std::string::npos);
    CHECK(!error_of(R"({"name":"a","kind":"gizmo","description":"x"})").empty());
    CHECK(!error_of(R"({"name":"a b","kind":"function","description":"x"})").empty());
    CHECK(!error_of(R"({"name":"a","kind":"function","description":""})").empty());
    CHECK(!error_of(R"({"name":"a","kind":"function","description":"x","extra":1})").empty());
    CHECK(!error_of(R"({"kind":"function","description":"x"})").empty());
}

TEST_CASE("unreadable file") {
    CHECK_THROWS_AS(ingest(std::filesystem::path("/nonexistent/kb.jsonl")), KbError);
}

TEST_CASE("lookup is exact and case-sensitive") {
    const auto kb = fixtures::kb20();
    REQUIRE(lookup(kb, "al_fixasin"));
    CHECK(lookup(kb, "al_fixasin")->name == "al_fixasin");
    CHECK_FALSE(lookup(kb, "missing"));
    CHECK_FALSE(lookup(kb, "AL_FIXASIN"));
    for (std::size_t i = 0; i < kb.size(); ++i) {
        CHECK(*lookup(kb, kb[i].name) == kb[i]);
    }
}

TEST_CASE("export then ingest is the identity") {
    const KnowledgeBase kb({
        {"al_fixasin", SymbolKind::function, "al_fixed al_fixasin(al_fixed x)", "inverse sine", "math"},
        {"ALLEGRO_BITMAP", SymbolKind::type, "", "an image in memory", "graphics"},
        {"AL_PI", SymbolKind::constant, "", "pi as a double", ""},
        {"AL_ID", SymbolKind::macro, "AL_ID(a, b, c, d)", "packs four characters", "misc"},
        {"allegro_audio", SymbolKind::module, "", "the audio addon \"quoted\" é", "addons"},
    });
    std::stringstream buf;
    export_kb(kb, buf);
    CHECK(ingest(buf) == kb);

    const auto sample = fixtures::kb20();
    std::stringstream buf2;
    export_kb(sample, buf2);
    CHECK(ingest(buf2) == sample);
}

TEST_CASE("ingestion order is preserved") {
    const auto kb = fixtures::kb20();
    CHECK(kb.size() == 20);
    CHECK(kb[0].name == "al_fixasin");
    CHECK(kb.position("al_fixacos") == 1);
}
