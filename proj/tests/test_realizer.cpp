#include <doctest.h>

#include <sstream>

#include "dialogen/error.hpp"
#include "dialogen/log.hpp"
#include "dialogen/prompt.hpp"
#include "dialogen/realizer.hpp"
#include "fixtures.hpp"
#include "oracles/mutants.hpp"
#include "stub/stub_server.hpp"

using namespace dialogen;
using namespace std::chrono_literals;

namespace {

std::string array_of(const std::vector<std::pair<std::string, std::string>>& turns) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [role, text] : turns) {
        a.push_back({{"role", role}, {"text", text}});
    }
    return a.dump();
}

RealizedDialogue dialogue_of(const std::vector<std::string>& texts) {
    RealizedDialogue d;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        d.turns.push_back({i % 2 == 0 ? Role::user : Role::assistant, texts[i], i});
    }
    return d;
}

bool has_subject(const RealizationReport& r, Constraint c, const std::string& subject) {
    return std::any_of(r.violations.begin(), r.violations.end(),
                       [&](const auto& v) { return v.constraint == c && v.subject == subject; });
}

} // namespace

TEST_CASE("prompt template") {
    const auto tmpl = PromptTemplate::load(fixtures::prompt_path());
    CHECK_NOTHROW(tmpl.validate());
    const auto kb = fixtures::kb20();
    const auto script = fixtures::fig2_script();

    SUBCASE("rendered messages carry the keywords and no placeholders") {
        const auto msgs = build_prompt(script, tmpl, &kb);
        REQUIRE(msgs.size() == 2);
        CHECK(msgs[0].role == "system");
        CHECK(msgs[1].role == "user");
        for (const char* kw : {"distinct", "5000", "holes", "fixasin"}) {
            CHECK(msgs[1].content.find(kw) != std::string::npos);
        }
        for (const auto& m : msgs) {
            CHECK(placeholders(m.content).empty());
        }
        CHECK(msgs[1].content.find("al_fixasin") != std::string::npos);
    }
    SUBCASE("empty style rules still render") {
        const auto msgs = build_prompt(script, tmpl, &kb, PromptOptions{std::string{}});
        CHECK_FALSE(msgs[0].content.empty());
        CHECK(placeholders(msgs[0].content).empty());
    }
    SUBCASE("broken templates are rejected") {
        auto bad = tmpl;
        bad.user_template += "\n{SCRIPT_JSON}";
        CHECK_THROWS_AS(bad.validate(), TemplateError);
        bad = tmpl;
        bad.system_template = "no rules slot";
        CHECK_THROWS_AS(bad.validate(), TemplateError);
        CHECK_THROWS_AS(render("hello {WHO}", {}), TemplateError);
        CHECK(render("{A}{B}", {{"A", "{B}"}, {"B", "x"}}) == "{B}x");
        CHECK_THROWS_AS(PromptTemplate::parse("[[system]]\nonly\n"), TemplateError);
    }
    SUBCASE("correction note lands in the last user message") {
        const auto base = build_prompt(script, tmpl, &kb);
        const auto fixed = with_correction(base, tmpl, {"turn 0: keyword 'holes' is missing"});
        CHECK(fixed[0] == base[0]);
        CHECK(fixed[1].content.find("keyword 'holes' is missing") != std::string::npos);
        CHECK(fixed[1].content.rfind(base[1].content, 0) == 0);
    }
}

TEST_CASE("parse_response") {
    const auto script = fixtures::fig2_script(false);
    const std::string four = array_of({{"user", "a"}, {"assistant", "b"}, {"user", "c"}, {"assistant", "d"}});

    const auto d = parse_response(four, script);
    REQUIRE(d.turns.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(d.turns[i].act_index == i);
        CHECK(d.turns[i].role == role_of(script.acts[i].type));
    }

    const std::string three = array_of({{"user", "a"}, {"assistant", "b"}, {"user", "c"}});
    CHECK_THROWS_WITH_AS(parse_response(three, script), "response has 3 turns, script has 4", ParseError);

    CHECK(parse_response("Sure! Here it is:\n```json\n" + four + "\n```\nEnjoy.", script) == d);
    CHECK(parse_response("see [1] first, then " + four, script) == d);
    CHECK_THROWS_AS(parse_response("no array here", script), ParseError);
    CHECK_THROWS_AS(parse_response(array_of({{"user", "a"}, {"assistant", " "}, {"user", "c"}, {"assistant", "d"}}),
                                   script),
                    ParseError);
    CHECK_THROWS_AS(parse_response(array_of({{"assistant", "a"}, {"assistant", "b"}, {"user", "c"}, {"assistant", "d"}}),
                                   script),
                    ParseError);
    CHECK_THROWS_AS(parse_response("prose " + four, script, ParseOptions{.strict = true}), ParseError);
    CHECK(parse_response(four, script, ParseOptions{.strict = true}) == d);

    SUBCASE("serialize then parse is the identity") {
        const auto kb = fixtures::kb20();
        for (const auto& s : oracle::compliant_samples(kb, 50, 12)) {
            CHECK(parse_response(to_output_array(s.dialogue).dump(), s.script) == s.dialogue);
        }
    }
}

TEST_CASE("validate_realization") {
    const auto kb = fixtures::kb20();
    const auto script = fixtures::fig2_script(false);
    const std::vector<std::string> rest{"You could try al_fixasin.", "What does al_fixasin do exactly?",
                                        "al_fixasin computes the arc sine of a fixed point value."};

    SUBCASE("a turn covering all four keywords passes C1") {
        auto texts = rest;
        texts.insert(texts.begin(), "I need to triangulate a shape with 5000 distinct holes and wire in some "
                                    "fixasin logic for the angles.");
        const auto r = validate_realization(dialogue_of(texts), script, kb);
        CHECK(r.count(Constraint::keyword_coverage) == 0);
        CHECK(r.ok());
    }
    SUBCASE("a turn without 'distinct' fails C1 naming it") {
        auto texts = rest;
        texts.insert(texts.begin(), "How do I create a 5000-hole fixasin shape?");
        const auto r = validate_realization(dialogue_of(texts), script, kb);
        CHECK(has_subject(r, Constraint::keyword_coverage, "distinct"));
        CHECK_FALSE(has_subject(r, Constraint::keyword_coverage, "5000"));
        CHECK_FALSE(has_subject(r, Constraint::keyword_coverage, "fixasin"));
        for (const auto& v : r.violations) {
            CHECK(v.turn == 0u);
        }
    }
    SUBCASE("naming the symbol before its act is a C2 violation at turn 0") {
        auto texts = rest;
        texts.insert(texts.begin(), "Working with 5000 distinct holes, maybe al_fixasin or fixasin helps?");
        const auto r = validate_realization(dialogue_of(texts), script, kb);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].constraint == Constraint::symbol_licensing);
        CHECK(r.violations[0].turn == 0u);
        CHECK(r.violations[0].subject == "al_fixasin");
    }
    SUBCASE("matching helpers") {
        CHECK(keyword_covered("5000", tokenize("a 5000-hole plate")));
        CHECK_FALSE(keyword_covered("500", tokenize("a 5000-hole plate")));
        CHECK(keyword_covered("hole", tokenize("many holes")));
        CHECK(keyword_covered("Bitmap", tokenize("BITMAPS everywhere")));
        CHECK(mentions_symbol("call AL_FIXASIN() now", "al_fixasin"));
        CHECK_FALSE(mentions_symbol("call al_fixasin2() now", "al_fixasin"));
        CHECK_FALSE(mentions_symbol("my_al_fixasin", "al_fixasin"));
    }
    SUBCASE("seeded mutants are all caught and originals pass") {
        const auto samples = oracle::compliant_samples(kb, 300, 31);
        const auto mutants = oracle::seeded_mutants(samples, kb, 20);
        CHECK(mutants.size() == 60);
        const auto score = oracle::score_mutants(samples, mutants, kb);
        CHECK(score.caught == score.mutants);
        CHECK(score.false_alarms == 0);
        for (const auto& m : mutants) {
            const auto r = validate_realization(m.dialogue, m.script, kb);
            INFO(m.what);
            CHECK(r.count(m.target) > 0);
        }
    }
}

TEST_CASE("realize against the stub") {
    const auto kb = fixtures::kb20();
    const auto tmpl = PromptTemplate::load(fixtures::prompt_path());
    const auto script = fixtures::fig2_script();
    stub::Server server;
    server.start();
    EndpointConfig e;
    e.name = "stub";
    e.base_url = server.base_url();
    e.model_id = "stub-model";
    e.timeout = 5000ms;
    CallOptions call;
    call.retry.base = 1ms;

    SUBCASE("compliant on the first attempt") {
        const auto r = realize(script, tmpl, e, kb, {}, call);
        CHECK_FALSE(r.flagged());
        CHECK(r.provenance.attempts == 1);
        CHECK(r.provenance.endpoint == "stub");
        CHECK(r.provenance.model_id == "stub-model");
        CHECK(r.dialogue.turns.size() == script.acts.size());
        CHECK(server.handler().request_count() == 1);
    }
    SUBCASE("a leak then a clean reply is accepted on attempt 2") {
        server.handler().enqueue(stub::Reply::leak());
        const auto r = realize(script, tmpl, e, kb, {}, call);
        CHECK_FALSE(r.flagged());
        CHECK(r.provenance.attempts == 2);
        const auto seen = server.handler().requests();
        REQUIRE(seen.size() == 2);
        const std::string retry_prompt = seen[1]["messages"][1]["content"];
        CHECK(retry_prompt.find("al_fixasin") != std::string::npos);
        CHECK(retry_prompt.size() > seen[0]["messages"][1]["content"].get<std::string>().size());
    }
    SUBCASE("max_regen 0 keeps the failure as a flagged record") {
        server.handler().set_default(stub::Reply::leak());
        RealizeOptions opts;
        opts.max_regen = 0;
        const auto r = realize(script, tmpl, e, kb, opts, call);
        CHECK(r.flagged());
        CHECK(r.provenance.attempts == 1);
        REQUIRE_FALSE(r.violations.empty());
        CHECK(r.violations[0].constraint == Constraint::symbol_licensing);
        CHECK(r.script == script);
        CHECK(server.handler().request_count() == 1);
    }
    SUBCASE("persistent failure uses every attempt, one call each") {
        server.handler().set_default(stub::Reply::drop_keyword());
        const auto r = realize(script, tmpl, e, kb, {}, call);
        CHECK(r.flagged());
        CHECK(r.provenance.attempts == 3);
        CHECK(r.violations[0].constraint == Constraint::keyword_coverage);
        CHECK(server.handler().request_count() == 3);
    }
    SUBCASE("unparseable replies become response_format violations") {
        server.handler().set_default(stub::Reply::content("I'd rather not."));
        RealizeOptions opts;
        opts.max_regen = 1;
        const auto r = realize(script, tmpl, e, kb, opts, call);
        CHECK(r.flagged());
        CHECK(r.violations[0].constraint == Constraint::response_format);
        CHECK(server.handler().request_count() == 2);
    }
    SUBCASE("fenced replies are accepted") {
        server.handler().enqueue(stub::Reply::fenced());
        CHECK_FALSE(realize(script, tmpl, e, kb, {}, call).flagged());
    }
    SUBCASE("endpoint errors propagate") {
        server.handler().set_default(stub::Reply::http_status(401));
        CHECK_THROWS_AS(realize(script, tmpl, e, kb, {}, call), EndpointError);
    }
    SUBCASE("one call per script whatever its length, output in input order") {
        const auto index = build_index(kb);
        const PlanningContext ctx{kb, index};
        const auto scripts = plan_batch(ctx, UniformRandomPolicy{}, 24, 3);
        std::ostringstream log_text;
        JsonLogger log(log_text);
        RealizeOptions opts;
        opts.concurrency = 4;
        opts.log = &log;
        const auto records = realize_batch(scripts, tmpl, e, kb, opts, call);
        REQUIRE(records.size() == scripts.size());
        for (std::size_t i = 0; i < scripts.size(); ++i) {
            CHECK(records[i].script == scripts[i]);
            CHECK(records[i].provenance.attempts == 1);
            CHECK(records[i].provenance.trace_id == trace_id_for(scripts[i], i));
        }
        CHECK(server.handler().request_count() == scripts.size());
        std::istringstream lines(log_text.str());
        std::size_t events = 0;
        for (std::string line; std::getline(lines, line);) {
            const auto j = nlohmann::json::parse(line);
            events += j["event"] == "realize_attempt" ? 1 : 0;
            CHECK(line.find("Bearer") == std::string::npos);
        }
        CHECK(events == scripts.size());
    }
    server.stop();
}
