#include <doctest.h>

#include <functional>
#include <set>
#include <sstream>

#include "dialogen/dialogue.hpp"
#include "dialogen/error.hpp"
#include "dialogen/retrieval.hpp"
#include "fixtures.hpp"
#include "oracles/state_oracle.hpp"

using namespace dialogen;

namespace {

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

DialogueState run(const std::vector<DialogueAct>& acts, const TfIdfIndex& index) {
    DialogueState s;
    for (const auto& a : acts) {
        s = apply_act(s, a, index);
    }
    return s;
}

} // namespace

TEST_CASE("act taxonomy sides") {
    for (auto t : kUserActs) {
        CHECK(is_user_act(t));
        CHECK_FALSE(is_system_act(t));
    }
    for (auto t : kSystemActs) {
        CHECK(is_system_act(t));
        CHECK_FALSE(is_user_act(t));
    }
    for (std::size_t i = 0; i < kActTypeCount; ++i) {
        const auto t = static_cast<ActType>(i);
        CHECK(parse_act_type(to_string(t)) == t);
    }
}

TEST_CASE("slot shapes") {
    CHECK_FALSE(DialogueAct::provide_query({"draw"}).slot_error());
    CHECK(DialogueAct::provide_query({}).slot_error());
    CHECK(DialogueAct::bare(ActType::Suggest).slot_error());
    CHECK(DialogueAct::list_options({}).slot_error());
    CHECK(DialogueAct::list_options({"a", "a"}).slot_error());
    CHECK_FALSE(DialogueAct::list_options({"a", "b"}).slot_error());
    auto pq = DialogueAct::provide_query({"x"});
    pq.symbol = "a";
    CHECK(pq.slot_error());
}

TEST_CASE("apply_act examples") {
    const auto index = build_index(fixtures::two_doc(), {.include_names = false});
    DialogueState s;
    s = apply_act(s, DialogueAct::provide_query({"draw"}), index);
    REQUIRE_FALSE(s.shortlist.empty());
    CHECK(s.shortlist.ranked[0].name == "d1");
    CHECK(s.turn == 0);

    s = apply_act(s, DialogueAct::with_symbol(ActType::Suggest, "d1"), index);
    CHECK(s.turn == 1);
    s = apply_act(s, DialogueAct::bare(ActType::ElicitSuggestion), index);
    s = apply_act(s, DialogueAct::with_symbol(ActType::Suggest, "d1"), index);
    CHECK(s.suggested.size() == 1);
    CHECK(s.suggested.count("d1") == 1);

    const auto done = apply_act(s, DialogueAct::with_symbol(ActType::Accept, "d1"), index);
    CHECK(done.terminal);
    CHECK_THROWS_AS(apply_act(done, DialogueAct::bare(ActType::ElicitQuery), index), DialogueError);
}

TEST_CASE("apply_act rejects misuse") {
    const auto index = build_index(fixtures::two_doc(), {.include_names = false});
    DialogueState s;
    CHECK_THROWS_AS(apply_act(s, DialogueAct::with_symbol(ActType::Suggest, "d1"), index), DialogueError);
    s = apply_act(s, DialogueAct::provide_query({"draw"}), index);
    CHECK_THROWS_AS(apply_act(s, DialogueAct::provide_query({"draw"}), index), DialogueError);
    s = apply_act(s, DialogueAct::bare(ActType::ElicitQuery), index);
    CHECK_THROWS_AS(apply_act(s, DialogueAct::with_symbol(ActType::RejectSuggestion, "d2"), index), DialogueError);
}

TEST_CASE("exhaustive enumeration against the brute-force tracker") {
    const auto kb = fixtures::three_symbols();
    const auto index = build_index(kb);
    std::vector<DialogueAct> alphabet{DialogueAct::provide_query({"draw", "circle"}),
                                      DialogueAct::provide_query({"sound"}),
                                      DialogueAct::bare(ActType::ElicitSuggestion),
                                      DialogueAct::bare(ActType::EndUser),
                                      DialogueAct::bare(ActType::ElicitQuery),
                                      DialogueAct::bare(ActType::EndSystem),
                                      DialogueAct::list_options({"alpha_fn", "beta_fn"}),
                                      DialogueAct::list_options({"gamma_fn"})};
    for (const auto& s : kb.symbols()) {
        for (auto t : {ActType::ElicitInfo, ActType::RejectSuggestion, ActType::Accept, ActType::Suggest,
                       ActType::Info}) {
            alphabet.push_back(DialogueAct::with_symbol(t, s.name));
        }
    }

    std::size_t states = 0;
    std::size_t rejections = 0;
    std::vector<DialogueAct> prefix;
    std::function<void(const DialogueState&)> dfs = [&](const DialogueState& state) {
        if (prefix.size() == 6) {
            return;
        }
        for (const auto& act : alphabet) {
            prefix.push_back(act);
            const auto expected = oracle::replay(prefix);
            bool threw = false;
            DialogueState next;
            try {
                next = apply_act(state, act, index);
            } catch (const DialogueError&) {
                threw = true;
            }
            REQUIRE(threw == expected.error);
            if (threw) {
                ++rejections;
                prefix.pop_back();
                continue;
            }
            ++states;
            CHECK(next.turn == expected.turn);
            CHECK(next.terminal == expected.terminal);
            CHECK(next.query_keywords == expected.keywords);
            CHECK(next.suggested == as_set(expected.suggested));
            CHECK(next.rejected == as_set(expected.rejected));
            CHECK(next.informed == as_set(expected.informed));
            CHECK(next.last_user_act() == expected.last_user);
            CHECK(next.last_system_act() == expected.last_system);
            for (const auto& r : next.rejected) {
                CHECK(next.suggested.count(r) == 1);
            }
            if (!next.query_keywords.empty()) {
                CHECK(next.shortlist.ranked == index.query(next.query_keywords, 10).ranked);
            }
            dfs(next);
            prefix.pop_back();
        }
    };
    dfs(DialogueState{});
    CHECK(states > 10000);
    CHECK(rejections > 0);
}

TEST_CASE("validate_script examples") {
    const KnowledgeBase kb({{"al_fixasin", SymbolKind::function, "", "inverse sine", ""}});
    CHECK(validate_script(fixtures::fig2_script(), kb).ok());

    auto bad_first = fixtures::fig2_script();
    bad_first.acts.erase(bad_first.acts.begin());
    const auto r1 = validate_script(bad_first, kb);
    CHECK(r1.count(ViolationKind::first_act) == 1);

    auto ungrounded = fixtures::fig2_script();
    ungrounded.acts[1].symbol = "nonexistent_fn";
    const auto r2 = validate_script(ungrounded, kb);
    REQUIRE(r2.count(ViolationKind::grounding) == 1);
    for (const auto& v : r2.violations) {
        if (v.kind == ViolationKind::grounding) {
            CHECK(v.act_index == 1);
            CHECK(v.message.find("nonexistent_fn") != std::string::npos);
        }
    }

    CHECK(validate_script(fixtures::fig2_script(false), kb).count(ViolationKind::termination) == 1);

    auto swapped = fixtures::fig2_script();
    std::swap(swapped.acts[2], swapped.acts[3]);
    CHECK(validate_script(swapped, kb).count(ViolationKind::alternation) >= 1);

    auto shape = fixtures::fig2_script();
    shape.acts[1].symbol.reset();
    CHECK(validate_script(shape, kb).count(ViolationKind::slot_shape) == 1);
}

TEST_CASE("turn cap flag") {
    const KnowledgeBase kb({{"a", SymbolKind::function, "", "x", ""}});
    Script s;
    s.goal_symbol = "a";
    for (int i = 0; i < 2; ++i) {
        s.acts.push_back(DialogueAct::provide_query({"x"}));
        s.acts.push_back(DialogueAct::bare(ActType::ElicitQuery));
    }
    CHECK(validate_script(s, kb, 2).count(ViolationKind::termination) == 1);
    s.metadata.turn_cap_reached = true;
    CHECK(validate_script(s, kb, 2).ok());
    s.acts.push_back(DialogueAct::provide_query({"x"}));
    s.acts.push_back(DialogueAct::bare(ActType::ElicitQuery));
    CHECK(validate_script(s, kb, 2).count(ViolationKind::length) == 1);
}

TEST_CASE("script JSON round trip") {
    auto s = fixtures::fig2_script();
    s.acts.insert(s.acts.begin() + 1, DialogueAct::list_options({"a", "b"}));
    s.acts.insert(s.acts.begin() + 2, DialogueAct::bare(ActType::ElicitSuggestion));
    s.seed = 18446744073709551615ULL;
    std::stringstream buf;
    write_scripts(buf, {s, fixtures::fig2_script(false)});
    const auto back = read_scripts(buf);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == s);
    CHECK(back[1] == fixtures::fig2_script(false));
    CHECK_THROWS(script_from_json(nlohmann::json::parse(
        R"({"goal_symbol":"a","success":true,"seed":1,"acts":[{"type":"Nope"}],"metadata":{}})")));
}
