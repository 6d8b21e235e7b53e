#include "dialogen/simulator.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::string random_numeral(Rng& rng) {
    const auto digit = uniform_index(rng, 1, 9);
    const auto zeros = uniform_index(rng, 0, 3);
    return std::to_string(digit) + std::string(zeros, '0');
}

// Off-goal replacement: a vocabulary term that is neither a symbol name nor
// in the goal's pool, or a numeral, with equal odds.
std::string noise_token(const UserGoal& goal, const TfIdfIndex& index, Rng& rng) {
    const bool use_vocabulary = bernoulli(rng, 0.5);
    if (use_vocabulary) {
        std::vector<std::uint32_t> candidates;
        candidates.reserve(index.vocabulary_size());
        for (std::uint32_t t = 0; t < index.vocabulary_size(); ++t) {
            if (index.is_symbol_name(t)) {
                continue;
            }
            const auto& term = index.term(t);
            if (std::find(goal.keyword_pool.begin(), goal.keyword_pool.end(), term) !=
                goal.keyword_pool.end()) {
                continue;
            }
            candidates.push_back(t);
        }
        if (!candidates.empty()) {
            return index.term(candidates[uniform_index(rng, 0, candidates.size() - 1)]);
        }
    }
    for (;;) {
        auto numeral = random_numeral(rng);
        if (std::find(goal.keyword_pool.begin(), goal.keyword_pool.end(), numeral) ==
            goal.keyword_pool.end()) {
            return numeral;
        }
    }
}

DialogueAct fresh_query(const UserGoal& goal, const BehaviorParams& params,
                        const TfIdfIndex& index, Rng& rng) {
    return DialogueAct::provide_query(draw_query_keywords(goal, params, index, rng));
}

// After a rejection (or a description of the wrong symbol) the user either
// reformulates or asks for something else.
DialogueAct follow_up(const UserGoal& goal, const BehaviorParams& params,
                      const TfIdfIndex& index, Rng& rng) {
    if (bernoulli(rng, params.p_reformulate)) {
        return fresh_query(goal, params, index, rng);
    }
    return DialogueAct::bare(ActType::ElicitSuggestion);
}

} // namespace

void BehaviorParams::validate() const {
    if (!is_probability(p_elicit_info) || !is_probability(p_reformulate) ||
        !is_probability(p_noise_keyword)) {
        throw SimulatorError("behavior probabilities must lie in [0, 1]");
    }
    if (keyword_count_min < 1 || keyword_count_min > keyword_count_max) {
        throw SimulatorError("keyword counts need 1 <= min <= max");
    }
    if (patience < 1) {
        throw SimulatorError("patience must be at least 1");
    }
}

std::vector<std::string> keyword_pool(const KnowledgeBase& kb, const TfIdfIndex& index,
                                      std::size_t symbol) {
    std::map<std::string, std::size_t> counts;
    for (auto& tok : tokenize(kb[symbol].description)) {
        ++counts[std::move(tok)];
    }
    std::vector<std::pair<std::string, double>> weighted;
    for (const auto& [term, count] : counts) {
        auto id = index.term_id(term);
        if (!id || index.is_symbol_name(*id)) {
            continue;
        }
        weighted.emplace_back(term, static_cast<double>(count) * index.idf(*id));
    }
    std::sort(weighted.begin(), weighted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    std::vector<std::string> pool;
    pool.reserve(weighted.size());
    for (auto& [term, w] : weighted) {
        pool.push_back(std::move(term));
    }
    return pool;
}

UserGoal sample_goal(const KnowledgeBase& kb, const TfIdfIndex& index, Rng& rng) {
    for (std::size_t attempt = 0; attempt < kGoalRetries; ++attempt) {
        const auto pick = uniform_index(rng, 0, kb.size() - 1);
        auto pool = keyword_pool(kb, index, pick);
        if (!pool.empty()) {
            return {kb[pick].name, std::move(pool)};
        }
    }
    // Random retries exhausted; fall back to a deterministic scan so a KB with
    // few usable symbols still yields a goal.
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < kb.size(); ++i) {
        if (!keyword_pool(kb, index, i).empty()) {
            usable.push_back(i);
        }
    }
    if (usable.empty()) {
        throw SimulatorError("no symbol in the knowledge base has a non-empty keyword pool");
    }
    const auto pick = usable[uniform_index(rng, 0, usable.size() - 1)];
    return {kb[pick].name, keyword_pool(kb, index, pick)};
}

std::vector<std::string> draw_query_keywords(const UserGoal& goal, const BehaviorParams& params,
                                             const TfIdfIndex& index, Rng& rng) {
    const auto wanted = uniform_index(rng, params.keyword_count_min, params.keyword_count_max);
    const auto count = std::min(wanted, goal.keyword_pool.size());
    std::vector<std::string> keywords;
    keywords.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (bernoulli(rng, params.p_noise_keyword)) {
            keywords.push_back(noise_token(goal, index, rng));
        } else {
            keywords.push_back(goal.keyword_pool[i]);
        }
    }
    return keywords;
}

DialogueAct next_user_act(const DialogueState& state, const UserGoal& goal,
                          const BehaviorParams& params, const TfIdfIndex& index, Rng& rng) {
    if (state.terminal) {
        throw SimulatorError("the dialogue has already ended");
    }
    if (state.next_side() != Side::user) {
        throw SimulatorError("it is the system's turn");
    }
    // R1: opening query
    if (!state.last_system) {
        return fresh_query(goal, params, index, rng);
    }

    const auto& sys = *state.last_system;
    const bool after_rejection =
        state.last_user && state.last_user->type == ActType::RejectSuggestion;

    switch (sys.type) {
    case ActType::ElicitQuery: // R5
        return fresh_query(goal, params, index, rng);

    case ActType::Suggest:
    case ActType::ListOptions: {
        const auto offered = sys.referenced_symbols();
        if (std::find(offered.begin(), offered.end(), goal.target) != offered.end()) {
            // R2
            if (!state.informed.contains(goal.target) && bernoulli(rng, params.p_elicit_info)) {
                return DialogueAct::with_symbol(ActType::ElicitInfo, goal.target);
            }
            return DialogueAct::with_symbol(ActType::Accept, goal.target);
        }
        if (after_rejection) {
            return follow_up(goal, params, index, rng);
        }
        // R4
        if (state.rejected.size() + 1 > params.patience) {
            return DialogueAct::bare(ActType::EndUser);
        }
        return DialogueAct::with_symbol(ActType::RejectSuggestion, offered.front());
    }

    case ActType::Info:
        if (sys.symbol == goal.target) { // R3
            return DialogueAct::with_symbol(ActType::Accept, goal.target);
        }
        return follow_up(goal, params, index, rng); // R6

    default:
        break;
    }
    throw SimulatorError("no user rule for system act " + std::string(to_string(sys.type)));
}

} // namespace dialogen
