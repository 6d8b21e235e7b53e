#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dialogen/dialogue.hpp"
#include "dialogen/kb.hpp"
#include "dialogen/retrieval.hpp"
#include "dialogen/rng.hpp"

namespace dialogen {

/// Stochastic knobs of the simulated user.
struct BehaviorParams {
    double p_elicit_info = 0.5;   // ask for details before accepting the goal
    double p_reformulate = 0.5;   // after a rejection: new query vs. ask for another suggestion
    double p_noise_keyword = 0.2; // replace a goal keyword with an off-goal token
    std::size_t keyword_count_min = 2;
    std::size_t keyword_count_max = 5;
    std::size_t patience = 3;     // rejections tolerated before giving up

    /// Throws SimulatorError when an invariant does not hold.
    void validate() const;
};

struct UserGoal {
    std::string target;
    /// Description terms ranked by tf-idf weight (desc), ties by term (asc).
    /// Terms naming a KB symbol are left out so queries never leak symbols.
    std::vector<std::string> keyword_pool;
};

std::vector<std::string> keyword_pool(const KnowledgeBase& kb, const TfIdfIndex& index,
                                      std::size_t symbol);

/// Bounded number of redraws when the sampled target has an empty pool.
inline constexpr std::size_t kGoalRetries = 64;

UserGoal sample_goal(const KnowledgeBase& kb, const TfIdfIndex& index, Rng& rng);

std::vector<std::string> draw_query_keywords(const UserGoal& goal, const BehaviorParams& params,
                                             const TfIdfIndex& index, Rng& rng);

/// Rule-table user. Throws SimulatorError on a terminal state or when it is
/// the system's turn.
DialogueAct next_user_act(const DialogueState& state, const UserGoal& goal,
                          const BehaviorParams& params, const TfIdfIndex& index, Rng& rng);

} // namespace dialogen
