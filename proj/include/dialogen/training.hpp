#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "dialogen/planner.hpp"
#include "dialogen/policy.hpp"

namespace dialogen {

struct TrainingConfig {
    QHyperparams hyper{};
    RewardSpec reward{};
    BehaviorParams sim{};
    PlannerConfig planner{};
    std::size_t steps = 100'000; // system turns, i.e. q_update calls
    std::uint64_t seed = 0;
    std::size_t stats_window = 10'000;
};

struct TrainingWindow {
    std::size_t end_step = 0;
    std::size_t episodes = 0; // episodes finished inside the window
    double success_rate = 0.0;
    double mean_turns = 0.0;
    double epsilon = 0.0; // exploration rate at the end of the window
};

struct TrainingStats {
    std::size_t steps = 0;
    std::size_t episodes = 0;
    std::vector<TrainingWindow> windows;

    nlohmann::ordered_json to_json() const;
};

struct TrainingResult {
    QPolicy policy;
    TrainingStats stats;
};

/// Self-play Q-learning. Rewards: turn_penalty on every system act, plus
/// success_bonus when the user's reply is Accept(goal), or failure_penalty on
/// EndUser, EndSystem and the turn cap. Single-threaded and deterministic in
/// the seed.
TrainingResult train_self_play(const KnowledgeBase& kb, const TfIdfIndex& index,
                               const TrainingConfig& config);

struct EvaluationResult {
    std::size_t episodes = 0;
    double success_rate = 0.0;
    double mean_turns = 0.0;
    double mean_success_turns = 0.0; // 0 when nothing succeeded

    nlohmann::ordered_json to_json() const;
};

/// Rolls out `episodes` scripts seeded derive_seed(seed, i). Pass a greedy
/// policy (epsilon 0) for the usual evaluation.
EvaluationResult evaluate_policy(const PlanningContext& ctx, const DialoguePolicy& policy,
                                 std::size_t episodes, std::uint64_t seed);

inline EvaluationResult evaluate_policy(const PlanningContext& ctx, const QPolicy& policy,
                                        std::size_t episodes, std::uint64_t seed) {
    return evaluate_policy(ctx, QDialoguePolicy(policy, 0.0, ctx.config.turn_cap), episodes, seed);
}

} // namespace dialogen
