#include "dialogen/training.hpp"

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

enum class Outcome { running, success, failure };

struct WindowAccumulator {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    std::size_t turns = 0;

    TrainingWindow close(std::size_t end_step, double epsilon) {
        TrainingWindow w;
        w.end_step = end_step;
        w.episodes = episodes;
        w.epsilon = epsilon;
        if (episodes > 0) {
            w.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
            w.mean_turns = static_cast<double>(turns) / static_cast<double>(episodes);
        }
        *this = {};
        return w;
    }
};

} // namespace

TrainingResult train_self_play(const KnowledgeBase& kb, const TfIdfIndex& index,
                               const TrainingConfig& config) {
    if (config.steps < 1) {
        throw PolicyError("training needs at least one step");
    }
    config.hyper.validate();
    config.reward.validate();
    config.sim.validate();

    const auto& cap = config.planner.turn_cap;
    const auto& k = config.planner.shortlist_k;
    const std::size_t window = config.stats_window ? config.stats_window : config.steps;

    TrainingResult result{QPolicy::initialize(config.hyper, derive_seed(config.seed, 0)), {}};
    auto& policy = result.policy;
    auto& stats = result.stats;
    Rng rng(derive_seed(config.seed, 1));
    WindowAccumulator acc;

    std::size_t step = 0;
    while (step < config.steps) {
        const auto goal = sample_goal(kb, index, rng);
        DialogueState state;
        state = apply_act(state, next_user_act(state, goal, config.sim, index, rng), index, k);

        Outcome outcome = Outcome::running;
        while (outcome == Outcome::running && step < config.steps) {
            Transition t;
            t.state = featurize(state, cap);
            t.action = select_action(policy, t.state, config.hyper.epsilon_at(step, config.steps), rng);
            state = apply_act(state, ground_act(t.action, state, kb, index), index, k);
            t.reward = config.reward.turn_penalty;

            if (state.terminal || state.turn >= cap) {
                outcome = Outcome::failure;
            } else {
                const auto user = next_user_act(state, goal, config.sim, index, rng);
                state = apply_act(state, user, index, k);
                if (user.type == ActType::Accept && user.symbol == goal.target) {
                    outcome = Outcome::success;
                } else if (state.terminal) {
                    outcome = Outcome::failure;
                }
            }
            if (outcome == Outcome::success) {
                t.reward += config.reward.success_bonus;
            } else if (outcome == Outcome::failure) {
                t.reward += config.reward.failure_penalty;
            }
            t.done = outcome != Outcome::running;
            t.next_state = t.done ? t.state : featurize(state, cap);

            q_update(policy, t);
            ++policy.training_steps;
            ++step;

            if (outcome != Outcome::running) {
                ++stats.episodes;
                ++acc.episodes;
                acc.successes += outcome == Outcome::success ? 1 : 0;
                acc.turns += state.turn;
            }
            if (step % window == 0 || step == config.steps) {
                stats.windows.push_back(acc.close(step, config.hyper.epsilon_at(step, config.steps)));
            }
        }
    }
    stats.steps = step;
    return result;
}

EvaluationResult evaluate_policy(const PlanningContext& ctx, const DialoguePolicy& policy,
                                 std::size_t episodes, std::uint64_t seed) {
    if (episodes < 1) {
        throw PolicyError("evaluation needs at least one episode");
    }
    EvaluationResult r;
    r.episodes = episodes;
    std::size_t successes = 0;
    std::size_t turns = 0;
    std::size_t success_turns = 0;
    for (std::size_t i = 0; i < episodes; ++i) {
        const auto script = plan_script(ctx, policy, derive_seed(seed, i));
        const auto t = script_turns(script);
        turns += t;
        if (script.success) {
            ++successes;
            success_turns += t;
        }
    }
    r.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
    r.mean_turns = static_cast<double>(turns) / static_cast<double>(episodes);
    r.mean_success_turns =
        successes ? static_cast<double>(success_turns) / static_cast<double>(successes) : 0.0;
    return r;
}

nlohmann::ordered_json TrainingStats::to_json() const {
    nlohmann::ordered_json j;
    j["steps"] = steps;
    j["episodes"] = episodes;
    auto ws = nlohmann::ordered_json::array();
    for (const auto& w : windows) {
        ws.push_back({{"end_step", w.end_step},
                      {"episodes", w.episodes},
                      {"success_rate", w.success_rate},
                      {"mean_turns", w.mean_turns},
                      {"epsilon", w.epsilon}});
    }
    j["windows"] = std::move(ws);
    return j;
}

nlohmann::ordered_json EvaluationResult::to_json() const {
    return {{"episodes", episodes},
            {"success_rate", success_rate},
            {"mean_turns", mean_turns},
            {"mean_success_turns", mean_success_turns}};
}

} // namespace dialogen
