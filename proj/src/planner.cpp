#include "dialogen/planner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

std::vector<std::string> unsuggested(const DialogueState& state, std::size_t limit) {
    std::vector<std::string> out;
    for (const auto& hit : state.shortlist.ranked) {
        if (out.size() == limit) {
            break;
        }
        if (!state.suggested.contains(hit.name)) {
            out.push_back(hit.name);
        }
    }
    return out;
}

} // namespace

DialogueAct ground_act(ActType type, const DialogueState& state, const KnowledgeBase& kb,
                       const TfIdfIndex& /*index*/) {
    if (!is_system_act(type)) {
        throw DialogueError("ground_act needs a system act type, got " +
                            std::string(to_string(type)));
    }
    if (state.next_side() != Side::system) {
        throw DialogueError("ground_act called on the user's turn");
    }
    const auto elicit_query = DialogueAct::bare(ActType::ElicitQuery);

    switch (type) {
    case ActType::Suggest: {
        auto next = unsuggested(state, 1);
        return next.empty() ? elicit_query
                            : DialogueAct::with_symbol(ActType::Suggest, std::move(next.front()));
    }
    case ActType::Info: {
        if (state.last_user && state.last_user->type == ActType::ElicitInfo &&
            kb.contains(*state.last_user->symbol)) {
            return DialogueAct::with_symbol(ActType::Info, *state.last_user->symbol);
        }
        if (state.last_suggestion) {
            return DialogueAct::with_symbol(ActType::Info, *state.last_suggestion);
        }
        return elicit_query;
    }
    case ActType::ListOptions: {
        auto options = unsuggested(state, 3);
        return options.empty() ? elicit_query : DialogueAct::list_options(std::move(options));
    }
    default:
        return DialogueAct::bare(type);
    }
}

Script plan_script(const PlanningContext& ctx, const DialoguePolicy& policy, std::uint64_t seed) {
    Rng rng(seed);
    const auto goal = sample_goal(ctx.kb, ctx.index, rng);

    Script script;
    script.goal_symbol = goal.target;
    script.seed = seed;

    DialogueState state;
    for (;;) {
        auto user = next_user_act(state, goal, ctx.sim, ctx.index, rng);
        state = apply_act(state, user, ctx.index, ctx.config.shortlist_k);
        script.acts.push_back(std::move(user));
        if (state.terminal) {
            break;
        }
        const auto type = policy.choose(state, rng);
        auto sys = ground_act(type, state, ctx.kb, ctx.index);
        state = apply_act(state, sys, ctx.index, ctx.config.shortlist_k);
        script.acts.push_back(std::move(sys));
        if (state.terminal) {
            break;
        }
        if (state.turn >= ctx.config.turn_cap) {
            script.metadata.turn_cap_reached = true;
            break;
        }
    }

    const auto& last = script.acts.back();
    script.success = last.type == ActType::Accept && last.symbol == goal.target;
    return script;
}

std::vector<Script> plan_batch(const PlanningContext& ctx, const DialoguePolicy& policy,
                               std::size_t n, std::uint64_t base_seed, std::size_t threads) {
    std::vector<Script> scripts(n);
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            scripts[i] = plan_script(ctx, policy, derive_seed(base_seed, i));
        }
        return scripts;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    scripts[i] = plan_script(ctx, policy, derive_seed(base_seed, i));
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return scripts;
}

BatchSummary summarize(const std::vector<Script>& scripts) {
    BatchSummary s;
    s.scripts = scripts.size();
    for (auto t : kUserActs) {
        s.act_histogram[std::string(to_string(t))] = 0;
    }
    for (auto t : kSystemActs) {
        s.act_histogram[std::string(to_string(t))] = 0;
    }
    if (scripts.empty()) {
        return s;
    }
    std::size_t successes = 0;
    std::size_t acts = 0;
    for (const auto& script : scripts) {
        successes += script.success ? 1 : 0;
        s.turn_cap_reached += script.metadata.turn_cap_reached ? 1 : 0;
        acts += script.acts.size();
        for (const auto& a : script.acts) {
            ++s.act_histogram[std::string(to_string(a.type))];
        }
    }
    s.success_rate = static_cast<double>(successes) / static_cast<double>(scripts.size());
    s.mean_length = static_cast<double>(acts) / static_cast<double>(scripts.size());
    return s;
}

nlohmann::ordered_json BatchSummary::to_json() const {
    nlohmann::ordered_json j;
    j["scripts"] = scripts;
    j["success_rate"] = success_rate;
    j["mean_length"] = mean_length;
    j["turn_cap_reached"] = turn_cap_reached;
    nlohmann::ordered_json hist;
    for (auto t : kUserActs) {
        hist[std::string(to_string(t))] = act_histogram.at(std::string(to_string(t)));
    }
    for (auto t : kSystemActs) {
        hist[std::string(to_string(t))] = act_histogram.at(std::string(to_string(t)));
    }
    j["act_histogram"] = std::move(hist);
    return j;
}

} // namespace dialogen
