#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialogen/dialogue.hpp"
#include "dialogen/kb.hpp"
#include "dialogen/policy.hpp"
#include "dialogen/retrieval.hpp"
#include "dialogen/rng.hpp"
#include "dialogen/simulator.hpp"

namespace dialogen {

/// Chooses the next system act type. Implementations must be safe to call
/// concurrently; all randomness comes from the supplied generator.
class DialoguePolicy {
public:
    virtual ~DialoguePolicy() = default;
    virtual ActType choose(const DialogueState& state, Rng& rng) const = 0;
};

/// Epsilon-greedy over a trained QPolicy.
class QDialoguePolicy final : public DialoguePolicy {
public:
    QDialoguePolicy(const QPolicy& q, double epsilon, std::size_t turn_cap = kDefaultTurnCap)
        : q_(q), epsilon_(epsilon), turn_cap_(turn_cap) {}

    ActType choose(const DialogueState& state, Rng& rng) const override {
        return select_action(q_, featurize(state, turn_cap_), epsilon_, rng);
    }

private:
    const QPolicy& q_;
    double epsilon_;
    std::size_t turn_cap_;
};

class UniformRandomPolicy final : public DialoguePolicy {
public:
    ActType choose(const DialogueState&, Rng& rng) const override {
        return system_act(uniform_index(rng, 0, kSystemActCount - 1));
    }
};

/// Adapts a callable; handy for scripted and rule-based managers.
class FunctionPolicy final : public DialoguePolicy {
public:
    using Fn = std::function<ActType(const DialogueState&, Rng&)>;
    explicit FunctionPolicy(Fn fn) : fn_(std::move(fn)) {}
    ActType choose(const DialogueState& state, Rng& rng) const override { return fn_(state, rng); }

private:
    Fn fn_;
};

struct PlannerConfig {
    std::size_t turn_cap = kDefaultTurnCap;
    std::size_t shortlist_k = kDefaultShortlistSize;
};

/// Everything an episode needs besides the manager and the seed.
struct PlanningContext {
    const KnowledgeBase& kb;
    const TfIdfIndex& index;
    BehaviorParams sim{};
    PlannerConfig config{};
};

/// Turns an abstract system act type into a concrete act over real symbols.
/// Falls back to ElicitQuery whenever the chosen type has nothing to refer to.
DialogueAct ground_act(ActType type, const DialogueState& state, const KnowledgeBase& kb,
                       const TfIdfIndex& index);

Script plan_script(const PlanningContext& ctx, const DialoguePolicy& policy, std::uint64_t seed);

/// Script i is planned with derive_seed(base_seed, i). Output order is the
/// index order whatever the thread count.
std::vector<Script> plan_batch(const PlanningContext& ctx, const DialoguePolicy& policy,
                               std::size_t n, std::uint64_t base_seed, std::size_t threads = 1);

struct BatchSummary {
    std::size_t scripts = 0;
    double success_rate = 0.0;
    double mean_length = 0.0; // acts per script
    std::size_t turn_cap_reached = 0;
    std::map<std::string, std::size_t> act_histogram;

    nlohmann::ordered_json to_json() const;
};

BatchSummary summarize(const std::vector<Script>& scripts);

/// System acts in a script, i.e. completed or attempted turns.
inline std::size_t script_turns(const Script& s) { return s.acts.size() / 2; }

} // namespace dialogen
