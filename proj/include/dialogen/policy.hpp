#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dialogen/dialogue.hpp"
#include "dialogen/rng.hpp"

namespace dialogen {

/// one-hot(last user act, 6) | turn/T | top-3 shortlist scores | |suggested|/T
/// | |rejected|/T | shortlist non-empty. Ratios are clamped to [0, 1].
inline constexpr std::size_t kFeatureDim = 13;
using StateFeatures = std::array<double, kFeatureDim>;

namespace feature {
inline constexpr std::size_t last_user_act = 0;
inline constexpr std::size_t turn = 6;
inline constexpr std::size_t top_scores = 7;
inline constexpr std::size_t suggested = 10;
inline constexpr std::size_t rejected = 11;
inline constexpr std::size_t shortlist_nonempty = 12;
} // namespace feature

StateFeatures featurize(const DialogueState& state, std::size_t turn_cap = kDefaultTurnCap);

using QValues = std::array<double, kSystemActCount>;

struct QHyperparams {
    double alpha = 0.01;
    double gamma = 0.95;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    /// Linear decay length; 0 means half of the training steps.
    std::size_t epsilon_decay_steps = 0;
    /// Hidden tanh units; 0 selects the linear approximator.
    std::size_t hidden = 32;
    double init_scale = 0.1;

    void validate() const;
    /// Exploration rate at `step` of a run lasting `total_steps`.
    double epsilon_at(std::size_t step, std::size_t total_steps) const;

    bool operator==(const QHyperparams&) const = default;
};

struct RewardSpec {
    double turn_penalty = -1.0;
    double success_bonus = 20.0;
    double failure_penalty = -20.0;

    void validate() const;
};

/// Action-value function 13 -> H (tanh) -> 5, or 13 -> 5 when H = 0.
/// Parameters are row-major; the flattened order is w1, b1, w2, b2.
struct QPolicy {
    QHyperparams hyper;
    std::size_t training_steps = 0;
    std::vector<double> w1; // hidden x kFeatureDim
    std::vector<double> b1; // hidden
    std::vector<double> w2; // kSystemActCount x (hidden or kFeatureDim)
    std::vector<double> b2; // kSystemActCount

    /// Uniform in [-init_scale, init_scale].
    static QPolicy initialize(const QHyperparams& hyper, std::uint64_t seed);
    static QPolicy zeros(const QHyperparams& hyper);

    std::size_t hidden() const noexcept { return hyper.hidden; }
    std::size_t input_width() const noexcept { return hyper.hidden == 0 ? kFeatureDim : hyper.hidden; }

    QValues q_values(const StateFeatures& s) const;

    std::size_t parameter_count() const noexcept;
    std::vector<double> flat_parameters() const;
    void set_flat_parameters(std::span<const double> params);

    bool operator==(const QPolicy&) const = default;
};

constexpr ActType system_act(std::size_t output) {
    return kSystemActs[output];
}

/// Argmax over the outputs, ties to the earliest act type.
ActType greedy_action(const QValues& q);

/// Epsilon-greedy. Always consumes one uniform draw, plus one more when
/// exploring.
ActType select_action(const QPolicy& policy, const StateFeatures& s, double epsilon, Rng& rng);

/// Half squared TD error for output `action` against a fixed target.
double td_loss(const QPolicy& policy, const StateFeatures& s, ActType action, double target);

/// Gradient of td_loss w.r.t. the flattened parameters.
std::vector<double> td_loss_gradient(const QPolicy& policy, const StateFeatures& s,
                                     ActType action, double target);

struct Transition {
    StateFeatures state{};
    ActType action = ActType::Suggest;
    double reward = 0.0;
    StateFeatures next_state{};
    bool done = false;
};

struct TdStep {
    double target;
    double td_error;
};

/// TD(0) semi-gradient step of size alpha; the target is
/// r + gamma * max_a' Q(s', a'), or r when done. Throws PolicyError when the
/// TD error is not finite.
TdStep q_update(QPolicy& policy, const Transition& t);

void save_policy(const QPolicy& policy, const std::filesystem::path& path);
QPolicy load_policy(const std::filesystem::path& path);

std::string policy_to_string(const QPolicy& policy);
QPolicy policy_from_string(const std::string& text);

} // namespace dialogen
