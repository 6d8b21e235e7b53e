#include "dialogen/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dialogen/error.hpp"

namespace dialogen {

namespace {

constexpr std::string_view kPolicyFormat = "dialogen-qpolicy";
constexpr int kPolicyVersion = 1;

double ratio(std::size_t n, std::size_t cap) {
    return std::min(1.0, static_cast<double>(n) / static_cast<double>(cap));
}

struct Forward {
    std::vector<double> hidden; // tanh activations
    QValues q{};
};

Forward forward(const QPolicy& p, const StateFeatures& s) {
    Forward f;
    const std::size_t h = p.hidden();
    std::span<const double> layer_in = s;
    if (h > 0) {
        f.hidden.resize(h);
        for (std::size_t j = 0; j < h; ++j) {
            double z = p.b1[j];
            for (std::size_t i = 0; i < kFeatureDim; ++i) {
                z += p.w1[j * kFeatureDim + i] * s[i];
            }
            f.hidden[j] = std::tanh(z);
        }
        layer_in = f.hidden;
    }
    const std::size_t width = p.input_width();
    for (std::size_t a = 0; a < kSystemActCount; ++a) {
        double q = p.b2[a];
        for (std::size_t j = 0; j < width; ++j) {
            q += p.w2[a * width + j] * layer_in[j];
        }
        f.q[a] = q;
    }
    return f;
}

// dQ_a/dtheta scaled by `scale`, accumulated into separate tensors.
struct Grad {
    std::vector<double> w1, b1, w2, b2;
};

Grad output_gradient(const QPolicy& p, const StateFeatures& s, const Forward& f,
                     std::size_t a, double scale) {
    Grad g;
    const std::size_t h = p.hidden();
    const std::size_t width = p.input_width();
    g.w1.assign(p.w1.size(), 0.0);
    g.b1.assign(p.b1.size(), 0.0);
    g.w2.assign(p.w2.size(), 0.0);
    g.b2.assign(p.b2.size(), 0.0);

    std::span<const double> layer_in = s;
    if (h > 0) {
        layer_in = f.hidden;
    }
    for (std::size_t j = 0; j < width; ++j) {
        g.w2[a * width + j] = scale * layer_in[j];
    }
    g.b2[a] = scale;
    if (h > 0) {
        for (std::size_t j = 0; j < h; ++j) {
            const double dz = scale * p.w2[a * width + j] * (1.0 - f.hidden[j] * f.hidden[j]);
            g.b1[j] = dz;
            for (std::size_t i = 0; i < kFeatureDim; ++i) {
                g.w1[j * kFeatureDim + i] = dz * s[i];
            }
        }
    }
    return g;
}

void check_shapes(const QPolicy& p) {
    const std::size_t h = p.hidden();
    if (p.w1.size() != h * kFeatureDim || p.b1.size() != h ||
        p.w2.size() != kSystemActCount * p.input_width() || p.b2.size() != kSystemActCount) {
        throw PolicyError("parameter tensors do not match the declared architecture");
    }
}

nlohmann::json hyper_to_json(const QHyperparams& h) {
    return {{"alpha", h.alpha},
            {"gamma", h.gamma},
            {"epsilon_start", h.epsilon_start},
            {"epsilon_end", h.epsilon_end},
            {"epsilon_decay_steps", h.epsilon_decay_steps},
            {"hidden", h.hidden},
            {"init_scale", h.init_scale}};
}

QHyperparams hyper_from_json(const nlohmann::json& j) {
    QHyperparams h;
    h.alpha = j.at("alpha").get<double>();
    h.gamma = j.at("gamma").get<double>();
    h.epsilon_start = j.at("epsilon_start").get<double>();
    h.epsilon_end = j.at("epsilon_end").get<double>();
    h.epsilon_decay_steps = j.at("epsilon_decay_steps").get<std::size_t>();
    h.hidden = j.at("hidden").get<std::size_t>();
    h.init_scale = j.at("init_scale").get<double>();
    return h;
}

} // namespace

StateFeatures featurize(const DialogueState& state, std::size_t turn_cap) {
    StateFeatures f{};
    if (auto last = state.last_user_act(); last && is_user_act(*last)) {
        f[feature::last_user_act + side_index(*last)] = 1.0;
    }
    f[feature::turn] = ratio(state.turn, turn_cap);
    for (std::size_t i = 0; i < 3 && i < state.shortlist.size(); ++i) {
        f[feature::top_scores + i] = std::clamp(state.shortlist.ranked[i].score, 0.0, 1.0);
    }
    f[feature::suggested] = ratio(state.suggested.size(), turn_cap);
    f[feature::rejected] = ratio(state.rejected.size(), turn_cap);
    f[feature::shortlist_nonempty] = state.shortlist.empty() ? 0.0 : 1.0;
    return f;
}

void QHyperparams::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw PolicyError("gamma must lie in [0, 1)");
    }
    for (double e : {epsilon_start, epsilon_end}) {
        if (!(e >= 0.0 && e <= 1.0)) {
            throw PolicyError("epsilon must lie in [0, 1]");
        }
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw PolicyError("alpha must be a finite non-negative number");
    }
    if (!(init_scale >= 0.0)) {
        throw PolicyError("init_scale must be non-negative");
    }
}

double QHyperparams::epsilon_at(std::size_t step, std::size_t total_steps) const {
    const std::size_t decay = epsilon_decay_steps ? epsilon_decay_steps : total_steps / 2;
    if (decay == 0 || step >= decay) {
        return epsilon_end;
    }
    const double frac = static_cast<double>(step) / static_cast<double>(decay);
    return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

void RewardSpec::validate() const {
    if (!(turn_penalty < 0.0)) {
        throw PolicyError("turn_penalty must be negative");
    }
    if (!(success_bonus >= 0.0)) {
        throw PolicyError("success_bonus must be non-negative");
    }
    if (!(failure_penalty <= 0.0)) {
        throw PolicyError("failure_penalty must be non-positive");
    }
}

QPolicy QPolicy::zeros(const QHyperparams& hyper) {
    hyper.validate();
    QPolicy p;
    p.hyper = hyper;
    p.w1.assign(hyper.hidden * kFeatureDim, 0.0);
    p.b1.assign(hyper.hidden, 0.0);
    p.w2.assign(kSystemActCount * p.input_width(), 0.0);
    p.b2.assign(kSystemActCount, 0.0);
    return p;
}

QPolicy QPolicy::initialize(const QHyperparams& hyper, std::uint64_t seed) {
    QPolicy p = zeros(hyper);
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(-hyper.init_scale, hyper.init_scale);
    for (auto* tensor : {&p.w1, &p.b1, &p.w2, &p.b2}) {
        for (auto& w : *tensor) {
            w = dist(rng);
        }
    }
    return p;
}

QValues QPolicy::q_values(const StateFeatures& s) const { return forward(*this, s).q; }

std::size_t QPolicy::parameter_count() const noexcept {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

std::vector<double> QPolicy::flat_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto* tensor : {&w1, &b1, &w2, &b2}) {
        out.insert(out.end(), tensor->begin(), tensor->end());
    }
    return out;
}

void QPolicy::set_flat_parameters(std::span<const double> params) {
    if (params.size() != parameter_count()) {
        throw PolicyError("parameter vector has the wrong length");
    }
    auto it = params.begin();
    for (auto* tensor : {&w1, &b1, &w2, &b2}) {
        std::copy_n(it, tensor->size(), tensor->begin());
        it += static_cast<std::ptrdiff_t>(tensor->size());
    }
}

ActType greedy_action(const QValues& q) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.size(); ++a) {
        if (q[a] > q[best]) {
            best = a;
        }
    }
    return system_act(best);
}

ActType select_action(const QPolicy& policy, const StateFeatures& s, double epsilon, Rng& rng) {
    if (uniform01(rng) < epsilon) {
        return system_act(uniform_index(rng, 0, kSystemActCount - 1));
    }
    return greedy_action(policy.q_values(s));
}

double td_loss(const QPolicy& policy, const StateFeatures& s, ActType action, double target) {
    const double q = policy.q_values(s)[side_index(action)];
    const double d = target - q;
    return 0.5 * d * d;
}

std::vector<double> td_loss_gradient(const QPolicy& policy, const StateFeatures& s,
                                     ActType action, double target) {
    check_shapes(policy);
    const auto f = forward(policy, s);
    const std::size_t a = side_index(action);
    // d/dtheta 0.5 (target - Q)^2 = -(target - Q) dQ/dtheta
    const auto g = output_gradient(policy, s, f, a, -(target - f.q[a]));
    std::vector<double> out;
    out.reserve(policy.parameter_count());
    for (const auto* tensor : {&g.w1, &g.b1, &g.w2, &g.b2}) {
        out.insert(out.end(), tensor->begin(), tensor->end());
    }
    return out;
}

TdStep q_update(QPolicy& policy, const Transition& t) {
    if (!is_system_act(t.action)) {
        throw PolicyError("q_update needs a system act");
    }
    check_shapes(policy);
    const auto f = forward(policy, t.state);
    const std::size_t a = side_index(t.action);

    double target = t.reward;
    if (!t.done) {
        const auto next_q = policy.q_values(t.next_state);
        target += policy.hyper.gamma * *std::max_element(next_q.begin(), next_q.end());
    }
    const double td_error = target - f.q[a];
    if (!std::isfinite(td_error)) {
        std::ostringstream msg;
        msg << "non-finite TD error at training step " << policy.training_steps
            << " (action " << to_string(t.action) << ", reward " << t.reward << ", target "
            << target << ", Q " << f.q[a] << ")";
        throw PolicyError(msg.str());
    }
    if (td_error == 0.0 || policy.hyper.alpha == 0.0) {
        return {target, td_error};
    }

    const auto g = output_gradient(policy, t.state, f, a, policy.hyper.alpha * td_error);
    auto apply = [](std::vector<double>& w, const std::vector<double>& d) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] += d[i];
        }
    };
    apply(policy.w1, g.w1);
    apply(policy.b1, g.b1);
    apply(policy.w2, g.w2);
    apply(policy.b2, g.b2);
    return {target, td_error};
}

std::string policy_to_string(const QPolicy& policy) {
    check_shapes(policy);
    nlohmann::ordered_json j;
    j["format"] = kPolicyFormat;
    j["version"] = kPolicyVersion;
    j["feature_dim"] = kFeatureDim;
    auto actions = nlohmann::json::array();
    for (auto a : kSystemActs) {
        actions.push_back(std::string(to_string(a)));
    }
    j["actions"] = actions;
    j["hyperparams"] = hyper_to_json(policy.hyper);
    j["training_steps"] = policy.training_steps;
    j["w1"] = policy.w1;
    j["b1"] = policy.b1;
    j["w2"] = policy.w2;
    j["b2"] = policy.b2;
    return j.dump() + "\n";
}

QPolicy policy_from_string(const std::string& text) {
    using Reason = PolicyFileError::Reason;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw PolicyFileError(Reason::corrupt, std::string("unreadable policy file: ") + e.what());
    }
    if (!j.is_object()) {
        throw PolicyFileError(Reason::corrupt, "policy file is not a JSON object");
    }
    try {
        if (j.at("format").get<std::string>() != kPolicyFormat) {
            throw PolicyFileError(Reason::version, "not a policy file");
        }
        if (j.at("version").get<int>() != kPolicyVersion) {
            throw PolicyFileError(Reason::version,
                                  "unsupported policy version " + j.at("version").dump());
        }
        if (j.at("feature_dim").get<std::size_t>() != kFeatureDim) {
            throw PolicyFileError(Reason::version, "policy expects " + j.at("feature_dim").dump() +
                                                       " features, this build uses " +
                                                       std::to_string(kFeatureDim));
        }
        const auto& actions = j.at("actions");
        if (actions.size() != kSystemActCount) {
            throw PolicyFileError(Reason::version, "policy action set does not match");
        }
        for (std::size_t a = 0; a < kSystemActCount; ++a) {
            if (actions[a].get<std::string>() != to_string(kSystemActs[a])) {
                throw PolicyFileError(Reason::version, "policy action order does not match");
            }
        }
        QPolicy p = QPolicy::zeros(hyper_from_json(j.at("hyperparams")));
        p.training_steps = j.at("training_steps").get<std::size_t>();
        p.w1 = j.at("w1").get<std::vector<double>>();
        p.b1 = j.at("b1").get<std::vector<double>>();
        p.w2 = j.at("w2").get<std::vector<double>>();
        p.b2 = j.at("b2").get<std::vector<double>>();
        try {
            check_shapes(p);
        } catch (const PolicyError& e) {
            throw PolicyFileError(Reason::corrupt, e.what());
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw PolicyFileError(Reason::corrupt, std::string("malformed policy file: ") + e.what());
    } catch (const PolicyError& e) {
        throw PolicyFileError(Reason::corrupt, e.what());
    }
}

void save_policy(const QPolicy& policy, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw PolicyFileError(PolicyFileError::Reason::io, "cannot write '" + path.string() + "'");
    }
    out << policy_to_string(policy);
    if (!out) {
        throw PolicyFileError(PolicyFileError::Reason::io, "write failed for '" + path.string() + "'");
    }
}

QPolicy load_policy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw PolicyFileError(PolicyFileError::Reason::io, "cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return policy_from_string(buf.str());
}

} // namespace dialogen
