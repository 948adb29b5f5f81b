#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "fbapomdp/core.hpp"
#include "fbapomdp/factored.hpp"

namespace fbapomdp {

struct StepResult {
    StateIndex next_state = 0;
    ObservationIndex observation = 0;
    double reward = 0.0;
    bool terminal = false;
};

/// A factored POMDP <S, A, Omega, D, R, gamma, h>.
///
/// Rewards and termination are evaluated on (s, a, s'). The true dynamics
/// are stored as a conditional-probability network (`true_model`, whose rows
/// are probabilities) and are meant for the environment side only; agents
/// read the spaces, rewards and initial distribution.
struct DomainSpec {
    std::string name;
    FactoredSpace state_space;
    FactoredSpace observation_space;
    std::size_t action_count = 0;
    std::vector<std::string> action_names;
    double discount = 0.95;
    std::size_t horizon = 30;
    std::function<double(StateIndex, ActionId, StateIndex)> reward;
    std::function<bool(StateIndex, ActionId, StateIndex)> terminal;
    std::vector<double> initial_distribution;
    /// max reward - min reward; default exploration constant for planning.
    double reward_span = 1.0;
    FactoredCounts true_model;

    /// Checks invariants and caches the initial-state sampler. Factories call it.
    void finalize() {
        if (action_count == 0) throw InvalidArgument("DomainSpec: no actions");
        if (!(discount > 0.0 && discount < 1.0)) throw InvalidArgument("DomainSpec: discount must lie in (0, 1)");
        if (horizon == 0) throw InvalidArgument("DomainSpec: horizon must be positive");
        if (!reward || !terminal) throw InvalidArgument("DomainSpec: reward and terminal are required");
        if (initial_distribution.size() != state_space.size())
            throw InvalidArgument("DomainSpec: initial distribution has wrong size");
        if (true_model.layout().num_actions() != action_count)
            throw ModelInconsistency("DomainSpec: true model has wrong action count");
        true_model.validate();
        initial_cdf_.resize(initial_distribution.size());
        double acc = 0.0;
        for (std::size_t s = 0; s < initial_distribution.size(); ++s) {
            if (initial_distribution[s] < 0.0) throw InvalidArgument("DomainSpec: negative initial probability");
            acc += initial_distribution[s];
            initial_cdf_[s] = acc;
        }
        if (std::abs(acc - 1.0) > 1e-9) throw InvalidArgument("DomainSpec: initial distribution must sum to 1");
    }

    StateIndex sample_initial_state(Rng& rng) const {
        const double u = uniform01(rng) * initial_cdf_.back();
        auto it = std::upper_bound(initial_cdf_.begin(), initial_cdf_.end(), u);
        if (it == initial_cdf_.end()) --it;
        auto s = static_cast<StateIndex>(it - initial_cdf_.begin());
        while (initial_distribution[s] <= 0.0 && s + 1 < initial_distribution.size()) ++s;
        return s;
    }

    /// Environment transition under the true dynamics.
    StepResult step(StateIndex s, ActionId a, Rng& rng) const {
        if (a >= action_count) throw InvalidArgument("DomainSpec::step: action out of range");
        ValueVector sv = state_space.values(s), nv, ov;
        sample_next_state_values(true_model, nullptr, a, sv, nv, rng);
        sample_observation_values(true_model, nullptr, a, nv, ov, rng);
        const StateIndex next = state_space.encode(nv);
        return {next, observation_space.encode(ov), reward(s, a, next), terminal(s, a, next)};
    }

    /// True p(s', o | s, a).
    double true_probability(StateIndex s, ActionId a, StateIndex next, ObservationIndex o) const {
        return factored_likelihood(true_model.topology(), true_model, state_space, observation_space, s, a, next, o);
    }

private:
    std::vector<double> initial_cdf_;
};

template <class A>
concept EpisodeAgent = requires(A& agent, ActionId a, ObservationIndex o, Rng& rng) {
    agent.begin_episode(rng);
    { agent.act(rng) } -> std::convertible_to<ActionId>;
    agent.observe(a, o, rng);
};

struct EpisodeResult {
    double discounted_return = 0.0;
    History history;
};

/// Runs one episode from a fresh initial state until the horizon or a
/// terminal transition, returning the discounted return and the history.
template <EpisodeAgent Agent>
EpisodeResult run_episode(const DomainSpec& env, Agent& agent, std::size_t horizon, Rng& rng) {
    if (horizon == 0) throw InvalidArgument("run_episode: horizon must be positive");
    EpisodeResult out;
    StateIndex s = env.sample_initial_state(rng);
    agent.begin_episode(rng);
    double factor = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const ActionId a = agent.act(rng);
        if (a >= env.action_count) throw InvalidArgument("run_episode: agent returned an invalid action");
        const StepResult r = env.step(s, a, rng);
        out.discounted_return += factor * r.reward;
        factor *= env.discount;
        out.history.actions.push_back(a);
        out.history.observations.push_back(r.observation);
        agent.observe(a, r.observation, rng);
        if constexpr (requires { agent.last_step_log_likelihood(); })
            out.history.step_log_likelihoods.push_back(agent.last_step_log_likelihood());
        s = r.next_state;
        if (r.terminal) break;
    }
    return out;
}

}  // namespace fbapomdp
