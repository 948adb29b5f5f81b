#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fbapomdp/domain.hpp"
#include "fbapomdp/factored.hpp"
#include "fbapomdp/models.hpp"
#include "fbapomdp/prior.hpp"

namespace fbapomdp {

/// Expected dynamics of fixed counts, tabulated for HMM smoothing: the
/// nonzero next-state support of every (a, s) and observation likelihood
/// vectors over s' for every (a, o) pair that is queried.
class SmoothingModel {
public:
    SmoothingModel(const FactoredCounts& counts, const FactoredSpace& states, const FactoredSpace& observations)
        : counts_(&counts), states_(&states), observations_(&observations),
          num_actions_(counts.layout().num_actions()),
          support_(num_actions_ * states.size()), support_ready_(num_actions_ * states.size(), false),
          obs_(num_actions_ * observations.size()), obs_ready_(num_actions_ * observations.size(), false) {}

    const std::vector<std::pair<StateIndex, double>>& support(ActionId a, StateIndex s) {
        const std::size_t k = a * states_->size() + s;
        if (!support_ready_[k]) {
            build_support(a, s, support_[k]);
            support_ready_[k] = true;
        }
        return support_[k];
    }

    const std::vector<double>& observation_likelihood(ActionId a, ObservationIndex o) {
        const std::size_t k = a * observations_->size() + o;
        if (!obs_ready_[k]) {
            auto& v = obs_[k];
            v.resize(states_->size());
            const ValueVector ov = observations_->values(o);
            ValueVector nv;
            for (StateIndex s = 0; s < states_->size(); ++s) {
                states_->decode(s, nv);
                v[s] = observation_probability(*counts_, nullptr, a, nv, ov);
            }
            obs_ready_[k] = true;
        }
        return obs_[k];
    }

private:
    void build_support(ActionId a, StateIndex s, std::vector<std::pair<StateIndex, double>>& out) const {
        const CountLayout& layout = counts_->layout();
        const std::size_t n = states_->num_features();
        const ValueVector sv = states_->values(s);
        out.clear();
        out.emplace_back(0, 1.0);
        std::vector<std::pair<StateIndex, double>> grown;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = layout.config(a, i, sv);
            const auto row = counts_->row(a, i, c);
            const double total = counts_->total(a, i, c);
            if (!(total > 0.0)) throw DegeneratePrior("smoothing: conditional table row has zero mass");
            grown.clear();
            for (const auto& [partial, p] : out)
                for (std::size_t v = 0; v < row.size(); ++v)
                    if (row[v] > 0.0) grown.emplace_back(partial + v * states_->stride(i), p * row[v] / total);
            out.swap(grown);
        }
    }

    const FactoredCounts* counts_;
    const FactoredSpace* states_;
    const FactoredSpace* observations_;
    std::size_t num_actions_;
    std::vector<std::vector<std::pair<StateIndex, double>>> support_;
    std::vector<bool> support_ready_;
    std::vector<std::vector<double>> obs_;
    std::vector<bool> obs_ready_;
};

/// Exact draw of s_0..s_T from p(s | a, o, theta) of the HMM whose parameters
/// are the expected CPTs of `counts`, held fixed for the whole sequence.
/// Backward messages are rescaled at every step; states are then drawn in a
/// single forward pass.
inline std::vector<StateIndex> sample_state_sequence(SmoothingModel& model, std::span<const ActionId> actions,
                                                     std::span<const ObservationIndex> observations,
                                                     std::span<const double> initial, Rng& rng) {
    if (actions.size() != observations.size())
        throw InvalidArgument("sample_state_sequence: actions and observations differ in length");
    const std::size_t T = actions.size();
    const std::size_t S = initial.size();
    std::vector<std::vector<double>> beta(T + 1, std::vector<double>(S, 0.0));
    std::fill(beta[T].begin(), beta[T].end(), 1.0);
    for (std::size_t t = T; t-- > 0;) {
        const auto& lik = model.observation_likelihood(actions[t], observations[t]);
        auto& b = beta[t];
        double norm = 0.0;
        for (StateIndex s = 0; s < S; ++s) {
            double acc = 0.0;
            for (const auto& [next, p] : model.support(actions[t], s)) acc += p * lik[next] * beta[t + 1][next];
            b[s] = acc;
            norm += acc;
        }
        if (!(norm > 0.0)) throw InfeasibleHistory("sample_state_sequence: observations impossible under the model");
        for (double& x : b) x /= norm;
    }

    std::vector<StateIndex> states(T + 1);
    std::vector<double> w(S);
    for (StateIndex s = 0; s < S; ++s) w[s] = initial[s] * beta[0][s];
    states[0] = sample_weighted(w, rng);
    if (states[0] >= S) throw InfeasibleHistory("sample_state_sequence: zero posterior mass");
    std::vector<double> local;
    for (std::size_t t = 0; t < T; ++t) {
        const auto& sup = model.support(actions[t], states[t]);
        const auto& lik = model.observation_likelihood(actions[t], observations[t]);
        local.resize(sup.size());
        for (std::size_t k = 0; k < sup.size(); ++k)
            local[k] = sup[k].second * lik[sup[k].first] * beta[t + 1][sup[k].first];
        const std::size_t k = sample_weighted(local, rng);
        if (k >= sup.size()) throw InfeasibleHistory("sample_state_sequence: zero posterior mass");
        states[t + 1] = sup[k].first;
    }
    return states;
}

/// Convenience overload: smoothing under the expected CPTs of `counts`.
inline std::vector<StateIndex> sample_state_sequence(const FactoredCounts& counts, const DomainSpec& domain,
                                                     std::span<const ActionId> actions,
                                                     std::span<const ObservationIndex> observations, Rng& rng) {
    SmoothingModel model(counts, domain.state_space, domain.observation_space);
    return sample_state_sequence(model, actions, observations, domain.initial_distribution, rng);
}

struct MhStep {
    Topology topology;
    bool accepted = false;
    double log_ratio = 0.0;
};

/// One Metropolis-Hastings move over structures with a symmetric proposal
/// (flip one mutable edge chosen uniformly). The acceptance ratio is the BD
/// score ratio of the two structures times their structure-prior ratio; only
/// the flipped node's term differs, so only it is scored.
inline MhStep mh_structure_step(const Topology& g, std::span<const Trajectory> data, const FactoredPrior& prior,
                                const DomainSpec& domain, Rng& rng) {
    const auto& edges = prior.mutable_edges.mutable_edges;
    if (edges.empty()) return {g, true, 0.0};
    const Edge e = edges[uniform_index(rng, edges.size())];
    Topology proposal = g.with_flipped(e);

    const auto& S = domain.state_space;
    const auto& O = domain.observation_space;
    const std::size_t n = S.num_features();
    const std::size_t arity = e.node < n ? S.arity(e.node) : O.arity(e.node - n);
    const auto& old_parents = g.parents(e.action, e.node);
    const auto& new_parents = proposal.parents(e.action, e.node);
    const double old_score = bd_node_score_log(prior.node_prior(e.action, e.node, old_parents),
                                               node_stats(data, e.action, e.node, old_parents, S, O), arity);
    const double new_score = bd_node_score_log(prior.node_prior(e.action, e.node, new_parents),
                                               node_stats(data, e.action, e.node, new_parents, S, O), arity);
    double log_ratio = new_score - old_score;
    log_ratio += prior.log_structure_prior(proposal) - prior.log_structure_prior(g);
    if (std::isnan(log_ratio)) log_ratio = -std::numeric_limits<double>::infinity();
    const bool accept = log_ratio >= 0.0 || uniform01(rng) < std::exp(log_ratio);
    if (accept) return {std::move(proposal), true, log_ratio};
    return {g, false, log_ratio};
}

struct GibbsConfig {
    std::size_t burn_in = 50;
    std::size_t mh_steps_per_sweep = 1;
    std::size_t num_particles = 100;
    /// Sweeps between emitted particles; 1 emits every post-burn-in sweep.
    std::size_t sweeps_per_particle = 1;

    void validate() const {
        if (num_particles == 0 || sweeps_per_particle == 0 || mh_steps_per_sweep == 0)
            throw InvalidArgument("GibbsConfig: particle count, sweeps and MH steps must be positive");
    }
};

/// MH-within-Gibbs chain over (state sequences, structure, counts) given the
/// action-observation record of every episode so far. Each sweep:
///  1. draw every episode's state sequence from the HMM of the current counts,
///  2. move the structure by MH using BD scores,
///  3. recompute counts = prior(G) + tallies of the sampled sequences.
/// After step 3 the counts always equal count_transitions of the sequences.
class GibbsChain {
public:
    GibbsChain(const DomainSpec& domain, StructureCache& cache, std::span<const History> episodes,
               FactoredCounts seed)
        : domain_(&domain), cache_(&cache), counts_(std::move(seed)), topology_(counts_.topology()) {
        trajectories_.reserve(episodes.size());
        for (const auto& h : episodes) {
            if (h.actions.size() != h.observations.size())
                throw InvalidArgument("GibbsChain: episode actions and observations differ in length");
            Trajectory t;
            t.actions = h.actions;
            t.observations = h.observations;
            t.states.assign(h.actions.size() + 1, 0);
            trajectories_.push_back(std::move(t));
        }
    }

    void sweep(std::size_t mh_steps, Rng& rng) {
        {
            SmoothingModel smoothing(counts_, domain_->state_space, domain_->observation_space);
            for (auto& t : trajectories_)
                t.states = sample_state_sequence(smoothing, t.actions, t.observations, domain_->initial_distribution, rng);
        }
        for (std::size_t k = 0; k < mh_steps; ++k) {
            MhStep step = mh_structure_step(topology_, trajectories_, cache_->prior(), *domain_, rng);
            ++proposals_;
            if (step.accepted && !(step.topology == topology_)) ++accepted_;
            topology_ = std::move(step.topology);
        }
        counts_ = count_transitions(trajectories_, topology_, cache_->prior_counts(topology_),
                                    domain_->state_space, domain_->observation_space);
        ++sweeps_;
    }

    /// Final state of the last episode, paired with the current model.
    FactoredParticle particle() const {
        StateIndex s = trajectories_.empty() ? 0 : trajectories_.back().states.back();
        return {s, counts_};
    }

    const Topology& topology() const { return topology_; }
    const FactoredCounts& counts() const { return counts_; }
    const std::vector<Trajectory>& trajectories() const { return trajectories_; }
    std::size_t sweeps() const { return sweeps_; }
    std::size_t proposals() const { return proposals_; }
    std::size_t accepted_moves() const { return accepted_; }

private:
    const DomainSpec* domain_;
    StructureCache* cache_;
    FactoredCounts counts_;
    Topology topology_;
    std::vector<Trajectory> trajectories_;
    std::size_t sweeps_ = 0;
    std::size_t proposals_ = 0;
    std::size_t accepted_ = 0;
};

/// Draws fresh particles <s_T, G, chi> from the posterior given all episodes
/// by running a GibbsChain from `seed`, discarding `burn_in` sweeps and
/// emitting one particle every `sweeps_per_particle` sweeps afterwards.
/// Without any executed step the particles are independent prior draws.
inline std::vector<FactoredParticle> gibbs_reinvigorate(const DomainSpec& domain, StructureCache& cache,
                                                        std::span<const History> episodes,
                                                        const FactoredCounts& seed, const GibbsConfig& config,
                                                        Rng& rng) {
    config.validate();
    std::vector<FactoredParticle> out;
    out.reserve(config.num_particles);
    std::size_t steps = 0;
    for (const auto& h : episodes) steps += h.actions.size();
    if (steps == 0) return sample_factored_prior(domain, cache, config.num_particles, rng);
    GibbsChain chain(domain, cache, episodes, seed);
    for (std::size_t k = 0; k < config.burn_in; ++k) chain.sweep(config.mh_steps_per_sweep, rng);
    while (out.size() < config.num_particles) {
        for (std::size_t k = 0; k < config.sweeps_per_particle; ++k) chain.sweep(config.mh_steps_per_sweep, rng);
        out.push_back(chain.particle());
    }
    return out;
}

}  // namespace fbapomdp
