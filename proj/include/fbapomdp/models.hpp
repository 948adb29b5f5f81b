#pragma once

#include <concepts>
#include <cstddef>

#include "fbapomdp/domain.hpp"
#include "fbapomdp/factored.hpp"
#include "fbapomdp/overlay.hpp"
#include "fbapomdp/tabular.hpp"

namespace fbapomdp {

// Hyper-state particles. The domain state changes every step; the model
// part (counts, and through them the topology) is owned by the particle.

struct StateParticle {
    StateIndex state = 0;
};

struct TabularParticle {
    StateIndex state = 0;
    TabularCounts counts;
};

struct FactoredParticle {
    StateIndex state = 0;
    FactoredCounts counts;

    const Topology& topology() const { return counts.topology(); }
};

struct NoScratch {
    void clear() {}
};

/// What the planner and the belief filter need from a model class:
///  - `simulate` draws one imagined step, recording count increments in
///    `scratch` instead of the particle;
///  - `propagate` advances a real particle for an observed step and returns
///    the observation likelihood used as importance weight;
///  - `sample_real_step` advances a particle and returns a sampled
///    observation (rejection sampling).
template <class M>
concept SimulationModel = requires(const M& m, typename M::Particle& p, const typename M::Particle& cp,
                                   typename M::Scratch& scratch, StateIndex s, ActionId a, ObservationIndex o,
                                   Rng& rng) {
    { m.domain() } -> std::same_as<const DomainSpec&>;
    { m.simulate(cp, scratch, s, a, rng) } -> std::same_as<StepResult>;
    { m.propagate(p, a, o, rng) } -> std::convertible_to<double>;
    { m.sample_real_step(p, a, rng) } -> std::convertible_to<ObservationIndex>;
    { M::state_of(cp) } -> std::convertible_to<StateIndex>;
    M::set_state(p, s);
    scratch.clear();
};

/// Plain POMCP: particles are domain states, dynamics are the true model.
class KnownModel {
public:
    using Particle = StateParticle;
    using Scratch = NoScratch;

    explicit KnownModel(const DomainSpec& domain) : domain_(&domain) {}

    const DomainSpec& domain() const { return *domain_; }
    static StateIndex state_of(const Particle& p) { return p.state; }
    static void set_state(Particle& p, StateIndex s) { p.state = s; }

    StepResult simulate(const Particle&, Scratch&, StateIndex s, ActionId a, Rng& rng) const {
        return domain_->step(s, a, rng);
    }

    double propagate(Particle& p, ActionId a, ObservationIndex o, Rng& rng) const {
        const auto& d = *domain_;
        ValueVector sv = d.state_space.values(p.state), nv;
        sample_next_state_values(d.true_model, nullptr, a, sv, nv, rng);
        p.state = d.state_space.encode(nv);
        return observation_probability(d.true_model, nullptr, a, nv, d.observation_space.values(o));
    }

    ObservationIndex sample_real_step(Particle& p, ActionId a, Rng& rng) const {
        const StepResult r = domain_->step(p.state, a, rng);
        p.state = r.next_state;
        return r.observation;
    }

private:
    const DomainSpec* domain_;
};

/// Flat Bayes-adaptive model: joint Dirichlet rows over (s', o).
class TabularModel {
public:
    using Particle = TabularParticle;
    using Scratch = CountOverlay;

    explicit TabularModel(const DomainSpec& domain) : domain_(&domain) {}

    const DomainSpec& domain() const { return *domain_; }
    static StateIndex state_of(const Particle& p) { return p.state; }
    static void set_state(Particle& p, StateIndex s) { p.state = s; }

    StepResult simulate(const Particle& p, Scratch& scratch, StateIndex s, ActionId a, Rng& rng) const {
        const std::size_t col = sample_tabular_column(p.counts, &scratch, s, a, rng);
        scratch.add(p.counts.row_key(s, a), col);
        const StateIndex next = col / p.counts.num_observations();
        return {next, col % p.counts.num_observations(), domain_->reward(s, a, next), domain_->terminal(s, a, next)};
    }

    /// s' ~ P_chi(s' | s, a), weight P_chi(o | s, a, s'), then chi += delta.
    double propagate(Particle& p, ActionId a, ObservationIndex o, Rng& rng) const {
        const std::size_t num_obs = p.counts.num_observations();
        const StateIndex next = sample_tabular_column(p.counts, nullptr, p.state, a, rng) / num_obs;
        double joint = 0.0, marginal = 0.0;
        p.counts.for_each_in_row(p.state, a, [&](std::size_t col, double c) {
            if (col / num_obs != next) return;
            marginal += c;
            if (col % num_obs == o) joint += c;
        });
        const double w = marginal > 0.0 ? joint / marginal : 0.0;
        p.counts.increment(p.state, a, next, o);
        p.state = next;
        return w;
    }

    ObservationIndex sample_real_step(Particle& p, ActionId a, Rng& rng) const {
        const std::size_t col = sample_tabular_column(p.counts, nullptr, p.state, a, rng);
        const StateIndex next = col / p.counts.num_observations();
        const ObservationIndex o = col % p.counts.num_observations();
        p.counts.increment(p.state, a, next, o);
        p.state = next;
        return o;
    }

private:
    const DomainSpec* domain_;
};

/// Factored Bayes-adaptive model: per-particle topology and CPT counts.
class FactoredModel {
public:
    using Particle = FactoredParticle;
    using Scratch = CountOverlay;

    explicit FactoredModel(const DomainSpec& domain) : domain_(&domain) {}

    const DomainSpec& domain() const { return *domain_; }
    static StateIndex state_of(const Particle& p) { return p.state; }
    static void set_state(Particle& p, StateIndex s) { p.state = s; }

    StepResult simulate(const Particle& p, Scratch& scratch, StateIndex s, ActionId a, Rng& rng) const {
        const auto& d = *domain_;
        ValueVector sv = d.state_space.values(s), nv, ov;
        sample_next_state_values(p.counts, &scratch, a, sv, nv, rng);
        sample_observation_values(p.counts, &scratch, a, nv, ov, rng);
        record_transition(scratch, p.counts, a, sv, nv, ov);
        const StateIndex next = d.state_space.encode(nv);
        return {next, d.observation_space.encode(ov), d.reward(s, a, next), d.terminal(s, a, next)};
    }

    /// s' from the state-node CPTs, weight from the observation-node CPTs,
    /// then one count per node for (s, a, s', o).
    double propagate(Particle& p, ActionId a, ObservationIndex o, Rng& rng) const {
        const auto& d = *domain_;
        ValueVector sv = d.state_space.values(p.state), nv;
        const ValueVector ov = d.observation_space.values(o);
        sample_next_state_values(p.counts, nullptr, a, sv, nv, rng);
        const double w = observation_probability(p.counts, nullptr, a, nv, ov);
        record_transition(p.counts, a, sv, nv, ov);
        p.state = d.state_space.encode(nv);
        return w;
    }

    ObservationIndex sample_real_step(Particle& p, ActionId a, Rng& rng) const {
        const auto& d = *domain_;
        ValueVector sv = d.state_space.values(p.state), nv, ov;
        sample_next_state_values(p.counts, nullptr, a, sv, nv, rng);
        sample_observation_values(p.counts, nullptr, a, nv, ov, rng);
        record_transition(p.counts, a, sv, nv, ov);
        p.state = d.state_space.encode(nv);
        return d.observation_space.encode(ov);
    }

private:
    const DomainSpec* domain_;
};

static_assert(SimulationModel<KnownModel>);
static_assert(SimulationModel<TabularModel>);
static_assert(SimulationModel<FactoredModel>);

}  // namespace fbapomdp
