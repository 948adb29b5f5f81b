#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "fbapomdp/belief.hpp"
#include "fbapomdp/planner.hpp"
#include "fbapomdp/prior.hpp"
#include "fbapomdp/reinvigoration.hpp"

namespace fbapomdp {

struct ReinvigorationConfig {
    bool enabled = true;
    /// Trigger when the accumulated belief log-likelihood falls below this.
    double threshold = -10.0 * std::log(10.0);
    GibbsConfig gibbs{};
    /// Seed the chain from a prior draw instead of the best current particle.
    bool seed_from_prior = false;
    /// Fraction of the old (resampled) particles kept next to the new ones.
    double keep_fraction = 0.0;

    void validate() const {
        gibbs.validate();
        if (!(keep_fraction >= 0.0 && keep_fraction < 1.0))
            throw InvalidArgument("ReinvigorationConfig: keep_fraction must lie in [0, 1)");
    }
};

struct AgentConfig {
    PlannerConfig planner{};
    std::size_t num_particles = 1000;
    ResamplingScheme resampling = ResamplingScheme::Systematic;
    ReinvigorationConfig reinvigoration{};

    void validate() const {
        planner.validate();
        if (num_particles == 0) throw InvalidArgument("AgentConfig: num_particles must be positive");
        reinvigoration.validate();
    }
};

struct ReinvigorationEvent {
    std::size_t episode = 0;
    std::size_t step = 0;
    std::size_t topologies_before = 0;
    std::size_t topologies_after = 0;
};

/// Belief-tracking planning agent over any SimulationModel. The particle
/// set carries the model belief from episode to episode; each episode
/// restarts the domain state from b0. With a factored model and
/// reinvigoration enabled, a collapsed or unlikely belief is replaced by
/// MH-within-Gibbs samples given every episode seen so far.
template <SimulationModel M>
class BayesAgent {
public:
    using Particle = typename M::Particle;

    BayesAgent(const DomainSpec& domain, std::vector<Particle> initial, AgentConfig config,
               const FactoredPrior* prior = nullptr)
        : domain_(&domain), model_(domain), config_(std::move(config)), planner_(model_, config_.planner),
          belief_(ParticleBelief<Particle>::uniform(std::move(initial))) {
        config_.validate();
        if (belief_.empty()) throw EmptyBelief("BayesAgent: no initial particles");
        if constexpr (std::is_same_v<Particle, FactoredParticle>) {
            if (config_.reinvigoration.enabled) {
                if (prior == nullptr) throw InvalidArgument("BayesAgent: reinvigoration needs the factored prior");
                cache_ = std::make_unique<StructureCache>(domain, *prior);
            }
        }
    }

    BayesAgent(const BayesAgent&) = delete;
    BayesAgent& operator=(const BayesAgent&) = delete;

    void begin_episode(Rng& rng) {
        for (auto& p : belief_.particles) M::set_state(p, domain_->sample_initial_state(rng));
        if (!history_.empty() || steps_ > 0) ++episode_;
        history_.emplace_back();
        steps_ = 0;
        reinvigorated_in_episode_ = false;
    }

    ActionId act(Rng& rng) {
        const std::size_t remaining = domain_->horizon > steps_ ? domain_->horizon - steps_ : 1;
        return planner_.plan(belief_, rng, remaining);
    }

    void observe(ActionId a, ObservationIndex o, Rng& rng) {
        if (history_.empty()) history_.emplace_back();
        history_.back().actions.push_back(a);
        history_.back().observations.push_back(o);
        ++steps_;
        bool collapsed = false;
        try {
            const BeliefUpdate u =
                importance_sampling_update(model_, belief_, a, o, rng, config_.resampling, config_.num_particles);
            last_ll_ = std::log(u.likelihood);
        } catch (const BeliefCollapse&) {
            collapsed = true;
            last_ll_ = -std::numeric_limits<double>::infinity();
        }
        if (reinvigoration_enabled() && (collapsed || should_reinvigorate(belief_, config_.reinvigoration.threshold))) {
            reinvigorate(rng);
            return;
        }
        if (collapsed) {
            // No particle explains o: move every particle on and keep the
            // weights, i.e. ignore this observation.
            for (auto& p : belief_.particles) model_.propagate(p, a, o, rng);
            ++ignored_observations_;
        }
    }

    double last_step_log_likelihood() const { return last_ll_; }

    bool reinvigoration_enabled() const {
        if constexpr (std::is_same_v<Particle, FactoredParticle>)
            return config_.reinvigoration.enabled && cache_ != nullptr;
        return false;
    }

    /// Replaces the belief with posterior samples given all episodes.
    void reinvigorate(Rng& rng) {
        if constexpr (std::is_same_v<Particle, FactoredParticle>) {
            if (!cache_) throw InvalidArgument("BayesAgent::reinvigorate: reinvigoration is disabled");
            const auto& rc = config_.reinvigoration;
            ReinvigorationEvent ev{episode_, steps_, topology_count(), 0};
            FactoredCounts seed;
            if (rc.seed_from_prior) {
                seed = cache_->prior_counts(cache_->prior().sample_topology(rng));
            } else {
                std::size_t best = 0;
                for (std::size_t i = 1; i < belief_.size(); ++i)
                    if (belief_.weights[i] > belief_.weights[best]) best = i;
                seed = belief_.particles[best].counts;
            }
            const std::size_t K = config_.num_particles;
            const auto keep = static_cast<std::size_t>(std::floor(rc.keep_fraction * static_cast<double>(K)));
            GibbsConfig gc = rc.gibbs;
            gc.num_particles = K - keep;
            std::vector<FactoredParticle> fresh = gibbs_reinvigorate(*domain_, *cache_, history_, seed, gc, rng);
            if (keep > 0 && belief_.total_weight() > 0.0) {
                auto old = resample<FactoredParticle>(belief_.particles, belief_.weights, keep, rng, config_.resampling);
                for (auto& p : old.particles) fresh.push_back(std::move(p));
            }
            belief_ = ParticleBelief<FactoredParticle>::uniform(std::move(fresh));
            ev.topologies_after = topology_count();
            events_.push_back(ev);
            reinvigorated_in_episode_ = true;
        } else {
            (void)rng;
            throw InvalidArgument("BayesAgent::reinvigorate: only factored agents reinvigorate");
        }
    }

    /// Distinct topologies in the belief; 1 for non-factored agents.
    std::size_t topology_count() const {
        if constexpr (std::is_same_v<Particle, FactoredParticle>)
            return distinct_topologies(belief_.particles);
        return 1;
    }

    const ParticleBelief<Particle>& belief() const { return belief_; }
    ParticleBelief<Particle>& belief() { return belief_; }
    const std::vector<History>& histories() const { return history_; }
    const std::vector<ReinvigorationEvent>& events() const { return events_; }
    bool reinvigorated_this_episode() const { return reinvigorated_in_episode_; }
    std::size_t ignored_observations() const { return ignored_observations_; }
    const AgentConfig& config() const { return config_; }

private:
    const DomainSpec* domain_;
    M model_;
    AgentConfig config_;
    Planner<M> planner_;
    ParticleBelief<Particle> belief_;
    std::unique_ptr<StructureCache> cache_;
    std::vector<History> history_;
    std::vector<ReinvigorationEvent> events_;
    std::size_t episode_ = 0;
    std::size_t steps_ = 0;
    std::size_t ignored_observations_ = 0;
    bool reinvigorated_in_episode_ = false;
    double last_ll_ = 0.0;
};

inline std::vector<TabularParticle> tabular_prior_particles(const DomainSpec& domain, const TabularCounts& prior,
                                                            std::size_t count, Rng& rng) {
    std::vector<TabularParticle> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back({domain.sample_initial_state(rng), prior});
    return out;
}

inline std::vector<StateParticle> state_particles(const DomainSpec& domain, std::size_t count, Rng& rng) {
    std::vector<StateParticle> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back({domain.sample_initial_state(rng)});
    return out;
}

}  // namespace fbapomdp
