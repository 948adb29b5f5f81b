#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <unordered_set>
#include <vector>

#include "fbapomdp/models.hpp"
#include "fbapomdp/topology.hpp"

namespace fbapomdp {

enum class ResamplingScheme { Systematic, Multinomial };

/// Weighted particle approximation of the belief over hyper-states.
///
/// `log_likelihood` accumulates log(eta) of every update since the last
/// reset, where eta is the summed weight after reweighting.
template <class P>
struct ParticleBelief {
    std::vector<P> particles;
    std::vector<double> weights;
    double log_likelihood = 0.0;

    std::size_t size() const { return particles.size(); }
    bool empty() const { return particles.empty(); }

    double total_weight() const {
        double t = 0.0;
        for (double w : weights) t += w;
        return t;
    }

    static ParticleBelief uniform(std::vector<P> ps) {
        ParticleBelief b;
        b.weights.assign(ps.size(), ps.empty() ? 0.0 : 1.0 / static_cast<double>(ps.size()));
        b.particles = std::move(ps);
        return b;
    }
};

/// Draws K particles proportionally to `weights`; every output weight is 1/K.
template <class P>
ParticleBelief<P> resample(std::span<const P> particles, std::span<const double> weights, std::size_t count, Rng& rng,
                           ResamplingScheme scheme = ResamplingScheme::Systematic) {
    if (particles.size() != weights.size()) throw InvalidArgument("resample: particle/weight size mismatch");
    if (count == 0) throw InvalidArgument("resample: particle count must be positive");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw InvalidArgument("resample: weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw BeliefCollapse("resample: total weight is zero");

    ParticleBelief<P> out;
    out.particles.reserve(count);
    const double step = total / static_cast<double>(count);
    if (scheme == ResamplingScheme::Systematic) {
        double target = uniform01(rng) * step;
        double acc = 0.0;
        std::size_t i = 0;
        for (std::size_t k = 0; k < count; ++k) {
            while (i + 1 < weights.size() && (acc + weights[i] <= target || weights[i] <= 0.0)) {
                acc += weights[i];
                ++i;
            }
            std::size_t pick = i;
            while (weights[pick] <= 0.0 && pick > 0) --pick;
            out.particles.push_back(particles[pick]);
            target += step;
        }
    } else {
        std::vector<double> cdf(weights.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) cdf[i] = (acc += weights[i]);
        for (std::size_t k = 0; k < count; ++k) {
            const double u = uniform01(rng) * total;
            auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                                       static_cast<std::ptrdiff_t>(cdf.size()) - 1));
            while (weights[i] <= 0.0 && i > 0) --i;
            out.particles.push_back(particles[i]);
        }
    }
    out.weights.assign(count, 1.0 / static_cast<double>(count));
    return out;
}

struct BeliefUpdate {
    /// eta: sum of the reweighted (unnormalised) particle weights.
    double likelihood = 0.0;
};

/// Importance-sampling update followed by resampling to `count` particles.
/// Throws BeliefCollapse when every particle gives the observation zero
/// likelihood; `belief` is left untouched in that case.
template <SimulationModel M>
BeliefUpdate importance_sampling_update(const M& model, ParticleBelief<typename M::Particle>& belief, ActionId a,
                                        ObservationIndex o, Rng& rng,
                                        ResamplingScheme scheme = ResamplingScheme::Systematic,
                                        std::size_t count = 0) {
    if (belief.empty()) throw EmptyBelief("importance_sampling_update: empty belief");
    if (o >= model.domain().observation_space.size())
        throw InvalidArgument("importance_sampling_update: observation out of range");
    if (count == 0) count = belief.size();
    std::vector<typename M::Particle> next = belief.particles;
    std::vector<double> w(next.size());
    double eta = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (belief.weights[i] <= 0.0) {
            w[i] = 0.0;
            continue;
        }
        w[i] = model.propagate(next[i], a, o, rng) * belief.weights[i];
        eta += w[i];
    }
    if (!(eta > 0.0)) throw BeliefCollapse("importance_sampling_update: observation impossible under every particle");
    const double ll = belief.log_likelihood + std::log(eta);
    belief = resample<typename M::Particle>(next, w, count, rng, scheme);
    belief.log_likelihood = ll;
    return {eta};
}

/// Rejection-sampling update: draw a particle, simulate, keep it when the
/// simulated observation equals `o`, until `count` are accepted.
template <SimulationModel M>
ParticleBelief<typename M::Particle> rejection_sampling_update(const M& model,
                                                               const ParticleBelief<typename M::Particle>& belief,
                                                               ActionId a, ObservationIndex o, Rng& rng,
                                                               std::size_t max_attempts, std::size_t count = 0,
                                                               std::size_t* attempts_out = nullptr) {
    if (belief.empty()) throw EmptyBelief("rejection_sampling_update: empty belief");
    if (count == 0) count = belief.size();
    std::vector<double> cdf(belief.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < belief.size(); ++i) cdf[i] = (acc += belief.weights[i]);
    if (!(acc > 0.0)) throw BeliefCollapse("rejection_sampling_update: total weight is zero");

    ParticleBelief<typename M::Particle> out;
    out.particles.reserve(count);
    const std::size_t budget = max_attempts * count;
    std::size_t attempts = 0;
    while (out.particles.size() < count) {
        if (attempts >= budget) {
            if (attempts_out) *attempts_out = attempts;
            throw RejectionTimeout("rejection_sampling_update: acceptance budget exhausted");
        }
        ++attempts;
        const double u = uniform01(rng) * acc;
        auto i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (i >= belief.size()) i = belief.size() - 1;
        auto p = belief.particles[i];
        if (model.sample_real_step(p, a, rng) == o) out.particles.push_back(std::move(p));
    }
    if (attempts_out) *attempts_out = attempts;
    out.weights.assign(count, 1.0 / static_cast<double>(count));
    out.log_likelihood = belief.log_likelihood + std::log(static_cast<double>(count) / static_cast<double>(attempts));
    return out;
}

/// True when the accumulated update log-likelihood fell below `threshold`.
template <class P>
bool should_reinvigorate(const ParticleBelief<P>& belief, double threshold) {
    return belief.log_likelihood < threshold;
}

/// Number of distinct topologies among factored particles.
inline std::size_t distinct_topologies(std::span<const FactoredParticle> particles) {
    std::unordered_set<const CountLayout*> layouts;
    std::vector<const Topology*> unique;
    for (const auto& p : particles) {
        if (!layouts.insert(&p.counts.layout()).second) continue;
        const Topology& g = p.topology();
        if (std::none_of(unique.begin(), unique.end(), [&](const Topology* u) { return *u == g; }))
            unique.push_back(&g);
    }
    return unique.size();
}

/// Line-oriented dump: `weight state` per particle, followed for factored
/// particles by the topology edge list and a blank line.
template <class P>
void dump_belief(std::ostream& os, const ParticleBelief<P>& belief) {
    os << "# particles " << belief.size() << " log_likelihood " << belief.log_likelihood << '\n';
    for (std::size_t i = 0; i < belief.size(); ++i) {
        os << belief.weights[i] << ' ' << belief.particles[i].state << '\n';
        if constexpr (requires { belief.particles[i].topology(); })
            os << to_edge_list(belief.particles[i].topology()) << '\n';
    }
}

}  // namespace fbapomdp
