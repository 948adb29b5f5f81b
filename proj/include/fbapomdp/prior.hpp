#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "fbapomdp/domain.hpp"
#include "fbapomdp/factored.hpp"
#include "fbapomdp/models.hpp"
#include "fbapomdp/tabular.hpp"
#include "fbapomdp/topology.hpp"

namespace fbapomdp {

/// Prior Dirichlet counts for one node given its parent set, as a flat
/// configs*arity vector (parent configurations in little-endian order of the
/// sorted parent list).
using NodePriorFn = std::function<std::vector<double>(ActionId, std::size_t node, std::span<const std::size_t> parents)>;

/// Reference conditional p(v | parent values); reads only its own parents
/// from the full state-value vector it is handed.
using ReferenceCpt = std::function<double(const ValueVector& source, std::size_t value)>;

/// Projects a reference CPT defined on `ref_parents` onto an arbitrary parent
/// set: every row of the result is `mass` times the reference distribution
/// averaged uniformly over the reference parents missing from `parents`.
/// Parents outside the reference set do not change the row. Cells that are
/// zero under every consistent reference row stay exactly zero.
inline std::vector<double> project_cpt(std::span<const std::size_t> ref_parents, const ReferenceCpt& reference,
                                       std::span<const std::size_t> parents, const FactoredSpace& states,
                                       std::size_t arity, double mass) {
    if (!(mass > 0.0)) throw InvalidArgument("project_cpt: mass must be positive");
    std::vector<std::size_t> missing;
    for (std::size_t p : ref_parents)
        if (std::find(parents.begin(), parents.end(), p) == parents.end()) missing.push_back(p);
    std::size_t configs = 1, missing_configs = 1;
    for (std::size_t p : parents) configs *= states.arity(p);
    for (std::size_t p : missing) missing_configs *= states.arity(p);

    std::vector<double> table(configs * arity, 0.0);
    ValueVector source(states.num_features(), 0);
    for (std::size_t c = 0; c < configs; ++c) {
        std::size_t rest = c;
        for (std::size_t p : parents) {
            source[p] = rest % states.arity(p);
            rest /= states.arity(p);
        }
        for (std::size_t r = 0; r < missing_configs; ++r) {
            std::size_t rr = r;
            for (std::size_t p : missing) {
                source[p] = rr % states.arity(p);
                rr /= states.arity(p);
            }
            for (std::size_t v = 0; v < arity; ++v) table[c * arity + v] += reference(source, v);
        }
        double total = 0.0;
        for (std::size_t v = 0; v < arity; ++v) total += table[c * arity + v];
        if (!(total > 0.0)) throw DegeneratePrior("project_cpt: reference row has zero mass");
        for (std::size_t v = 0; v < arity; ++v) table[c * arity + v] *= mass / total;
    }
    return table;
}

/// The agent's prior over factored hyper-states: initial states come from
/// the domain, structures from independent inclusion of each mutable edge on
/// top of `base_topology`, counts from `node_prior` for whatever parent set
/// a structure assigns.
struct FactoredPrior {
    NodePriorFn node_prior;
    Topology base_topology;
    EdgeConstraints mutable_edges;
    double edge_probability = 0.5;

    Topology sample_topology(Rng& rng) const {
        Topology g = base_topology;
        for (const auto& e : mutable_edges.mutable_edges)
            if (uniform01(rng) < edge_probability) g.add_edge(e);
        return g;
    }

    /// log p(G) up to a constant shared by all reachable structures.
    double log_structure_prior(const Topology& g) const {
        if (edge_probability <= 0.0 || edge_probability >= 1.0) return 0.0;
        double lp = 0.0;
        const double on = std::log(edge_probability), off = std::log1p(-edge_probability);
        for (const auto& e : mutable_edges.mutable_edges) lp += g.has_edge(e) ? on : off;
        return lp;
    }

    FactoredCounts counts_for(std::shared_ptr<const CountLayout> layout) const {
        FactoredCounts out(std::move(layout));
        const CountLayout& l = out.layout();
        for (std::size_t a = 0; a < l.num_actions(); ++a) {
            for (std::size_t node = 0; node < l.num_nodes(); ++node) {
                const auto& parents = l.block(a, node).parents;
                out.set_node(a, node, node_prior(a, node, parents));
            }
        }
        return out;
    }

    /// A copy whose structure prior is a point mass on `g`.
    FactoredPrior concentrated_on(const Topology& g) const {
        FactoredPrior p = *this;
        p.base_topology = g;
        p.mutable_edges.mutable_edges.clear();
        return p;
    }
};

/// Shares one layout and one prior count table per distinct topology.
/// Not thread-safe; each agent owns its own cache.
class StructureCache {
public:
    StructureCache(const DomainSpec& domain, const FactoredPrior& prior) : domain_(&domain), prior_(&prior) {}

    const FactoredCounts& prior_counts(const Topology& g) {
        auto it = entries_.find(g);
        if (it == entries_.end()) {
            auto layout = make_layout(g, domain_->state_space, domain_->observation_space);
            it = entries_.emplace(g, prior_->counts_for(std::move(layout))).first;
        }
        return it->second;
    }

    std::size_t size() const { return entries_.size(); }
    const FactoredPrior& prior() const { return *prior_; }
    const DomainSpec& domain() const { return *domain_; }

private:
    const DomainSpec* domain_;
    const FactoredPrior* prior_;
    std::unordered_map<Topology, FactoredCounts, TopologyHash> entries_;
};

/// K particles from the factored prior: state from b0, topology from the
/// structure prior, counts = chi0 of that topology.
inline std::vector<FactoredParticle> sample_factored_prior(const DomainSpec& domain, StructureCache& cache,
                                                           std::size_t count, Rng& rng) {
    std::vector<FactoredParticle> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const Topology g = cache.prior().sample_topology(rng);
        out.push_back({domain.sample_initial_state(rng), cache.prior_counts(g)});
    }
    return out;
}

/// Flat joint-Dirichlet prior chi(s, a, s', o) = confidence * P(s', o | s, a)
/// under the expected dynamics of `counts`. Zero-probability outcomes get no
/// prior mass.
inline TabularCounts flat_prior_from(const DomainSpec& domain, const FactoredCounts& counts, double confidence) {
    const auto& S = domain.state_space;
    const auto& O = domain.observation_space;
    const CountLayout& layout = counts.layout();
    const std::size_t n = S.num_features();
    const std::size_t m = O.num_features();
    return TabularCounts(S.size(), domain.action_count, O.size(), [&](StateIndex s, ActionId a, auto& entries) {
        const ValueVector sv = S.values(s);
        // Enumerate the support of every output node, then take the product.
        std::vector<std::vector<std::pair<std::size_t, double>>> state_support(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = layout.config(a, i, sv);
            for (std::size_t v = 0; v < S.arity(i); ++v)
                if (double p = counts.expected(a, i, c, v); p > 0.0) state_support[i].emplace_back(v, p);
        }
        ValueVector nv(n), ov(m);
        std::function<void(std::size_t, double)> over_states = [&](std::size_t i, double p) {
            if (i == n) {
                const StateIndex next = S.encode(nv);
                std::function<void(std::size_t, double)> over_obs = [&](std::size_t j, double q) {
                    if (j == m) {
                        entries.emplace_back(next * O.size() + O.encode(ov), confidence * q);
                        return;
                    }
                    const std::size_t c = layout.config(a, n + j, nv);
                    for (std::size_t v = 0; v < O.arity(j); ++v) {
                        const double pv = counts.expected(a, n + j, c, v);
                        if (pv <= 0.0) continue;
                        ov[j] = v;
                        over_obs(j + 1, q * pv);
                    }
                };
                over_obs(0, p);
                return;
            }
            for (const auto& [v, pv] : state_support[i]) {
                nv[i] = v;
                over_states(i + 1, p * pv);
            }
        };
        over_states(0, 1.0);
    });
}

}  // namespace fbapomdp
