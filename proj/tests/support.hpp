#pragma once

// Shared fixtures for the unit, property and acceptance tests: seeded random
// generators for spaces, topologies and counts, and small hand-built domains.

#include <cmath>
#include <cstddef>
#include <vector>

#include "fbapomdp/fbapomdp.hpp"

namespace fbt {

using namespace fbapomdp;

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline FactoredSpace binary_space(std::size_t n, const char* prefix = "f") {
    std::vector<Feature> fs;
    for (std::size_t i = 0; i < n; ++i) fs.push_back({std::string(prefix) + std::to_string(i), 2});
    return FactoredSpace(std::move(fs));
}

inline FactoredSpace random_space(Rng& rng, std::size_t max_features, std::size_t max_arity) {
    const std::size_t n = 1 + uniform_index(rng, max_features);
    std::vector<Feature> fs;
    for (std::size_t i = 0; i < n; ++i) fs.push_back({"x" + std::to_string(i), 2 + uniform_index(rng, max_arity - 1)});
    return FactoredSpace(std::move(fs));
}

/// Every node gets each possible parent independently w.p. `p`.
inline Topology random_topology(Rng& rng, std::size_t actions, std::size_t n, std::size_t m, double p = 0.5) {
    Topology g(actions, n, m);
    for (std::size_t a = 0; a < actions; ++a)
        for (std::size_t node = 0; node < n + m; ++node)
            for (std::size_t q = 0; q < n; ++q)
                if (uniform01(rng) < p) g.add_edge({a, node, q});
    return g;
}

inline Topology full_topology(std::size_t actions, std::size_t n, std::size_t m) {
    Topology g(actions, n, m);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (std::size_t a = 0; a < actions; ++a)
        for (std::size_t node = 0; node < n + m; ++node) g.set_parents(a, node, all);
    return g;
}

/// Counts drawn uniformly from [lo, hi] per cell.
inline FactoredCounts random_counts(Rng& rng, std::shared_ptr<const CountLayout> layout, double lo = 0.5,
                                    double hi = 5.0) {
    FactoredCounts c(std::move(layout));
    const CountLayout& l = c.layout();
    for (std::size_t a = 0; a < l.num_actions(); ++a) {
        for (std::size_t node = 0; node < l.num_nodes(); ++node) {
            const NodeBlock& b = l.block(a, node);
            std::vector<double> t(b.configs * b.arity);
            for (double& x : t) x = uniform(rng, lo, hi);
            c.set_node(a, node, t);
        }
    }
    return c;
}

/// Same network normalised to probabilities.
inline FactoredCounts normalised(const FactoredCounts& counts) {
    FactoredCounts out = counts;
    const CountLayout& l = counts.layout();
    for (std::size_t a = 0; a < l.num_actions(); ++a)
        for (std::size_t node = 0; node < l.num_nodes(); ++node)
            for (std::size_t c = 0; c < l.block(a, node).configs; ++c) {
                std::vector<double> row(counts.row(a, node, c).begin(), counts.row(a, node, c).end());
                const double t = counts.total(a, node, c);
                for (double& x : row) x /= t;
                out.set_row(a, node, c, row);
            }
    return out;
}

/// A domain around arbitrary true CPTs; reward 0 everywhere, never terminal.
inline DomainSpec toy_domain(FactoredSpace states, FactoredSpace observations, FactoredCounts true_model,
                             std::vector<double> initial = {}) {
    DomainSpec d;
    d.name = "toy";
    d.state_space = std::move(states);
    d.observation_space = std::move(observations);
    d.action_count = true_model.layout().num_actions();
    for (std::size_t a = 0; a < d.action_count; ++a) d.action_names.push_back("a" + std::to_string(a));
    d.reward = [](StateIndex, ActionId, StateIndex) { return 0.0; };
    d.terminal = [](StateIndex, ActionId, StateIndex) { return false; };
    if (initial.empty()) initial.assign(d.state_space.size(), 1.0 / static_cast<double>(d.state_space.size()));
    d.initial_distribution = std::move(initial);
    d.true_model = normalised(true_model);
    d.finalize();
    return d;
}

/// One binary state feature, one binary observation, one action: the state
/// flips w.p. `flip`, the observation is correct w.p. `accuracy`.
inline DomainSpec two_state_hmm(double flip, double accuracy, std::vector<double> initial = {0.5, 0.5}) {
    Topology g(1, 1, 1);
    g.set_parents(0, 0, {0});
    g.set_parents(0, 1, {0});
    FactoredCounts c(make_layout(g, binary_space(1, "s"), binary_space(1, "o")));
    c.set_node(0, 0, std::vector<double>{1 - flip, flip, flip, 1 - flip});
    c.set_node(0, 1, std::vector<double>{accuracy, 1 - accuracy, 1 - accuracy, accuracy});
    return toy_domain(binary_space(1, "s"), binary_space(1, "o"), c, std::move(initial));
}

/// Two binary state features observed exactly through two copy observations,
/// one action, starting in state 0. s0 flips w.p. 0.3; s1' copies s0 w.p. `coupling` and is a fair
/// coin otherwise. The only mutable edge is s0 -> s1'. Because observations
/// pin the states, smoothing is deterministic and the chain's structure
/// posterior is the BD posterior of the one recorded trajectory.
struct StructureToy {
    DomainSpec domain;
    FactoredPrior prior;
    Edge edge;
    std::vector<History> episodes;
    Trajectory trajectory;
};

inline StructureToy observed_structure_toy(std::size_t T, double coupling, std::uint64_t seed) {
    StructureToy toy;
    const FactoredSpace S = binary_space(2, "s");
    const FactoredSpace O = binary_space(2, "o");
    Topology g(1, 2, 2);
    g.set_parents(0, 0, {0});
    g.set_parents(0, 1, {0});
    g.set_parents(0, 2, {0});
    g.set_parents(0, 3, {1});
    FactoredCounts c(make_layout(g, S, O));
    c.set_node(0, 0, std::vector<double>{0.7, 0.3, 0.3, 0.7});
    const double hi = coupling + (1 - coupling) / 2, lo = 1 - hi;
    c.set_node(0, 1, std::vector<double>{hi, lo, lo, hi});
    c.set_node(0, 2, std::vector<double>{1, 0, 0, 1});
    c.set_node(0, 3, std::vector<double>{1, 0, 0, 1});
    // Fixed start so that s_0 is known too.
    std::vector<double> start(S.size(), 0.0);
    start[0] = 1.0;
    toy.domain = toy_domain(S, O, c, start);

    Topology base(1, 2, 2);
    base.set_parents(0, 0, {0});
    base.set_parents(0, 2, {0});
    base.set_parents(0, 3, {1});
    toy.edge = {0, 1, 0};
    toy.prior.base_topology = base;
    toy.prior.mutable_edges.mutable_edges = {toy.edge};
    toy.prior.node_prior = [](ActionId, std::size_t node, std::span<const std::size_t> parents) {
        if (node >= 2) return std::vector<double>{100, 0, 0, 100};
        return std::vector<double>(std::size_t{2} << parents.size(), 1.0);
    };

    Rng rng(seed);
    StateIndex s = toy.domain.sample_initial_state(rng);
    toy.trajectory.states.push_back(s);
    History h;
    for (std::size_t t = 0; t < T; ++t) {
        const StepResult r = toy.domain.step(s, 0, rng);
        h.actions.push_back(0);
        h.observations.push_back(r.observation);
        s = r.next_state;
        toy.trajectory.states.push_back(s);
    }
    toy.trajectory.actions = h.actions;
    toy.trajectory.observations = h.observations;
    toy.episodes.push_back(std::move(h));
    return toy;
}

/// Exact log posterior odds log p(G + edge | data) - log p(G | data) of the toy.
inline double exact_log_odds(const StructureToy& toy) {
    const std::vector<Trajectory> data{toy.trajectory};
    const Topology with = toy.prior.base_topology.with_flipped(toy.edge);
    auto score = [&](const Topology& g) {
        const FactoredCounts prior = toy.prior.counts_for(make_layout(g, toy.domain.state_space,
                                                                      toy.domain.observation_space));
        return bd_score_log(g, sufficient_stats(data, prior.layout_ptr(), toy.domain.state_space,
                                                toy.domain.observation_space),
                            prior) +
               toy.prior.log_structure_prior(g);
    };
    return score(with) - score(toy.prior.base_topology);
}

/// Total-variation distance between two distributions of equal size.
inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
    return 0.5 * d;
}

/// Exact Bayes filter over states for a known model: b'(s') ∝ sum_s b(s) P(s',o|s,a).
inline std::vector<double> exact_filter(const DomainSpec& d, std::vector<double> belief, ActionId a,
                                        ObservationIndex o) {
    const std::size_t S = d.state_space.size();
    std::vector<double> next(S, 0.0);
    double z = 0.0;
    for (StateIndex s = 0; s < S; ++s)
        for (StateIndex t = 0; t < S; ++t) {
            const double p = belief[s] * d.true_probability(s, a, t, o);
            next[t] += p;
            z += p;
        }
    for (double& x : next) x /= z;
    return next;
}

}  // namespace fbt
