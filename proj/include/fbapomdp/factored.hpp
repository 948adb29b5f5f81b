#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "fbapomdp/core.hpp"
#include "fbapomdp/overlay.hpp"
#include "fbapomdp/topology.hpp"

namespace fbapomdp {

/// Shape of one node's conditional table: `configs` parent-value
/// configurations, each a row of `arity` cells.
struct NodeBlock {
    std::vector<std::size_t> parents;
    std::vector<std::size_t> strides;
    std::size_t arity = 0;
    std::size_t configs = 1;
    std::size_t cell_offset = 0;
    std::size_t row_offset = 0;
};

/// Memory layout of all conditional tables of a topology. Immutable and
/// shared by every count table with the same structure.
class CountLayout {
public:
    CountLayout(Topology topology, const FactoredSpace& states, const FactoredSpace& observations)
        : topology_(std::move(topology)) {
        topology_.validate();
        if (topology_.num_state_features() != states.num_features() ||
            topology_.num_obs_features() != observations.num_features())
            throw ModelInconsistency("CountLayout: topology does not match the spaces");
        for (std::size_t i = 0; i < states.num_features(); ++i) state_arities_.push_back(states.arity(i));
        for (std::size_t j = 0; j < observations.num_features(); ++j) obs_arities_.push_back(observations.arity(j));

        const std::size_t n = topology_.num_state_features();
        blocks_.reserve(topology_.num_actions() * topology_.num_nodes());
        for (std::size_t a = 0; a < topology_.num_actions(); ++a) {
            for (std::size_t node = 0; node < topology_.num_nodes(); ++node) {
                NodeBlock b;
                b.parents = topology_.parents(a, node);
                b.arity = node < n ? state_arities_[node] : obs_arities_[node - n];
                std::size_t stride = 1;
                for (std::size_t p : b.parents) {
                    b.strides.push_back(stride);
                    stride *= state_arities_[p];
                }
                b.configs = stride;
                b.cell_offset = num_cells_;
                b.row_offset = num_rows_;
                num_cells_ += b.configs * b.arity;
                num_rows_ += b.configs;
                blocks_.push_back(std::move(b));
            }
        }
    }

    const Topology& topology() const { return topology_; }
    std::size_t num_actions() const { return topology_.num_actions(); }
    std::size_t num_nodes() const { return topology_.num_nodes(); }
    std::size_t num_state_features() const { return topology_.num_state_features(); }
    std::size_t num_obs_features() const { return topology_.num_obs_features(); }
    std::size_t num_cells() const { return num_cells_; }
    std::size_t num_rows() const { return num_rows_; }
    const std::vector<std::size_t>& state_arities() const { return state_arities_; }
    const std::vector<std::size_t>& obs_arities() const { return obs_arities_; }

    const NodeBlock& block(std::size_t action, std::size_t node) const {
        return blocks_[action * topology_.num_nodes() + node];
    }

    /// Parent configuration of `node` given the values its parents read:
    /// input state values for s' nodes, next-state values for o nodes.
    std::size_t config(std::size_t action, std::size_t node, const ValueVector& parent_source) const {
        const NodeBlock& b = block(action, node);
        std::size_t c = 0;
        for (std::size_t k = 0; k < b.parents.size(); ++k) c += parent_source[b.parents[k]] * b.strides[k];
        return c;
    }

    bool same_shape(const CountLayout& other) const {
        return this == &other || (topology_ == other.topology_ && state_arities_ == other.state_arities_ &&
                                  obs_arities_ == other.obs_arities_);
    }

private:
    Topology topology_;
    std::vector<std::size_t> state_arities_;
    std::vector<std::size_t> obs_arities_;
    std::vector<NodeBlock> blocks_;
    std::size_t num_cells_ = 0;
    std::size_t num_rows_ = 0;
};

inline std::shared_ptr<const CountLayout> make_layout(Topology g, const FactoredSpace& states,
                                                      const FactoredSpace& observations) {
    return std::make_shared<const CountLayout>(std::move(g), states, observations);
}

/// Dirichlet counts over every conditional table of a topology (chi_G).
/// Cell values are nonnegative reals; row totals are cached.
class FactoredCounts {
public:
    FactoredCounts() = default;

    explicit FactoredCounts(std::shared_ptr<const CountLayout> layout)
        : layout_(std::move(layout)), cells_(layout_->num_cells(), 0.0), totals_(layout_->num_rows(), 0.0) {}

    const CountLayout& layout() const { return *layout_; }
    const std::shared_ptr<const CountLayout>& layout_ptr() const { return layout_; }
    const Topology& topology() const { return layout_->topology(); }

    std::span<const double> row(std::size_t action, std::size_t node, std::size_t config) const {
        const NodeBlock& b = layout_->block(action, node);
        return {cells_.data() + b.cell_offset + config * b.arity, b.arity};
    }

    double total(std::size_t action, std::size_t node, std::size_t config) const {
        return totals_[layout_->block(action, node).row_offset + config];
    }

    std::uint64_t row_key(std::size_t action, std::size_t node, std::size_t config) const {
        return layout_->block(action, node).row_offset + config;
    }

    void set_row(std::size_t action, std::size_t node, std::size_t config, std::span<const double> values) {
        const NodeBlock& b = layout_->block(action, node);
        if (values.size() != b.arity || config >= b.configs)
            throw ModelInconsistency("FactoredCounts::set_row: shape mismatch");
        double t = 0.0;
        for (std::size_t v = 0; v < b.arity; ++v) {
            if (values[v] < 0.0 || !std::isfinite(values[v]))
                throw InvalidArgument("FactoredCounts::set_row: counts must be finite and nonnegative");
            cells_[b.cell_offset + config * b.arity + v] = values[v];
            t += values[v];
        }
        totals_[b.row_offset + config] = t;
    }

    /// Sets every row of one node's table from a flat configs*arity vector.
    void set_node(std::size_t action, std::size_t node, std::span<const double> table) {
        const NodeBlock& b = layout_->block(action, node);
        if (table.size() != b.configs * b.arity)
            throw ModelInconsistency("FactoredCounts::set_node: table size mismatch");
        for (std::size_t c = 0; c < b.configs; ++c) set_row(action, node, c, table.subspan(c * b.arity, b.arity));
    }

    std::span<const double> node_cells(std::size_t action, std::size_t node) const {
        const NodeBlock& b = layout_->block(action, node);
        return {cells_.data() + b.cell_offset, b.configs * b.arity};
    }

    void increment(std::size_t action, std::size_t node, std::size_t config, std::size_t value,
                   double amount = 1.0) {
        const NodeBlock& b = layout_->block(action, node);
        cells_[b.cell_offset + config * b.arity + value] += amount;
        totals_[b.row_offset + config] += amount;
    }

    /// Dirichlet mean of one cell.
    double expected(std::size_t action, std::size_t node, std::size_t config, std::size_t value) const {
        const double t = total(action, node, config);
        if (!(t > 0.0)) throw DegeneratePrior("FactoredCounts: conditional table row has zero mass");
        return row(action, node, config)[value] / t;
    }

    /// Throws unless every row has positive mass and nonnegative entries.
    void validate() const {
        for (double c : cells_)
            if (c < 0.0 || !std::isfinite(c)) throw InvalidArgument("FactoredCounts: negative or non-finite count");
        for (double t : totals_)
            if (!(t > 0.0)) throw DegeneratePrior("FactoredCounts: row with zero mass");
    }

    std::span<const double> cells() const { return cells_; }
    std::span<const double> totals() const { return totals_; }

    friend bool operator==(const FactoredCounts& a, const FactoredCounts& b) {
        return a.layout_->same_shape(*b.layout_) && a.cells_ == b.cells_;
    }

private:
    std::shared_ptr<const CountLayout> layout_;
    std::vector<double> cells_;
    std::vector<double> totals_;
};

/// Integer tallies N^{nev} with the shape of a count table.
class SufficientStats {
public:
    SufficientStats() = default;
    explicit SufficientStats(std::shared_ptr<const CountLayout> layout)
        : layout_(std::move(layout)), cells_(layout_->num_cells(), 0) {}

    const CountLayout& layout() const { return *layout_; }
    const std::shared_ptr<const CountLayout>& layout_ptr() const { return layout_; }

    std::uint64_t at(std::size_t action, std::size_t node, std::size_t config, std::size_t value) const {
        const NodeBlock& b = layout_->block(action, node);
        return cells_[b.cell_offset + config * b.arity + value];
    }

    std::span<const std::uint64_t> node_cells(std::size_t action, std::size_t node) const {
        const NodeBlock& b = layout_->block(action, node);
        return {cells_.data() + b.cell_offset, b.configs * b.arity};
    }

    void add(std::size_t action, std::size_t node, std::size_t config, std::size_t value) {
        const NodeBlock& b = layout_->block(action, node);
        ++cells_[b.cell_offset + config * b.arity + value];
    }

    SufficientStats& operator+=(const SufficientStats& other) {
        if (!layout_->same_shape(*other.layout_)) throw ModelInconsistency("SufficientStats: shape mismatch");
        for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
        return *this;
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : cells_) t += c;
        return t;
    }

    std::span<const std::uint64_t> cells() const { return cells_; }

    friend bool operator==(const SufficientStats& a, const SufficientStats& b) {
        return a.layout_->same_shape(*b.layout_) && a.cells_ == b.cells_;
    }

private:
    std::shared_ptr<const CountLayout> layout_;
    std::vector<std::uint64_t> cells_;
};

namespace detail {

inline std::size_t sample_cells(std::span<const double> base, double base_total, const CountOverlay* overlay,
                                std::uint64_t key, Rng& rng) {
    if (overlay == nullptr || !overlay->touches(key)) {
        if (!(base_total > 0.0)) throw DegeneratePrior("sampling from a row with zero mass");
        double u = uniform01(rng) * base_total;
        std::size_t last = base.size() - 1;
        for (std::size_t v = 0; v < base.size(); ++v) {
            if (base[v] <= 0.0) continue;
            last = v;
            if (u < base[v]) return v;
            u -= base[v];
        }
        return last;
    }
    const double total = base_total + overlay->row_total(key);
    if (!(total > 0.0)) throw DegeneratePrior("sampling from a row with zero mass");
    double u = uniform01(rng) * total;
    std::size_t last = base.size() - 1;
    for (std::size_t v = 0; v < base.size(); ++v) {
        const double c = base[v] + overlay->cell(key, v);
        if (c <= 0.0) continue;
        last = v;
        if (u < c) return v;
        u -= c;
    }
    return last;
}

inline double cell_probability(const FactoredCounts& counts, const CountOverlay* overlay, std::size_t action,
                               std::size_t node, std::size_t config, std::size_t value) {
    double c = counts.row(action, node, config)[value];
    double t = counts.total(action, node, config);
    if (overlay != nullptr) {
        const auto key = counts.row_key(action, node, config);
        if (overlay->touches(key)) {
            c += overlay->cell(key, value);
            t += overlay->row_total(key);
        }
    }
    if (!(t > 0.0)) throw DegeneratePrior("FactoredCounts: conditional table row has zero mass");
    return c / t;
}

}  // namespace detail

/// Samples next-state feature values node by node from the expected
/// conditional tables (plus optional simulation increments).
inline void sample_next_state_values(const FactoredCounts& counts, const CountOverlay* overlay, std::size_t action,
                                     const ValueVector& state, ValueVector& next, Rng& rng) {
    const CountLayout& layout = counts.layout();
    const std::size_t n = layout.num_state_features();
    next.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = layout.config(action, i, state);
        next[i] = detail::sample_cells(counts.row(action, i, c), counts.total(action, i, c), overlay,
                                       counts.row_key(action, i, c), rng);
    }
}

inline void sample_observation_values(const FactoredCounts& counts, const CountOverlay* overlay,
                                      std::size_t action, const ValueVector& next, ValueVector& obs, Rng& rng) {
    const CountLayout& layout = counts.layout();
    const std::size_t n = layout.num_state_features();
    const std::size_t m = layout.num_obs_features();
    obs.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t c = layout.config(action, n + j, next);
        obs[j] = detail::sample_cells(counts.row(action, n + j, c), counts.total(action, n + j, c), overlay,
                                      counts.row_key(action, n + j, c), rng);
    }
}

/// Product of expected state-node probabilities p(s'|s,a).
inline double transition_probability(const FactoredCounts& counts, const CountOverlay* overlay, std::size_t action,
                                     const ValueVector& state, const ValueVector& next) {
    const CountLayout& layout = counts.layout();
    double p = 1.0;
    for (std::size_t i = 0; i < layout.num_state_features() && p > 0.0; ++i)
        p *= detail::cell_probability(counts, overlay, action, i, layout.config(action, i, state), next[i]);
    return p;
}

/// Product of expected observation-node probabilities p(o|s',a).
inline double observation_probability(const FactoredCounts& counts, const CountOverlay* overlay,
                                      std::size_t action, const ValueVector& next, const ValueVector& obs) {
    const CountLayout& layout = counts.layout();
    const std::size_t n = layout.num_state_features();
    double p = 1.0;
    for (std::size_t j = 0; j < layout.num_obs_features() && p > 0.0; ++j)
        p *= detail::cell_probability(counts, overlay, action, n + j, layout.config(action, n + j, next), obs[j]);
    return p;
}

/// Adds one count per output node (n + m in total) for the transition.
inline void record_transition(FactoredCounts& counts, std::size_t action, const ValueVector& state,
                              const ValueVector& next, const ValueVector& obs) {
    const CountLayout& layout = counts.layout();
    const std::size_t n = layout.num_state_features();
    for (std::size_t i = 0; i < n; ++i) counts.increment(action, i, layout.config(action, i, state), next[i]);
    for (std::size_t j = 0; j < layout.num_obs_features(); ++j)
        counts.increment(action, n + j, layout.config(action, n + j, next), obs[j]);
}

inline void record_transition(CountOverlay& overlay, const FactoredCounts& counts, std::size_t action,
                              const ValueVector& state, const ValueVector& next, const ValueVector& obs) {
    const CountLayout& layout = counts.layout();
    const std::size_t n = layout.num_state_features();
    for (std::size_t i = 0; i < n; ++i)
        overlay.add(counts.row_key(action, i, layout.config(action, i, state)), next[i]);
    for (std::size_t j = 0; j < layout.num_obs_features(); ++j)
        overlay.add(counts.row_key(action, n + j, layout.config(action, n + j, next)), obs[j]);
}

namespace detail {

inline void check_conforms(const Topology& g, const FactoredCounts& counts) {
    if (&g != &counts.topology() && !(g == counts.topology()))
        throw ModelInconsistency("counts were built for a different topology");
}

inline void check_indices(const FactoredSpace& states, const FactoredSpace& observations, std::size_t num_actions,
                          StateIndex s, ActionId a, StateIndex next, ObservationIndex o) {
    if (s >= states.size() || next >= states.size() || o >= observations.size() || a >= num_actions)
        throw InvalidArgument("index out of range");
}

}  // namespace detail

/// Expected dynamics P(s', o | s, a) under the topology: the product of the
/// Dirichlet means of every output node given its parents' values.
inline double factored_likelihood(const Topology& g, const FactoredCounts& counts, const FactoredSpace& states,
                                  const FactoredSpace& observations, StateIndex s, ActionId a, StateIndex next,
                                  ObservationIndex o) {
    detail::check_conforms(g, counts);
    detail::check_indices(states, observations, g.num_actions(), s, a, next, o);
    const ValueVector sv = states.values(s);
    const ValueVector nv = states.values(next);
    const ValueVector ov = observations.values(o);
    return transition_probability(counts, nullptr, a, sv, nv) * observation_probability(counts, nullptr, a, nv, ov);
}

struct FactoredStep {
    StateIndex next_state = 0;
    FactoredCounts counts;
    ObservationIndex observation = 0;
};

/// One simulated step of the factored Bayes-adaptive dynamics: sample every
/// output node given its parents, then add one count per node.
inline FactoredStep fba_pomcp_step(StateIndex s, const Topology& g, const FactoredCounts& counts,
                                   const FactoredSpace& states, const FactoredSpace& observations, ActionId a,
                                   Rng& rng) {
    detail::check_conforms(g, counts);
    detail::check_indices(states, observations, g.num_actions(), s, a, 0, 0);
    ValueVector sv = states.values(s), nv, ov;
    sample_next_state_values(counts, nullptr, a, sv, nv, rng);
    sample_observation_values(counts, nullptr, a, nv, ov, rng);
    FactoredStep out{states.encode(nv), counts, observations.encode(ov)};
    record_transition(out.counts, a, sv, nv, ov);
    return out;
}

/// Tallies N^{nev} of a state-annotated history under the layout's topology.
inline SufficientStats sufficient_stats(std::span<const Trajectory> history,
                                        const std::shared_ptr<const CountLayout>& layout,
                                        const FactoredSpace& states, const FactoredSpace& observations) {
    SufficientStats stats(layout);
    const std::size_t n = layout->num_state_features();
    ValueVector sv, nv, ov;
    for (const auto& traj : history) {
        traj.validate();
        for (std::size_t t = 0; t < traj.length(); ++t) {
            const ActionId a = traj.actions[t];
            if (a >= layout->num_actions()) throw InvalidArgument("sufficient_stats: action out of range");
            states.decode(traj.states[t], sv);
            states.decode(traj.states[t + 1], nv);
            observations.decode(traj.observations[t], ov);
            for (std::size_t i = 0; i < n; ++i) stats.add(a, i, layout->config(a, i, sv), nv[i]);
            for (std::size_t j = 0; j < layout->num_obs_features(); ++j)
                stats.add(a, n + j, layout->config(a, n + j, nv), ov[j]);
        }
    }
    return stats;
}

inline FactoredCounts add_stats(const FactoredCounts& prior, const SufficientStats& stats) {
    if (!prior.layout().same_shape(stats.layout())) throw ModelInconsistency("add_stats: shape mismatch");
    FactoredCounts out = prior;
    const CountLayout& layout = prior.layout();
    for (std::size_t a = 0; a < layout.num_actions(); ++a) {
        for (std::size_t node = 0; node < layout.num_nodes(); ++node) {
            const NodeBlock& b = layout.block(a, node);
            for (std::size_t c = 0; c < b.configs; ++c)
                for (std::size_t v = 0; v < b.arity; ++v)
                    if (auto k = stats.at(a, node, c, v)) out.increment(a, node, c, v, static_cast<double>(k));
        }
    }
    return out;
}

/// Prior counts plus the transitions of the history; deterministic.
inline FactoredCounts count_transitions(std::span<const Trajectory> history, const Topology& g,
                                        const FactoredCounts& prior, const FactoredSpace& states,
                                        const FactoredSpace& observations) {
    detail::check_conforms(g, prior);
    return add_stats(prior, sufficient_stats(history, prior.layout_ptr(), states, observations));
}

/// Tallies for a single node under an arbitrary parent set, as a flat
/// configs*arity vector. Used to score candidate structures locally.
inline std::vector<std::uint64_t> node_stats(std::span<const Trajectory> history, ActionId action,
                                             std::size_t node, std::span<const std::size_t> parents,
                                             const FactoredSpace& states, const FactoredSpace& observations) {
    const std::size_t n = states.num_features();
    const bool is_obs = node >= n;
    const std::size_t arity = is_obs ? observations.arity(node - n) : states.arity(node);
    std::size_t configs = 1;
    for (std::size_t p : parents) configs *= states.arity(p);
    std::vector<std::uint64_t> out(configs * arity, 0);
    for (const auto& traj : history) {
        for (std::size_t t = 0; t < traj.length(); ++t) {
            if (traj.actions[t] != action) continue;
            const StateIndex source = is_obs ? traj.states[t + 1] : traj.states[t];
            std::size_t c = 0, stride = 1;
            for (std::size_t p : parents) {
                c += states.value(source, p) * stride;
                stride *= states.arity(p);
            }
            const std::size_t v =
                is_obs ? observations.value(traj.observations[t], node - n) : states.value(traj.states[t + 1], node);
            ++out[c * arity + v];
        }
    }
    return out;
}

/// log BD contribution of one node: sum over parent configurations e of
/// lgamma(a_e) - lgamma(a_e + N_e) + sum_v [lgamma(a_ev + N_ev) - lgamma(a_ev)].
/// A zero prior cell contributes nothing when unobserved and makes the
/// score -inf when observed.
inline double bd_node_score_log(std::span<const double> prior, std::span<const std::uint64_t> stats,
                                std::size_t arity) {
    if (prior.size() != stats.size() || arity == 0 || prior.size() % arity != 0)
        throw ModelInconsistency("bd_node_score_log: shape mismatch");
    double score = 0.0;
    for (std::size_t base = 0; base < prior.size(); base += arity) {
        double alpha = 0.0;
        std::uint64_t count = 0;
        for (std::size_t v = 0; v < arity; ++v) {
            const double a = prior[base + v];
            if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidPrior("BD score: negative prior count");
            alpha += a;
            count += stats[base + v];
        }
        if (!(alpha > 0.0)) throw InvalidPrior("BD score: prior row with zero mass");
        if (count == 0) continue;
        score += std::lgamma(alpha) - std::lgamma(alpha + static_cast<double>(count));
        for (std::size_t v = 0; v < arity; ++v) {
            const auto k = stats[base + v];
            if (k == 0) continue;
            const double a = prior[base + v];
            if (a == 0.0) return -std::numeric_limits<double>::infinity();
            score += std::lgamma(a + static_cast<double>(k)) - std::lgamma(a);
        }
    }
    return score;
}

/// Log of the Bayesian-Dirichlet marginal likelihood of the tallied data under
/// topology `g` with prior counts `prior`, summed over all nodes.
inline double bd_score_log(const Topology& g, const SufficientStats& stats, const FactoredCounts& prior) {
    detail::check_conforms(g, prior);
    if (!prior.layout().same_shape(stats.layout())) throw ModelInconsistency("bd_score_log: shape mismatch");
    double score = 0.0;
    const CountLayout& layout = prior.layout();
    for (std::size_t a = 0; a < layout.num_actions(); ++a)
        for (std::size_t node = 0; node < layout.num_nodes(); ++node)
            score += bd_node_score_log(prior.node_cells(a, node), stats.node_cells(a, node),
                                       layout.block(a, node).arity);
    return score;
}

}  // namespace fbapomdp
