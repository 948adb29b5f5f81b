#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "fbapomdp/belief.hpp"
#include "fbapomdp/models.hpp"

namespace fbapomdp {

struct PlannerConfig {
    std::size_t num_simulations = 4096;
    /// UCB exploration constant u; a value <= 0 means "use the domain's reward span".
    double ucb_constant = 0.0;
    std::size_t depth_cap = 30;

    void validate() const {
        if (num_simulations == 0) throw InvalidArgument("PlannerConfig: num_simulations must be positive");
        if (depth_cap == 0) throw InvalidArgument("PlannerConfig: depth_cap must be positive");
    }
};

struct ActionStats {
    std::uint64_t visits = 0;
    double mean = 0.0;
    std::vector<std::pair<ObservationIndex, std::uint32_t>> children;
};

struct SearchNode {
    std::uint64_t visits = 0;
    std::vector<ActionStats> actions;
};

/// Action-observation tree stored in an index arena; node 0 is the root.
class SearchTree {
public:
    static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

    explicit SearchTree(std::size_t num_actions = 1) { reset(num_actions); }

    void reset(std::size_t num_actions) {
        num_actions_ = num_actions;
        nodes_.clear();
        depths_.clear();
        nodes_.push_back(make_node());
        depths_.push_back(0);
    }

    std::uint32_t root() const { return 0; }
    std::size_t size() const { return nodes_.size(); }
    SearchNode& node(std::uint32_t i) { return nodes_[i]; }
    const SearchNode& node(std::uint32_t i) const { return nodes_[i]; }
    std::size_t depth(std::uint32_t i) const { return depths_[i]; }

    std::size_t max_depth() const {
        return depths_.empty() ? 0 : *std::max_element(depths_.begin(), depths_.end());
    }

    std::uint32_t child(std::uint32_t parent, ActionId a, ObservationIndex o) const {
        for (const auto& [obs, idx] : nodes_[parent].actions[a].children)
            if (obs == o) return idx;
        return kNone;
    }

    std::uint32_t add_child(std::uint32_t parent, ActionId a, ObservationIndex o) {
        const auto idx = static_cast<std::uint32_t>(nodes_.size());
        const std::size_t d = depths_[parent] + 1;
        nodes_.push_back(make_node());
        depths_.push_back(d);
        nodes_[parent].actions[a].children.emplace_back(o, idx);
        return idx;
    }

private:
    SearchNode make_node() const {
        SearchNode n;
        n.actions.resize(num_actions_);
        return n;
    }

    std::size_t num_actions_ = 1;
    std::vector<SearchNode> nodes_;
    std::vector<std::size_t> depths_;
};

/// UCB1: argmax_a Q(a) + u * sqrt(ln N / n_a). Untried actions come first,
/// in index order.
inline ActionId ucb_select(const SearchNode& node, double u) {
    if (node.actions.empty()) throw InvalidArgument("ucb_select: node has no actions");
    for (ActionId a = 0; a < node.actions.size(); ++a)
        if (node.actions[a].visits == 0) return a;
    const double log_n = std::log(static_cast<double>(std::max<std::uint64_t>(node.visits, 1)));
    ActionId best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < node.actions.size(); ++a) {
        const auto& s = node.actions[a];
        const double score = s.mean + u * std::sqrt(log_n / static_cast<double>(s.visits));
        if (score > best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

/// Action with the highest mean return among tried root actions.
inline ActionId greedy_action(const SearchNode& node) {
    ActionId best = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (ActionId a = 0; a < node.actions.size(); ++a) {
        const auto& s = node.actions[a];
        if (s.visits > 0 && s.mean > best_mean) {
            best_mean = s.mean;
            best = a;
        }
    }
    return best;
}

/// Monte-Carlo tree search over action-observation histories. The model
/// type decides what a simulated step is (true dynamics, flat or factored
/// Bayes-adaptive dynamics); count updates made inside a simulation go to
/// the model's scratch overlay and are dropped when the simulation ends.
template <SimulationModel M>
class Planner {
public:
    using Particle = typename M::Particle;
    using Scratch = typename M::Scratch;

    Planner(const M& model, PlannerConfig config) : model_(&model), config_(config) {
        config_.validate();
        if (config_.ucb_constant <= 0.0) config_.ucb_constant = model.domain().reward_span;
        tree_.reset(model.domain().action_count);
    }

    const PlannerConfig& config() const { return config_; }
    const SearchTree& tree() const { return tree_; }

    /// Builds a fresh tree from `belief` and returns the greedy root action.
    /// `remaining_horizon` bounds the simulated depth together with depth_cap.
    ActionId plan(const ParticleBelief<Particle>& belief, Rng& rng, std::size_t remaining_horizon = 0) {
        if (belief.empty()) throw EmptyBelief("plan: belief has no particles");
        const std::size_t max_depth =
            remaining_horizon == 0 ? config_.depth_cap : std::min(config_.depth_cap, remaining_horizon);
        std::vector<double> cdf(belief.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < belief.size(); ++i) cdf[i] = (acc += belief.weights[i]);
        if (!(acc > 0.0)) throw EmptyBelief("plan: belief has zero total weight");

        tree_.reset(model_->domain().action_count);
        for (std::size_t k = 0; k < config_.num_simulations; ++k) {
            const double u = uniform01(rng) * acc;
            auto i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            if (i >= belief.size()) i = belief.size() - 1;
            const Particle& p = belief.particles[i];
            scratch_.clear();
            simulate(p, scratch_, M::state_of(p), tree_.root(), 0, max_depth, rng);
        }
        scratch_.clear();
        return greedy_action(tree_.node(tree_.root()));
    }

    /// One descent: UCB selection inside the tree, one new node at the
    /// frontier, rollout below it, running-mean backup on the way up.
    double simulate(const Particle& p, Scratch& scratch, StateIndex s, std::uint32_t node_idx, std::size_t depth,
                    std::size_t max_depth, Rng& rng) {
        if (depth >= max_depth) return 0.0;
        const ActionId a = ucb_select(tree_.node(node_idx), config_.ucb_constant);
        const StepResult r = model_->simulate(p, scratch, s, a, rng);
        double ret = r.reward;
        if (!r.terminal && depth + 1 < max_depth) {
            const double gamma = model_->domain().discount;
            std::uint32_t child = tree_.child(node_idx, a, r.observation);
            if (child == SearchTree::kNone) {
                tree_.add_child(node_idx, a, r.observation);
                ret += gamma * rollout(p, scratch, r.next_state, depth + 1, max_depth, rng);
            } else {
                ret += gamma * simulate(p, scratch, r.next_state, child, depth + 1, max_depth, rng);
            }
        }
        SearchNode& node = tree_.node(node_idx);
        ActionStats& stats = node.actions[a];
        ++node.visits;
        ++stats.visits;
        stats.mean += (ret - stats.mean) / static_cast<double>(stats.visits);
        return ret;
    }

    /// Uniform-random actions until `max_depth` or a terminal transition.
    double rollout(const Particle& p, Scratch& scratch, StateIndex s, std::size_t depth, std::size_t max_depth,
                   Rng& rng) {
        const double gamma = model_->domain().discount;
        const std::size_t num_actions = model_->domain().action_count;
        double ret = 0.0, factor = 1.0;
        for (; depth < max_depth; ++depth) {
            const StepResult r = model_->simulate(p, scratch, s, uniform_index(rng, num_actions), rng);
            ret += factor * r.reward;
            if (r.terminal) break;
            factor *= gamma;
            s = r.next_state;
        }
        return ret;
    }

private:
    const M* model_;
    PlannerConfig config_;
    SearchTree tree_;
    Scratch scratch_;
};

}  // namespace fbapomdp
