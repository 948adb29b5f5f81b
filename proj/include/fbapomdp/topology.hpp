#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fbapomdp/errors.hpp"

namespace fbapomdp {

/// One directed edge `parent -> node` in the network of `action`. For state
/// output nodes (node < n) the parent is an input state feature; for
/// observation nodes (node >= n) it is an output state feature.
struct Edge {
    std::size_t action = 0;
    std::size_t node = 0;
    std::size_t parent = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Per-action two-slice network structure. Nodes 0..n-1 are the next-state
/// features s'_i, nodes n..n+m-1 the observation features o_j.
class Topology {
public:
    Topology() = default;

    /// Empty topology (no edges) for n state features, m observation features.
    Topology(std::size_t num_actions, std::size_t num_state_features, std::size_t num_obs_features)
        : n_(num_state_features),
          m_(num_obs_features),
          parents_(num_actions, std::vector<std::vector<std::size_t>>(n_ + m_)) {
        if (num_actions == 0 || n_ == 0 || m_ == 0)
            throw InvalidArgument("Topology: actions, state and observation features must be positive");
    }

    std::size_t num_actions() const { return parents_.size(); }
    std::size_t num_state_features() const { return n_; }
    std::size_t num_obs_features() const { return m_; }
    std::size_t num_nodes() const { return n_ + m_; }
    bool is_observation_node(std::size_t node) const { return node >= n_; }

    const std::vector<std::size_t>& parents(std::size_t action, std::size_t node) const {
        return parents_.at(action).at(node);
    }

    void set_parents(std::size_t action, std::size_t node, std::vector<std::size_t> parents) {
        std::sort(parents.begin(), parents.end());
        parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
        for (std::size_t p : parents)
            if (p >= n_) throw InvalidArgument("Topology: parent index out of range");
        parents_.at(action).at(node) = std::move(parents);
    }

    bool has_edge(const Edge& e) const {
        const auto& ps = parents(e.action, e.node);
        return std::binary_search(ps.begin(), ps.end(), e.parent);
    }

    void add_edge(const Edge& e) {
        check_edge(e);
        auto& ps = parents_[e.action][e.node];
        auto it = std::lower_bound(ps.begin(), ps.end(), e.parent);
        if (it == ps.end() || *it != e.parent) ps.insert(it, e.parent);
    }

    void remove_edge(const Edge& e) {
        check_edge(e);
        auto& ps = parents_[e.action][e.node];
        auto it = std::lower_bound(ps.begin(), ps.end(), e.parent);
        if (it != ps.end() && *it == e.parent) ps.erase(it);
    }

    Topology with_flipped(const Edge& e) const {
        Topology g = *this;
        if (g.has_edge(e))
            g.remove_edge(e);
        else
            g.add_edge(e);
        return g;
    }

    std::size_t edge_count() const {
        std::size_t c = 0;
        for (const auto& a : parents_)
            for (const auto& ps : a) c += ps.size();
        return c;
    }

    /// Throws ModelInconsistency when parent sets are unsorted, duplicated or
    /// point outside the state features.
    void validate() const {
        for (const auto& a : parents_) {
            if (a.size() != n_ + m_) throw ModelInconsistency("Topology: wrong node count");
            for (const auto& ps : a) {
                for (std::size_t i = 0; i < ps.size(); ++i) {
                    if (ps[i] >= n_) throw ModelInconsistency("Topology: parent out of range");
                    if (i > 0 && ps[i - 1] >= ps[i])
                        throw ModelInconsistency("Topology: parent set not sorted/unique");
                }
            }
        }
    }

    std::size_t hash() const {
        std::size_t h = n_ * 1315423911u + m_;
        for (const auto& a : parents_) {
            for (const auto& ps : a) {
                h = h * 1099511628211ull + ps.size();
                for (std::size_t p : ps) h = (h ^ (p + 0x9e3779b97f4a7c15ull)) * 1099511628211ull;
            }
        }
        return h;
    }

    friend bool operator==(const Topology&, const Topology&) = default;

private:
    void check_edge(const Edge& e) const {
        if (e.action >= parents_.size() || e.node >= n_ + m_ || e.parent >= n_)
            throw InvalidArgument("Topology: edge out of range");
    }

    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<std::vector<std::vector<std::size_t>>> parents_;
};

struct TopologyHash {
    std::size_t operator()(const Topology& g) const { return g.hash(); }
};

/// Edges that structure search may toggle; everything else is frozen.
struct EdgeConstraints {
    std::vector<Edge> mutable_edges;
};

/// All topologies one mutable-edge flip away from `g`.
inline std::vector<Topology> enumerate_neighbor_topologies(const Topology& g,
                                                           const EdgeConstraints& constraints) {
    std::vector<Topology> out;
    out.reserve(constraints.mutable_edges.size());
    for (const auto& e : constraints.mutable_edges) out.push_back(g.with_flipped(e));
    return out;
}

/// Edge-list text, one line per node with at least one parent:
/// `action:node<-parent,parent,...`. Nodes are numbered s'_0..s'_{n-1} then
/// o_0..o_{m-1}; parents are state feature indices.
inline std::string to_edge_list(const Topology& g) {
    std::ostringstream os;
    for (std::size_t a = 0; a < g.num_actions(); ++a) {
        for (std::size_t node = 0; node < g.num_nodes(); ++node) {
            const auto& ps = g.parents(a, node);
            if (ps.empty()) continue;
            os << a << ':' << node << "<-";
            for (std::size_t i = 0; i < ps.size(); ++i) os << (i ? "," : "") << ps[i];
            os << '\n';
        }
    }
    return os.str();
}

inline Topology parse_edge_list(const std::string& text, std::size_t num_actions,
                                std::size_t num_state_features, std::size_t num_obs_features) {
    Topology g(num_actions, num_state_features, num_obs_features);
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto colon = line.find(':');
        const auto arrow = line.find("<-");
        if (colon == std::string::npos || arrow == std::string::npos || arrow < colon)
            throw InvalidArgument("parse_edge_list: malformed line '" + line + "'");
        std::size_t action = 0, node = 0;
        try {
            action = std::stoul(line.substr(0, colon));
            node = std::stoul(line.substr(colon + 1, arrow - colon - 1));
        } catch (const std::exception&) {
            throw InvalidArgument("parse_edge_list: malformed line '" + line + "'");
        }
        if (action >= num_actions || node >= g.num_nodes())
            throw InvalidArgument("parse_edge_list: node out of range in '" + line + "'");
        std::vector<std::size_t> parents;
        std::istringstream ps(line.substr(arrow + 2));
        std::string tok;
        while (std::getline(ps, tok, ',')) {
            if (tok.empty()) continue;
            parents.push_back(std::stoul(tok));
        }
        g.set_parents(action, node, std::move(parents));
    }
    return g;
}

}  // namespace fbapomdp
