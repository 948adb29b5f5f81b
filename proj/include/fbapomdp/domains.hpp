#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fbapomdp/domain.hpp"
#include "fbapomdp/prior.hpp"
#include "fbapomdp/tabular.hpp"

namespace fbapomdp {

/// Mass used for conditional tables the agent is told exactly. Large enough
/// that a few thousand observed steps do not move the means noticeably.
inline constexpr double kKnownMass = 1e4;

/// A domain together with everything an agent's prior needs.
struct DomainBundle {
    DomainSpec domain;
    FactoredPrior prior;
    Topology true_topology;
    /// Dirichlet mass of the uncertain tables.
    double confidence = 10.0;
};

/// Joint flat prior for the BA-POMDP agent: the prior mean dynamics under
/// the true topology, scaled by the bundle's confidence.
inline TabularCounts flat_prior(const DomainBundle& b) {
    const FactoredCounts counts = b.prior.counts_for(make_layout(b.true_topology, b.domain.state_space,
                                                                 b.domain.observation_space));
    return flat_prior_from(b.domain, counts, b.confidence);
}

namespace detail {

/// Conditional table spec for one (action, node): the parents it truly reads,
/// the distribution and the Dirichlet mass.
struct NodeDef {
    std::vector<std::size_t> parents;
    ReferenceCpt cpt;
    double mass = 1.0;
};

using NodeDefFn = std::function<NodeDef(ActionId, std::size_t node)>;

inline std::size_t node_arity(const DomainSpec& d, std::size_t node) {
    const std::size_t n = d.state_space.num_features();
    return node < n ? d.state_space.arity(node) : d.observation_space.arity(node - n);
}

/// Fills `d.true_model` (probability rows) under topology `g` from `truth`.
inline void build_true_model(DomainSpec& d, const Topology& g, const NodeDefFn& truth) {
    FactoredCounts model(make_layout(g, d.state_space, d.observation_space));
    for (ActionId a = 0; a < d.action_count; ++a) {
        for (std::size_t node = 0; node < g.num_nodes(); ++node) {
            const NodeDef def = truth(a, node);
            model.set_node(a, node, project_cpt(def.parents, def.cpt, g.parents(a, node), d.state_space,
                                                node_arity(d, node), 1.0));
        }
    }
    d.true_model = std::move(model);
}

inline NodePriorFn make_node_prior(const DomainSpec& d, NodeDefFn belief) {
    const FactoredSpace states = d.state_space;
    const FactoredSpace observations = d.observation_space;
    return [states, observations, belief = std::move(belief)](ActionId a, std::size_t node,
                                                              std::span<const std::size_t> parents) {
        const NodeDef def = belief(a, node);
        const std::size_t n = states.num_features();
        const std::size_t arity = node < n ? states.arity(node) : observations.arity(node - n);
        return project_cpt(def.parents, def.cpt, parents, states, arity, def.mass);
    };
}

inline ReferenceCpt identity_cpt(std::size_t feature) {
    return [feature](const ValueVector& src, std::size_t v) { return src[feature] == v ? 1.0 : 0.0; };
}

/// Correct w.p. `accuracy`, otherwise uniform over the in-range neighbours.
inline ReferenceCpt noisy_position_cpt(std::size_t feature, std::size_t arity, double accuracy) {
    return [=](const ValueVector& src, std::size_t v) {
        const std::size_t x = src[feature];
        if (v == x) return accuracy;
        const std::size_t neighbours = (x > 0 ? 1 : 0) + (x + 1 < arity ? 1 : 0);
        const bool adjacent = v + 1 == x || v == x + 1;
        return adjacent ? (1.0 - accuracy) / static_cast<double>(neighbours) : 0.0;
    };
}

inline std::vector<double> uniform_over(std::size_t size, const std::function<bool(StateIndex)>& keep) {
    std::vector<double> p(size, 0.0);
    double k = 0.0;
    for (StateIndex s = 0; s < size; ++s)
        if (keep(s)) k += (p[s] = 1.0);
    for (double& x : p) x /= k;
    return p;
}

}  // namespace detail

// ---------------------------------------------------------------- Tiger

struct TigerParams {
    std::size_t n_dummy = 7;
    double listen_accuracy = 0.85;
    double prior_accuracy = 0.6;
    double confidence = 10.0;
};

namespace tiger {
inline constexpr ActionId kOpenLeft = 0;
inline constexpr ActionId kOpenRight = 1;
inline constexpr ActionId kListen = 2;
inline constexpr std::size_t kLeft = 0;
inline constexpr std::size_t kRight = 1;
}  // namespace tiger

/// Tiger with `n_dummy` stationary binary features the observation ignores.
/// State feature 0 is the tiger side; observation 0/1 is hear-left/right.
/// The agent knows the (identity) transitions and the uninformative
/// observation on door openings; the listening observation's parents and
/// accuracy are uncertain.
inline DomainBundle make_factored_tiger(const TigerParams& params = {}) {
    using namespace tiger;
    if (!(params.listen_accuracy >= 0.0 && params.listen_accuracy <= 1.0) ||
        !(params.prior_accuracy > 0.0 && params.prior_accuracy < 1.0) || !(params.confidence > 0.0))
        throw InvalidArgument("make_factored_tiger: accuracies must lie in [0, 1] and confidence be positive");
    DomainBundle b;
    std::vector<Feature> features{{"tiger", 2}};
    for (std::size_t i = 0; i < params.n_dummy; ++i) features.push_back({"dummy" + std::to_string(i), 2});
    DomainSpec& d = b.domain;
    d.name = "tiger";
    d.state_space = FactoredSpace(std::move(features));
    d.observation_space = FactoredSpace({{"hear", 2}});
    d.action_count = 3;
    d.action_names = {"open-left", "open-right", "listen"};
    d.reward = [](StateIndex s, ActionId a, StateIndex) {
        if (a == kListen) return -1.0;
        const std::size_t side = s % 2;
        return (a == kOpenLeft) == (side == kLeft) ? -100.0 : 10.0;
    };
    d.terminal = [](StateIndex, ActionId a, StateIndex) { return a != kListen; };
    d.initial_distribution.assign(d.state_space.size(), 1.0 / static_cast<double>(d.state_space.size()));
    d.reward_span = 110.0;

    const std::size_t n = d.state_space.num_features();
    Topology base(d.action_count, n, 1);
    for (ActionId a = 0; a < d.action_count; ++a)
        for (std::size_t i = 0; i < n; ++i) base.set_parents(a, i, {i});
    Topology truth = base;
    truth.add_edge({kListen, n, 0});

    auto hear = [](double accuracy) -> ReferenceCpt {
        return [accuracy](const ValueVector& src, std::size_t v) { return src[0] == v ? accuracy : 1.0 - accuracy; };
    };
    const ReferenceCpt uniform = [](const ValueVector&, std::size_t) { return 0.5; };
    const double acc = params.listen_accuracy, prior_acc = params.prior_accuracy, conf = params.confidence;
    detail::build_true_model(d, truth, [&](ActionId a, std::size_t node) -> detail::NodeDef {
        if (node < n) return {{node}, detail::identity_cpt(node), 1.0};
        if (a == kListen) return {{0}, hear(acc), 1.0};
        return {{}, uniform, 1.0};
    });
    d.finalize();

    b.prior.node_prior = detail::make_node_prior(d, [=](ActionId a, std::size_t node) -> detail::NodeDef {
        if (node < n) return {{node}, detail::identity_cpt(node), kKnownMass};
        if (a == kListen) return {{0}, hear(prior_acc), conf};
        return {{}, uniform, kKnownMass};
    });
    b.prior.base_topology = base;
    for (std::size_t i = 0; i < n; ++i) b.prior.mutable_edges.mutable_edges.push_back({kListen, n, i});
    b.true_topology = truth;
    b.confidence = conf;
    return b;
}

// ------------------------------------------------------ Collision avoidance

struct CollisionParams {
    std::size_t width = 5;
    std::size_t height = 5;
    double observation_accuracy = 0.8;
    double confidence = 10.0;
};

namespace collision {
inline constexpr ActionId kStay = 0;
inline constexpr ActionId kUp = 1;
inline constexpr ActionId kDown = 2;
inline constexpr std::size_t kPlaneX = 0;
inline constexpr std::size_t kPlaneY = 1;
inline constexpr std::size_t kObstacle = 2;
}  // namespace collision

/// A plane flies from the rightmost column to column 0, one column per step,
/// optionally moving up or down (cost 1). An obstacle in column 0 drifts
/// vertically; meeting it in column 0 costs 1000. The agent observes a noisy
/// obstacle row. Plane dynamics and the sensor are known; the obstacle's
/// drift distribution and whether it depends on the plane are not.
inline DomainBundle make_collision_avoidance(const CollisionParams& params = {}) {
    using namespace collision;
    const std::size_t W = params.width, H = params.height;
    if (W < 2 || H < 3 || H % 2 == 0)
        throw InvalidArgument("make_collision_avoidance: need width >= 2 and odd height >= 3");
    if (!(params.observation_accuracy >= 0.0 && params.observation_accuracy <= 1.0) || !(params.confidence > 0.0))
        throw InvalidArgument("make_collision_avoidance: bad accuracy or confidence");
    DomainBundle b;
    DomainSpec& d = b.domain;
    d.name = "collision";
    d.state_space = FactoredSpace({{"plane_x", W}, {"plane_y", H}, {"obstacle_y", H}});
    d.observation_space = FactoredSpace({{"obstacle_obs", H}});
    d.action_count = 3;
    d.action_names = {"stay", "up", "down"};
    const FactoredSpace S = d.state_space;
    d.reward = [S](StateIndex, ActionId a, StateIndex next) {
        double r = a == kStay ? 0.0 : -1.0;
        if (S.value(next, kPlaneX) == 0 && S.value(next, kPlaneY) == S.value(next, kObstacle)) r -= 1000.0;
        return r;
    };
    d.terminal = [S](StateIndex, ActionId, StateIndex next) { return S.value(next, kPlaneX) == 0; };
    const std::size_t mid = H / 2;
    d.initial_distribution.assign(S.size(), 0.0);
    d.initial_distribution[S.index(std::vector<std::size_t>{W - 1, mid, mid})] = 1.0;
    d.reward_span = 1001.0;

    Topology base(d.action_count, 3, 1);
    for (ActionId a = 0; a < d.action_count; ++a) {
        base.set_parents(a, kPlaneX, {kPlaneX});
        base.set_parents(a, kPlaneY, {kPlaneY});
        base.set_parents(a, kObstacle, {kObstacle});
        base.set_parents(a, 3, {kObstacle});
    }

    auto drift = [H](double stay, double up, double down) -> ReferenceCpt {
        return [=](const ValueVector& src, std::size_t v) {
            const std::size_t y = src[kObstacle];
            const std::size_t yu = std::min(y + 1, H - 1), yd = y == 0 ? 0 : y - 1;
            double p = 0.0;
            if (v == y) p += stay;
            if (v == yu) p += up;
            if (v == yd) p += down;
            return p;
        };
    };
    auto plane_cpt = [H](ActionId a, std::size_t node) -> ReferenceCpt {
        if (node == kPlaneX)
            return [](const ValueVector& src, std::size_t v) {
                const std::size_t x = src[kPlaneX];
                return v == (x == 0 ? 0 : x - 1) ? 1.0 : 0.0;
            };
        return [a, H](const ValueVector& src, std::size_t v) {
            const std::size_t y = src[kPlaneY];
            std::size_t target = y;
            if (a == kUp) target = std::min(y + 1, H - 1);
            if (a == kDown) target = y == 0 ? 0 : y - 1;
            return v == target ? 1.0 : 0.0;
        };
    };
    const ReferenceCpt sensor = detail::noisy_position_cpt(kObstacle, H, params.observation_accuracy);
    const double conf = params.confidence;
    const ReferenceCpt true_drift = drift(0.5, 0.25, 0.25), prior_drift = drift(0.9, 0.05, 0.05);

    detail::build_true_model(d, base, [&](ActionId a, std::size_t node) -> detail::NodeDef {
        if (node == kObstacle) return {{kObstacle}, true_drift, 1.0};
        if (node == 3) return {{kObstacle}, sensor, 1.0};
        return {{node}, plane_cpt(a, node), 1.0};
    });
    d.finalize();

    b.prior.node_prior = detail::make_node_prior(d, [=](ActionId a, std::size_t node) -> detail::NodeDef {
        if (node == kObstacle) return {{kObstacle}, prior_drift, conf};
        if (node == 3) return {{kObstacle}, sensor, kKnownMass};
        return {{node}, plane_cpt(a, node), kKnownMass};
    });
    b.prior.base_topology = base;
    for (ActionId a = 0; a < d.action_count; ++a) {
        b.prior.mutable_edges.mutable_edges.push_back({a, kObstacle, kPlaneX});
        b.prior.mutable_edges.mutable_edges.push_back({a, kObstacle, kPlaneY});
    }
    b.true_topology = base;
    b.confidence = conf;
    return b;
}

// ------------------------------------------------------------- Gridworld

struct Cell {
    std::size_t x = 0;
    std::size_t y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

struct GridworldParams {
    std::size_t size = 5;
    /// Empty means the defaults: the three corners other than the start and
    /// the centre cell.
    std::vector<Cell> goals{};
    /// Empty means the defaults (size/2, 1) and (1, size-2).
    std::vector<Cell> traps{};
    bool default_traps = true;
    double success = 0.95;
    double trap_success = 0.15;
    double prior_success = 0.95;
    double localizer_accuracy = 0.9;
    double confidence = 10.0;
};

namespace grid {
inline constexpr ActionId kUp = 0;
inline constexpr ActionId kRight = 1;
inline constexpr ActionId kDown = 2;
inline constexpr ActionId kLeft = 3;
inline constexpr std::size_t kX = 0;
inline constexpr std::size_t kY = 1;
inline constexpr std::size_t kGoal = 2;
}  // namespace grid

inline std::vector<Cell> default_goal_cells(std::size_t n) {
    return {{n - 1, 0}, {0, n - 1}, {n - 1, n - 1}, {n / 2, n / 2}};
}

inline std::vector<Cell> default_trap_cells(std::size_t n) { return {{n / 2, 1}, {1, n - 2}}; }

/// N x N grid, start (0, 0), goal drawn per episode from the candidates and
/// observed exactly. Moves (up = +y, right = +x) succeed w.p. 0.95, or 0.15
/// on trap cells; failures and wall bumps leave the agent in place. The
/// position is observed through a per-coordinate localizer. Reaching the goal
/// gives +1 and ends the episode. The agent knows the sensor and that the
/// goal never changes; move success is uncertain and may or may not depend
/// on the goal.
inline DomainBundle make_gridworld(GridworldParams params = {}) {
    using namespace grid;
    const std::size_t N = params.size;
    if (N < 3) throw InvalidArgument("make_gridworld: size must be at least 3");
    if (params.goals.empty()) params.goals = default_goal_cells(N);
    if (params.traps.empty() && params.default_traps) params.traps = default_trap_cells(N);
    for (const auto& c : params.goals)
        if (c.x >= N || c.y >= N || (c.x == 0 && c.y == 0))
            throw InvalidArgument("make_gridworld: goal cell outside the grid or at the start");
    for (std::size_t i = 0; i < params.goals.size(); ++i)
        for (std::size_t j = i + 1; j < params.goals.size(); ++j)
            if (params.goals[i] == params.goals[j]) throw InvalidArgument("make_gridworld: duplicate goal cell");
    for (const auto& c : params.traps)
        if (c.x >= N || c.y >= N) throw InvalidArgument("make_gridworld: trap cell outside the grid");
    if (params.goals.size() < 2) throw InvalidArgument("make_gridworld: need at least two goal candidates");

    DomainBundle b;
    DomainSpec& d = b.domain;
    const std::size_t G = params.goals.size();
    d.name = "gridworld";
    d.state_space = FactoredSpace({{"x", N}, {"y", N}, {"goal", G}});
    d.observation_space = FactoredSpace({{"obs_x", N}, {"obs_y", N}, {"obs_goal", G}});
    d.action_count = 4;
    d.action_names = {"up", "right", "down", "left"};
    const FactoredSpace S = d.state_space;
    const std::vector<Cell> goals = params.goals, traps = params.traps;
    auto at_goal = [S, goals](StateIndex s) {
        const Cell& g = goals[S.value(s, kGoal)];
        return S.value(s, kX) == g.x && S.value(s, kY) == g.y;
    };
    d.reward = [at_goal](StateIndex s, ActionId, StateIndex next) { return !at_goal(s) && at_goal(next) ? 1.0 : 0.0; };
    d.terminal = [at_goal](StateIndex, ActionId, StateIndex next) { return at_goal(next); };
    d.initial_distribution = detail::uniform_over(S.size(), [S](StateIndex s) {
        return S.value(s, kX) == 0 && S.value(s, kY) == 0;
    });
    d.reward_span = 1.0;

    Topology base(d.action_count, 3, 3);
    for (ActionId a = 0; a < d.action_count; ++a) {
        base.set_parents(a, kX, {kX, kY});
        base.set_parents(a, kY, {kX, kY});
        base.set_parents(a, kGoal, {kGoal});
        base.set_parents(a, 3 + kX, {kX});
        base.set_parents(a, 3 + kY, {kY});
        base.set_parents(a, 3 + kGoal, {kGoal});
    }

    // Success probability as a function of the current cell.
    auto move = [N](ActionId a, std::size_t axis, std::function<double(std::size_t, std::size_t)> success) {
        return ReferenceCpt([=](const ValueVector& src, std::size_t v) {
            const std::size_t x = src[kX], y = src[kY];
            const std::size_t cur = axis == kX ? x : y;
            std::size_t target = cur;
            if (axis == kX && a == kRight) target = std::min(x + 1, N - 1);
            if (axis == kX && a == kLeft) target = x == 0 ? 0 : x - 1;
            if (axis == kY && a == kUp) target = std::min(y + 1, N - 1);
            if (axis == kY && a == kDown) target = y == 0 ? 0 : y - 1;
            if (target == cur) return v == cur ? 1.0 : 0.0;
            const double p = success(x, y);
            if (v == target) return p;
            return v == cur ? 1.0 - p : 0.0;
        });
    };
    const double ps = params.success, pt = params.trap_success, pp = params.prior_success;
    auto true_success = [traps, ps, pt](std::size_t x, std::size_t y) {
        return std::find(traps.begin(), traps.end(), Cell{x, y}) != traps.end() ? pt : ps;
    };
    auto prior_success = [pp](std::size_t, std::size_t) { return pp; };
    const double acc = params.localizer_accuracy, conf = params.confidence;
    auto sensor = [N, acc](std::size_t node) -> detail::NodeDef {
        if (node == 3 + kGoal) return {{kGoal}, detail::identity_cpt(kGoal), 1.0};
        const std::size_t f = node - 3;
        return {{f}, detail::noisy_position_cpt(f, N, acc), 1.0};
    };

    detail::build_true_model(d, base, [&](ActionId a, std::size_t node) -> detail::NodeDef {
        if (node == kGoal) return {{kGoal}, detail::identity_cpt(kGoal), 1.0};
        if (node >= 3) return sensor(node);
        return {{kX, kY}, move(a, node, true_success), 1.0};
    });
    d.finalize();

    b.prior.node_prior = detail::make_node_prior(d, [=](ActionId a, std::size_t node) -> detail::NodeDef {
        if (node == kGoal) return {{kGoal}, detail::identity_cpt(kGoal), kKnownMass};
        if (node >= 3) {
            detail::NodeDef def = sensor(node);
            def.mass = kKnownMass;
            return def;
        }
        return {{kX, kY}, move(a, node, prior_success), conf};
    });
    b.prior.base_topology = base;
    for (ActionId a = 0; a < d.action_count; ++a) {
        b.prior.mutable_edges.mutable_edges.push_back({a, kX, kGoal});
        b.prior.mutable_edges.mutable_edges.push_back({a, kY, kGoal});
    }
    b.true_topology = base;
    b.confidence = conf;
    return b;
}

}  // namespace fbapomdp
