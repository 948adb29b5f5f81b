#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace fbapomdp;

namespace {

/// One binary state feature that never changes, one uninformative binary
/// observation, and `rewards[s][a]` per step.
DomainSpec bandit(std::vector<std::vector<double>> rewards, std::vector<double> initial) {
    const std::size_t A = rewards[0].size();
    Topology g(A, 1, 1);
    for (ActionId a = 0; a < A; ++a) g.set_parents(a, 0, {0});
    FactoredCounts c(make_layout(g, fbt::binary_space(1), fbt::binary_space(1)));
    for (ActionId a = 0; a < A; ++a) {
        c.set_node(a, 0, std::vector<double>{1, 0, 0, 1});
        c.set_node(a, 1, std::vector<double>{1, 1});
    }
    DomainSpec d = fbt::toy_domain(fbt::binary_space(1), fbt::binary_space(1), c, std::move(initial));
    d.reward = [rewards](StateIndex s, ActionId a, StateIndex) { return rewards[s][a]; };
    d.reward_span = 10.0;
    return d;
}

ParticleBelief<StateParticle> states(std::vector<StateIndex> ss) {
    std::vector<StateParticle> ps;
    for (auto s : ss) ps.push_back({s});
    return ParticleBelief<StateParticle>::uniform(std::move(ps));
}

}  // namespace

TEST(UcbSelect, UntriedFirstInIndexOrder) {
    SearchNode n;
    n.actions.resize(3);
    n.actions[0].visits = 4;
    n.visits = 4;
    EXPECT_EQ(ucb_select(n, 1.0), 1u);
    n.actions[1].visits = 1;
    EXPECT_EQ(ucb_select(n, 1.0), 2u);
}

TEST(UcbSelect, LargerBonusForFewerVisits) {
    SearchNode n;
    n.actions.resize(2);
    n.actions[0].visits = 2;
    n.actions[1].visits = 8;
    n.visits = 10;
    EXPECT_EQ(ucb_select(n, 1.0), 0u);
}

TEST(UcbSelect, HigherMeanWithEqualVisits) {
    SearchNode n;
    n.actions.resize(2);
    n.actions[0] = {10, 1.0, {}};
    n.actions[1] = {10, 2.0, {}};
    n.visits = 20;
    EXPECT_EQ(ucb_select(n, 1.0), 1u);
    EXPECT_THROW(ucb_select(SearchNode{}, 1.0), InvalidArgument);
}

TEST(Planner, SingleSimulationAddsOneNode) {
    const DomainBundle b = make_factored_tiger({.n_dummy = 0});
    KnownModel model(b.domain);
    Planner<KnownModel> planner(model, {.num_simulations = 1});
    Rng rng(1);
    planner.plan(states({0, 1}), rng);
    // root + at most one expansion; a door opening ends the simulation first.
    EXPECT_LE(planner.tree().size(), 2u);
    EXPECT_EQ(planner.tree().node(0).visits, 1u);
}

TEST(Planner, RootVisitsEqualSimulations) {
    const DomainBundle b = make_factored_tiger({.n_dummy = 0});
    KnownModel model(b.domain);
    Planner<KnownModel> planner(model, {.num_simulations = 777});
    Rng rng(2);
    planner.plan(states({0, 1}), rng);
    const SearchNode& root = planner.tree().node(0);
    std::uint64_t sum = 0;
    for (const auto& a : root.actions) sum += a.visits;
    EXPECT_EQ(sum, 777u);
    EXPECT_EQ(root.visits, 777u);
    EXPECT_LE(planner.tree().max_depth(), 30u);
}

TEST(Planner, SimulateAtDepthLimitReturnsZero) {
    const DomainBundle b = make_factored_tiger({.n_dummy = 0});
    KnownModel model(b.domain);
    Planner<KnownModel> planner(model, {});
    NoScratch scratch;
    Rng rng(3);
    EXPECT_EQ(planner.simulate({0}, scratch, 0, 0, 5, 5, rng), 0.0);
    EXPECT_EQ(planner.tree().size(), 1u);
    EXPECT_EQ(planner.rollout({0}, scratch, 0, 5, 5, rng), 0.0);
}

TEST(Planner, DeterministicRollout) {
    DomainSpec d = bandit({{-1.0, -1.0}, {-1.0, -1.0}}, {1.0, 0.0});
    d.discount = 0.9;
    KnownModel model(d);
    Planner<KnownModel> planner(model, {});
    NoScratch scratch;
    Rng rng(4);
    EXPECT_DOUBLE_EQ(planner.rollout({0}, scratch, 0, 0, 2, rng), -1.9);
}

TEST(Planner, TigerRolloutMatchesEnumeration) {
    const DomainBundle b = make_factored_tiger({.n_dummy = 0});
    KnownModel model(b.domain);
    Planner<KnownModel> planner(model, {});
    NoScratch scratch;
    Rng rng(5);
    // Tiger left. Each step: 1/3 open-left (-100, end), 1/3 open-right (+10, end),
    // 1/3 listen (-1, go on) up to depth 30.
    const double g = b.domain.discount;
    double expected = 0.0;
    for (int t = 0; t < 30; ++t) expected += std::pow(g / 3.0, t) * (-91.0 / 3.0);
    const int N = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < N; ++i) {
        const double r = planner.rollout({0}, scratch, 0, 0, 30, rng);
        sum += r;
        sq += r * r;
    }
    const double mean = sum / N;
    const double sd = std::sqrt(sq / N - mean * mean);
    EXPECT_NEAR(mean, expected, 3.0 * sd / std::sqrt(double(N)));
}

TEST(Planner, TigerCertainLeftOpensRight) {
    const DomainBundle b = make_factored_tiger({.n_dummy = 0});
    KnownModel model(b.domain);
    Planner<KnownModel> planner(model, {.num_simulations = 10000});
    Rng rng(6);
    EXPECT_EQ(planner.plan(states(std::vector<StateIndex>(50, 0)), rng), tiger::kOpenRight);
    EXPECT_EQ(planner.plan(states(std::vector<StateIndex>(50, 1)), rng), tiger::kOpenLeft);
}

TEST(Planner, TigerUncertainListens) {
    const DomainBundle b = make_factored_tiger({.n_dummy = 0});
    KnownModel model(b.domain);
    Planner<KnownModel> planner(model, {.num_simulations = 10000});
    Rng rng(7);
    std::vector<StateIndex> ss;
    for (int i = 0; i < 100; ++i) ss.push_back(i % 2);
    EXPECT_EQ(planner.plan(states(ss), rng), tiger::kListen);
}

TEST(Planner, OneStepBanditPicksBestExpectedReward) {
    // E[R(a)] under b = (0.3, 0.7): a0 = 3.0*0.3 + 0 = 0.9, a1 = 0 + 2*0.7 = 1.4, a2 = 1.0.
    const DomainSpec d = bandit({{3.0, 0.0, 1.0}, {0.0, 2.0, 1.0}}, {0.3, 0.7});
    KnownModel model(d);
    Planner<KnownModel> planner(model, {.num_simulations = 5000});
    std::vector<StateIndex> ss;
    for (int i = 0; i < 10; ++i) ss.push_back(i < 3 ? 0 : 1);
    Rng rng(8);
    EXPECT_EQ(planner.plan(states(ss), rng, 1), 1u);
    const SearchNode& root = planner.tree().node(0);
    EXPECT_NEAR(root.actions[1].mean, 1.4, 0.1);
    EXPECT_EQ(planner.tree().size(), 1u);  // horizon 1: nothing below the root
}

TEST(Planner, EmptyBeliefAndBadConfig) {
    const DomainBundle b = make_factored_tiger({.n_dummy = 0});
    KnownModel model(b.domain);
    EXPECT_THROW(Planner<KnownModel>(model, {.num_simulations = 0}), InvalidArgument);
    EXPECT_THROW(Planner<KnownModel>(model, {.depth_cap = 0}), InvalidArgument);
    Planner<KnownModel> planner(model, {});
    Rng rng(9);
    EXPECT_THROW(planner.plan(ParticleBelief<StateParticle>{}, rng), EmptyBelief);
}

TEST(Planner, FactoredSimulationLeavesParticleCountsUntouched) {
    const DomainBundle b = make_factored_tiger({.n_dummy = 1});
    FactoredModel model(b.domain);
    StructureCache cache(b.domain, b.prior);
    Rng rng(10);
    auto ps = sample_factored_prior(b.domain, cache, 20, rng);
    const auto before = ps;
    auto belief = ParticleBelief<FactoredParticle>::uniform(ps);
    Planner<FactoredModel> planner(model, {.num_simulations = 500});
    planner.plan(belief, rng);
    for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(belief.particles[i].counts, before[i].counts);
}
