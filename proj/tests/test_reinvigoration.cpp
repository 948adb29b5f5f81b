#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "support.hpp"

using namespace fbapomdp;

namespace {

/// Exhaustive posterior over s_0..s_T of a known-parameter 2-state HMM.
std::map<std::vector<StateIndex>, double> enumerate_posterior(const DomainSpec& d,
                                                               const std::vector<ObservationIndex>& obs) {
    std::map<std::vector<StateIndex>, double> out;
    const std::size_t T = obs.size();
    double z = 0.0;
    for (std::size_t code = 0; code < (std::size_t{1} << (T + 1)); ++code) {
        std::vector<StateIndex> seq(T + 1);
        for (std::size_t t = 0; t <= T; ++t) seq[t] = (code >> t) & 1;
        double p = d.initial_distribution[seq[0]];
        for (std::size_t t = 0; t < T; ++t) p *= d.true_probability(seq[t], 0, seq[t + 1], obs[t]);
        out[seq] = p;
        z += p;
    }
    for (auto& [k, v] : out) v /= z;
    return out;
}

}  // namespace

TEST(Smoothing, DeterministicModelGivesTheOnlyConsistentSequence) {
    // No flips, perfect sensor: the sequence is the observations, s_0 = s_1.
    const DomainSpec d = fbt::two_state_hmm(0.0, 1.0);
    Rng rng(1);
    const std::vector<ActionId> a{0, 0, 0};
    const std::vector<ObservationIndex> o{1, 1, 1};
    for (int i = 0; i < 20; ++i)
        EXPECT_EQ(sample_state_sequence(d.true_model, d, a, o, rng), (std::vector<StateIndex>{1, 1, 1, 1}));
}

TEST(Smoothing, UninformativeObservationsFollowThePriorChain) {
    // Sensor is a coin, so the posterior is the prior Markov chain.
    const DomainSpec d = fbt::two_state_hmm(0.2, 0.5, {0.9, 0.1});
    Rng rng(2);
    const std::vector<ActionId> a{0};
    const std::vector<ObservationIndex> o{0};
    const int N = 50000;
    int first_zero = 0, stay = 0;
    for (int i = 0; i < N; ++i) {
        const auto seq = sample_state_sequence(d.true_model, d, a, o, rng);
        first_zero += seq[0] == 0;
        stay += seq[0] == seq[1];
    }
    EXPECT_NEAR(first_zero / double(N), 0.9, 0.01);
    EXPECT_NEAR(stay / double(N), 0.8, 0.01);
}

TEST(Smoothing, MatchesEnumerationOnShortSequence) {
    const DomainSpec d = fbt::two_state_hmm(0.25, 0.8, {0.6, 0.4});
    const std::vector<ActionId> a{0, 0, 0};
    const std::vector<ObservationIndex> o{0, 1, 1};
    const auto exact = enumerate_posterior(d, o);
    Rng rng(3);
    SmoothingModel model(d.true_model, d.state_space, d.observation_space);
    std::map<std::vector<StateIndex>, double> freq;
    const int N = 100000;
    for (int i = 0; i < N; ++i) freq[sample_state_sequence(model, a, o, d.initial_distribution, rng)] += 1.0 / N;
    double tv = 0.0;
    for (const auto& [seq, p] : exact) tv += std::abs(p - freq[seq]);
    EXPECT_LT(0.5 * tv, 0.02);
}

TEST(Smoothing, ImpossibleHistoryThrows) {
    const DomainSpec d = fbt::two_state_hmm(0.0, 1.0, {1.0, 0.0});
    Rng rng(4);
    const std::vector<ActionId> a{0};
    const std::vector<ObservationIndex> o{1};
    EXPECT_THROW(sample_state_sequence(d.true_model, d, a, o, rng), InfeasibleHistory);
    const std::vector<ObservationIndex> two{0, 0};
    EXPECT_THROW(sample_state_sequence(d.true_model, d, a, two, rng), InvalidArgument);
}

TEST(Smoothing, EmptyHistoryDrawsInitialState) {
    const DomainSpec d = fbt::two_state_hmm(0.1, 0.9, {0.0, 1.0});
    Rng rng(5);
    const auto seq = sample_state_sequence(d.true_model, d, {}, {}, rng);
    ASSERT_EQ(seq.size(), 1u);
    EXPECT_EQ(seq[0], 1u);
}

TEST(MhStep, NoMutableEdgesKeepsTopology) {
    const auto toy = fbt::observed_structure_toy(10, 0.6, 6);
    const FactoredPrior fixed = toy.prior.concentrated_on(toy.prior.base_topology);
    Rng rng(6);
    const std::vector<Trajectory> data{toy.trajectory};
    const MhStep st = mh_structure_step(toy.prior.base_topology, data, fixed, toy.domain, rng);
    EXPECT_TRUE(st.topology == toy.prior.base_topology);
}

TEST(MhStep, LogRatioIsFullBdDifference) {
    const auto toy = fbt::observed_structure_toy(20, 0.5, 2);
    const std::vector<Trajectory> data{toy.trajectory};
    Rng rng(7);
    const double exact = fbt::exact_log_odds(toy);
    const MhStep up = mh_structure_step(toy.prior.base_topology, data, toy.prior, toy.domain, rng);
    EXPECT_NEAR(up.log_ratio, exact, 1e-9);
    const Topology with = toy.prior.base_topology.with_flipped(toy.edge);
    const MhStep down = mh_structure_step(with, data, toy.prior, toy.domain, rng);
    EXPECT_NEAR(down.log_ratio, -exact, 1e-9);
}

TEST(MhStep, ImprovingMovesAlwaysAccepted) {
    Rng rng(8);
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto toy = fbt::observed_structure_toy(15, 0.7, 100 + seed);
        const std::vector<Trajectory> data{toy.trajectory};
        const MhStep st = mh_structure_step(toy.prior.base_topology, data, toy.prior, toy.domain, rng);
        if (st.log_ratio >= 0.0) {
            EXPECT_TRUE(st.accepted);
            EXPECT_TRUE(st.topology.has_edge(toy.edge));
            ++checked;
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(MhStep, AcceptanceFrequencyMatchesRatio) {
    const auto toy = fbt::observed_structure_toy(20, 0.5, 2);
    const std::vector<Trajectory> data{toy.trajectory};
    const double lr = fbt::exact_log_odds(toy);
    // Propose from whichever side is worse so the acceptance is exp(-|lr|).
    const Topology with = toy.prior.base_topology.with_flipped(toy.edge);
    const Topology& from = lr > 0 ? with : toy.prior.base_topology;
    Rng rng(9);
    const int N = 40000;
    int acc = 0;
    for (int i = 0; i < N; ++i) acc += mh_structure_step(from, data, toy.prior, toy.domain, rng).accepted;
    const double p = std::exp(-std::abs(lr));
    EXPECT_NEAR(acc / double(N), p, 3.0 * std::sqrt(p * (1 - p) / N) + 1e-9);
}

TEST(Gibbs, OccupancyMatchesBdPosterior) {
    const auto toy = fbt::observed_structure_toy(20, 0.5, 2);
    StructureCache cache(toy.domain, toy.prior);
    GibbsChain chain(toy.domain, cache, toy.episodes, cache.prior_counts(toy.prior.base_topology));
    Rng rng(10);
    const int N = 10000;
    int with = 0;
    for (int i = 0; i < N; ++i) {
        chain.sweep(1, rng);
        with += chain.topology().has_edge(toy.edge);
    }
    const double odds = double(with) / double(N - with);
    const double exact = std::exp(fbt::exact_log_odds(toy));
    EXPECT_NEAR(odds / exact, 1.0, 0.1);
}

TEST(Gibbs, CountsEqualPriorPlusTalliesAfterEverySweep) {
    const auto toy = fbt::observed_structure_toy(12, 0.7, 11);
    StructureCache cache(toy.domain, toy.prior);
    GibbsChain chain(toy.domain, cache, toy.episodes, cache.prior_counts(toy.prior.base_topology));
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        chain.sweep(1, rng);
        const auto& ts = chain.trajectories();
        ASSERT_EQ(ts.size(), 1u);
        // Observations pin the states.
        EXPECT_EQ(ts[0].states, toy.trajectory.states);
        const FactoredCounts expect = count_transitions(ts, chain.topology(), cache.prior_counts(chain.topology()),
                                                        toy.domain.state_space, toy.domain.observation_space);
        EXPECT_EQ(chain.counts(), expect);
        EXPECT_TRUE(chain.counts().topology() == chain.topology());
    }
    EXPECT_EQ(chain.sweeps(), 50u);
    EXPECT_EQ(chain.proposals(), 50u);
}

TEST(Gibbs, KnownStructureNeverMoves) {
    const auto toy = fbt::observed_structure_toy(12, 0.7, 12);
    const Topology with = toy.prior.base_topology.with_flipped(toy.edge);
    const FactoredPrior fixed = toy.prior.concentrated_on(with);
    StructureCache cache(toy.domain, fixed);
    Rng rng(12);
    const auto ps = gibbs_reinvigorate(toy.domain, cache, toy.episodes, cache.prior_counts(with),
                                       {.burn_in = 5, .num_particles = 20}, rng);
    ASSERT_EQ(ps.size(), 20u);
    const std::vector<Trajectory> data{toy.trajectory};
    const FactoredCounts expect = count_transitions(data, with, cache.prior_counts(with), toy.domain.state_space,
                                                    toy.domain.observation_space);
    for (const auto& p : ps) {
        EXPECT_EQ(p.counts, expect);
        EXPECT_EQ(p.state, toy.trajectory.states.back());
    }
}

TEST(Gibbs, EmptyHistoryDrawsFromPrior) {
    const auto toy = fbt::observed_structure_toy(0, 0.7, 13);
    StructureCache cache(toy.domain, toy.prior);
    Rng rng(13);
    const std::vector<History> none;
    const auto ps = gibbs_reinvigorate(toy.domain, cache, none, cache.prior_counts(toy.prior.base_topology),
                                       {.num_particles = 4000}, rng);
    ASSERT_EQ(ps.size(), 4000u);
    int with = 0;
    for (const auto& p : ps) with += p.counts.topology().has_edge(toy.edge);
    EXPECT_NEAR(with / 4000.0, 0.5, 3.0 * std::sqrt(0.25 / 4000));
}

TEST(Gibbs, InvalidConfig) {
    const auto toy = fbt::observed_structure_toy(5, 0.7, 14);
    StructureCache cache(toy.domain, toy.prior);
    Rng rng(14);
    const auto& seed = cache.prior_counts(toy.prior.base_topology);
    EXPECT_THROW(gibbs_reinvigorate(toy.domain, cache, toy.episodes, seed, {.num_particles = 0}, rng), InvalidArgument);
    EXPECT_THROW(gibbs_reinvigorate(toy.domain, cache, toy.episodes, seed, {.sweeps_per_particle = 0}, rng),
                 InvalidArgument);
    EXPECT_THROW(gibbs_reinvigorate(toy.domain, cache, toy.episodes, seed, {.mh_steps_per_sweep = 0}, rng),
                 InvalidArgument);
}

TEST(Gibbs, TigerReinvigorationKeepsStructuresDiverse) {
    const DomainBundle t = make_factored_tiger({.n_dummy = 2});
    StructureCache cache(t.domain, t.prior);
    Rng rng(15);
    std::vector<History> eps(1);
    StateIndex s = t.domain.sample_initial_state(rng);
    for (int i = 0; i < 8; ++i) {
        const StepResult r = t.domain.step(s, tiger::kListen, rng);
        eps[0].actions.push_back(tiger::kListen);
        eps[0].observations.push_back(r.observation);
        s = r.next_state;
    }
    const auto ps = gibbs_reinvigorate(t.domain, cache, eps, cache.prior_counts(t.prior.base_topology),
                                       {.burn_in = 20, .num_particles = 100}, rng);
    EXPECT_GE(distinct_topologies(ps), 2u);
    for (const auto& p : ps) EXPECT_NO_THROW(p.counts.validate());
}

TEST(Gibbs, EmittedJointMatchesEnumeration) {
    // One hidden binary feature seen through a known 0.8 sensor; whether it
    // is sticky (edge s -> s') is uncertain. Exact p(s_T, G | o) by summing
    // the BD marginal likelihood over all 2^21 state sequences.
    const FactoredSpace S = fbt::binary_space(1, "s"), O = fbt::binary_space(1, "o");
    Topology truth(1, 1, 1);
    truth.set_parents(0, 0, {0});
    truth.set_parents(0, 1, {0});
    FactoredCounts c(make_layout(truth, S, O));
    c.set_node(0, 0, std::vector<double>{0.9, 0.1, 0.1, 0.9});
    c.set_node(0, 1, std::vector<double>{0.8, 0.2, 0.2, 0.8});
    const DomainSpec d = fbt::toy_domain(S, O, c);

    FactoredPrior prior;
    prior.base_topology = Topology(1, 1, 1);
    prior.base_topology.set_parents(0, 1, {0});
    const Edge edge{0, 0, 0};
    prior.mutable_edges.mutable_edges = {edge};
    prior.node_prior = [](ActionId, std::size_t node, std::span<const std::size_t> parents) {
        if (node == 1) return std::vector<double>{8000, 2000, 2000, 8000};
        return std::vector<double>(parents.empty() ? 2 : 4, 1.0);
    };

    const std::size_t T = 20;
    Rng rng(16);
    std::vector<History> eps(1);
    StateIndex s = d.sample_initial_state(rng);
    for (std::size_t t = 0; t < T; ++t) {
        const StepResult r = d.step(s, 0, rng);
        eps[0].actions.push_back(0);
        eps[0].observations.push_back(r.observation);
        s = r.next_state;
    }

    // exact[G][s_T], G = 0 without the edge, 1 with it.
    double logw[2][2];
    for (auto& row : logw) row[0] = row[1] = -std::numeric_limits<double>::infinity();
    auto log_add = [](double a, double b) {
        if (a < b) std::swap(a, b);
        return b == -std::numeric_limits<double>::infinity() ? a : a + std::log1p(std::exp(b - a));
    };
    const std::vector<double> obs_prior{8000, 2000, 2000, 8000};
    for (std::size_t code = 0; code < (std::size_t{1} << (T + 1)); ++code) {
        std::uint64_t n[2][2] = {}, m[4] = {};
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t a = (code >> t) & 1, b = (code >> (t + 1)) & 1;
            ++n[a][b];
            ++m[b * 2 + eps[0].observations[t]];
        }
        const double obs = bd_node_score_log(obs_prior, m, 2);
        const std::vector<std::uint64_t> pooled{n[0][0] + n[1][0], n[0][1] + n[1][1]};
        const std::vector<std::uint64_t> split{n[0][0], n[0][1], n[1][0], n[1][1]};
        const double without = bd_node_score_log(std::vector<double>{1, 1}, pooled, 2);
        const double with = bd_node_score_log(std::vector<double>(4, 1.0), split, 2);
        const std::size_t last = (code >> T) & 1;
        logw[0][last] = log_add(logw[0][last], without + obs);
        logw[1][last] = log_add(logw[1][last], with + obs);
    }
    double mx = -std::numeric_limits<double>::infinity(), z = 0.0;
    for (auto& row : logw) mx = std::max({mx, row[0], row[1]});
    double exact[2][2];
    for (int g = 0; g < 2; ++g)
        for (int l = 0; l < 2; ++l) z += exact[g][l] = std::exp(logw[g][l] - mx);

    StructureCache cache(d, prior);
    const auto ps = gibbs_reinvigorate(d, cache, eps, cache.prior_counts(prior.base_topology),
                                       {.burn_in = 50, .num_particles = 1000}, rng);
    double freq[2][2] = {};
    for (const auto& p : ps) freq[p.counts.topology().has_edge(edge)][p.state] += 1.0 / double(ps.size());
    double tv = 0.0;
    for (int g = 0; g < 2; ++g)
        for (int l = 0; l < 2; ++l) tv += std::abs(exact[g][l] / z - freq[g][l]);
    EXPECT_LT(0.5 * tv, 0.1) << "exact (no edge) " << exact[0][0] / z << ' ' << exact[0][1] / z << " (edge) "
                             << exact[1][0] / z << ' ' << exact[1][1] / z << "; sampled " << freq[0][0] << ' '
                             << freq[0][1] << ' ' << freq[1][0] << ' ' << freq[1][1];
}
