// Plays a few Factored Tiger episodes with a learning FBA-POMCP agent and
// prints each episode's actions, observations and return.
#include <iostream>

#include "fbapomdp/fbapomdp.hpp"

int main() {
    using namespace fbapomdp;
    const DomainBundle tiger = make_factored_tiger({.n_dummy = 2});

    AgentConfig config;
    config.num_particles = 200;
    config.planner.num_simulations = 512;

    Rng rng(7);
    StructureCache cache(tiger.domain, tiger.prior);
    BayesAgent<FactoredModel> agent(tiger.domain, sample_factored_prior(tiger.domain, cache, config.num_particles, rng),
                                    config, &tiger.prior);

    for (int episode = 0; episode < 5; ++episode) {
        const EpisodeResult r = run_episode(tiger.domain, agent, tiger.domain.horizon, rng);
        std::cout << "episode " << episode << ":";
        for (std::size_t t = 0; t < r.history.actions.size(); ++t)
            std::cout << ' ' << tiger.domain.action_names[r.history.actions[t]]
                      << (r.history.actions[t] == tiger::kListen ? (r.history.observations[t] ? "(R)" : "(L)") : "");
        std::cout << "  return " << r.discounted_return << "  topologies " << agent.topology_count() << '\n';
    }
}
