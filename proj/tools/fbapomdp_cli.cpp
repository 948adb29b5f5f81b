#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

#include "fbapomdp/experiment.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Factored Bayes-adaptive POMDP experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run the agents of a config file and write CSV/SVG results");
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs, episodes;
    std::optional<std::string> agent;
    bool quiet = false;
    run->add_option("--config", config_path, "experiment config (key = value lines)")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--runs", runs, "override the number of runs");
    run->add_option("--episodes", episodes, "override the number of episodes per run");
    run->add_option("--agent", agent, "run only this agent id");
    run->add_flag("--quiet", quiet, "no progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    fbapomdp::ExperimentConfig config;
    try {
        config = fbapomdp::load_config(config_path);
        if (seed) config.seed = *seed;
        if (runs) config.runs = *runs;
        if (episodes) config.episodes = *episodes;
        if (agent) {
            fbapomdp::standard_agent(*agent, config.shared.reinvigoration);
            config.agents = {*agent};
        }
        config.validate();
        // Build every agent's domain once so bad domain parameters are config errors.
        for (const auto& id : config.agents) fbapomdp::make_bundle(config, config.agent(id));
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        std::vector<fbapomdp::AgentResult> results;
        for (const auto& id : config.agents) {
            const auto t0 = std::chrono::steady_clock::now();
            results.push_back(fbapomdp::run_experiment_agent(config, id));
            if (!quiet) {
                const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                double total = 0.0;
                std::size_t n = 0;
                for (const auto& r : results.back().runs)
                    for (const auto& row : r.rows) total += row.discounted_return, ++n;
                std::cerr << id << ": " << config.runs << " runs x " << config.episodes << " episodes, mean return "
                          << (n ? total / static_cast<double>(n) : 0.0) << ", " << s << " s\n";
            }
        }
        fbapomdp::write_outputs(out_dir, config, results);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
