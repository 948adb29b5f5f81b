#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fbapomdp/agent.hpp"
#include "fbapomdp/domains.hpp"

namespace fbapomdp {

// ------------------------------------------------------------ config

enum class ModelClass { Known, Flat, Factored };

/// What distinguishes one agent from another. Planner and belief settings
/// are shared by all agents of an experiment.
struct AgentSpec {
    std::string id;
    ModelClass model = ModelClass::Factored;
    bool known_structure = false;
    ReinvigorationConfig reinvigoration{};
    std::optional<double> confidence;
    std::optional<double> edge_probability;
};

inline const std::vector<std::string>& standard_agent_ids() {
    static const std::vector<std::string> ids{"bapomcp", "knows-structure", "no-reinvigoration", "fbapomcp-full",
                                              "pomcp"};
    return ids;
}

/// Built-in definition of an agent id, with `base` reinvigoration settings.
inline AgentSpec standard_agent(const std::string& id, const ReinvigorationConfig& base) {
    AgentSpec s;
    s.id = id;
    s.reinvigoration = base;
    if (id == "bapomcp") {
        s.model = ModelClass::Flat;
        s.reinvigoration.enabled = false;
    } else if (id == "knows-structure") {
        s.known_structure = true;
        s.reinvigoration.enabled = false;
    } else if (id == "no-reinvigoration") {
        s.reinvigoration.enabled = false;
    } else if (id == "fbapomcp-full") {
        s.reinvigoration.enabled = true;
    } else if (id == "pomcp") {
        s.model = ModelClass::Known;
        s.reinvigoration.enabled = false;
    } else {
        throw InvalidArgument("unknown agent id '" + id + "'");
    }
    return s;
}

struct ExperimentConfig {
    std::string domain = "tiger";
    TigerParams tiger{};
    CollisionParams collision{};
    GridworldParams grid{};
    std::optional<double> discount;
    std::optional<std::size_t> horizon;

    std::vector<std::string> agents{"bapomcp", "knows-structure", "no-reinvigoration", "fbapomcp-full"};
    std::size_t runs = 10;
    std::size_t episodes = 500;
    std::uint64_t seed = 1;
    /// Worker threads; 0 picks the hardware concurrency.
    std::size_t threads = 0;
    /// Moving-average window of the summary.
    std::size_t window = 1;

    AgentConfig shared{};
    /// Explicit per-agent overrides, keyed by agent id.
    std::map<std::string, AgentSpec> overrides;

    AgentSpec agent(const std::string& id) const {
        auto it = overrides.find(id);
        if (it != overrides.end()) return it->second;
        return standard_agent(id, shared.reinvigoration);
    }

    void validate() const {
        if (runs == 0 || episodes == 0) throw InvalidArgument("config: runs and episodes must be positive");
        if (window == 0) throw InvalidArgument("config: summary window must be positive");
        if (agents.empty()) throw InvalidArgument("config: no agents selected");
        if (domain != "tiger" && domain != "collision" && domain != "gridworld")
            throw InvalidArgument("config: unknown domain '" + domain + "'");
        shared.validate();
        for (const auto& id : agents) agent(id).reinvigoration.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

/// Typed access to the raw key/value map that remembers what was read.
class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

    bool has(const std::string& key) const { return raw_.count(key) > 0; }

    template <class T>
    void get(const std::string& key, T& out) {
        auto it = raw_.find(key);
        if (it == raw_.end()) return;
        used_.insert(key);
        out = convert<T>(key, it->second);
    }

    template <class T>
    void get(const std::string& key, std::optional<T>& out) {
        T v{};
        if (!has(key)) return;
        get(key, v);
        out = v;
    }

    std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : raw_)
            if (k.rfind(prefix, 0) == 0) out.push_back(k);
        return out;
    }

    void check_all_used() const {
        for (const auto& [k, v] : raw_)
            if (!used_.count(k)) throw ConfigError("config: unknown key '" + k + "'");
    }

private:
    template <class T>
    static T convert(const std::string& key, const std::string& value) {
        try {
            if constexpr (std::is_same_v<T, std::string>) {
                return value;
            } else if constexpr (std::is_same_v<T, bool>) {
                if (value == "true" || value == "1" || value == "yes") return true;
                if (value == "false" || value == "0" || value == "no") return false;
                throw std::invalid_argument("bool");
            } else if constexpr (std::is_floating_point_v<T>) {
                std::size_t pos = 0;
                const double v = std::stod(value, &pos);
                if (pos != value.size()) throw std::invalid_argument("trailing");
                return static_cast<T>(v);
            } else {
                if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
                std::size_t pos = 0;
                const unsigned long long v = std::stoull(value, &pos);
                if (pos != value.size()) throw std::invalid_argument("trailing");
                return static_cast<T>(v);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("config: bad value '" + value + "' for key '" + key + "'");
        }
    }

    std::map<std::string, std::string> raw_;
    std::set<std::string> used_;
};

inline std::vector<Cell> parse_cells(const std::string& key, const std::string& text) {
    std::vector<Cell> out;
    for (const auto& item : split(text, ';')) {
        const auto xy = split(item, ',');
        if (xy.size() != 2) throw ConfigError("config: '" + key + "' expects 'x,y;x,y;...'");
        try {
            out.push_back({std::stoul(xy[0]), std::stoul(xy[1])});
        } catch (const std::logic_error&) {
            throw ConfigError("config: bad cell '" + item + "' in '" + key + "'");
        }
    }
    return out;
}

inline void read_reinvigoration(ConfigReader& r, const std::string& prefix, ReinvigorationConfig& rc) {
    r.get(prefix + "enabled", rc.enabled);
    r.get(prefix + "threshold", rc.threshold);
    r.get(prefix + "burn_in", rc.gibbs.burn_in);
    r.get(prefix + "mh_steps_per_sweep", rc.gibbs.mh_steps_per_sweep);
    r.get(prefix + "sweeps_per_particle", rc.gibbs.sweeps_per_particle);
    r.get(prefix + "seed_from_prior", rc.seed_from_prior);
    r.get(prefix + "keep_fraction", rc.keep_fraction);
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, bad
/// values and per-agent keys outside model/prior/reinvigoration are
/// ConfigErrors.
inline ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> raw;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!raw.emplace(key, value).second) throw ConfigError("config: duplicate key '" + key + "'");
    }

    ExperimentConfig c;
    detail::ConfigReader r(raw);
    r.get("domain", c.domain);
    r.get("tiger.n_dummy", c.tiger.n_dummy);
    r.get("tiger.listen_accuracy", c.tiger.listen_accuracy);
    r.get("tiger.prior_accuracy", c.tiger.prior_accuracy);
    r.get("tiger.confidence", c.tiger.confidence);
    r.get("collision.width", c.collision.width);
    r.get("collision.height", c.collision.height);
    r.get("collision.observation_accuracy", c.collision.observation_accuracy);
    r.get("collision.confidence", c.collision.confidence);
    r.get("grid.size", c.grid.size);
    r.get("grid.success", c.grid.success);
    r.get("grid.trap_success", c.grid.trap_success);
    r.get("grid.prior_success", c.grid.prior_success);
    r.get("grid.localizer_accuracy", c.grid.localizer_accuracy);
    r.get("grid.confidence", c.grid.confidence);
    if (r.has("grid.goals")) {
        std::string s;
        r.get("grid.goals", s);
        c.grid.goals = detail::parse_cells("grid.goals", s);
    }
    if (r.has("grid.traps")) {
        std::string s;
        r.get("grid.traps", s);
        c.grid.traps = detail::parse_cells("grid.traps", s);
        c.grid.default_traps = false;
    }
    r.get("discount", c.discount);
    r.get("horizon", c.horizon);
    if (r.has("agents")) {
        std::string s;
        r.get("agents", s);
        c.agents = detail::split(s, ',');
    }
    r.get("runs", c.runs);
    r.get("episodes", c.episodes);
    r.get("seed", c.seed);
    r.get("threads", c.threads);
    r.get("summary.window", c.window);
    r.get("belief.particles", c.shared.num_particles);
    if (r.has("belief.resampling")) {
        std::string s;
        r.get("belief.resampling", s);
        if (s == "systematic") c.shared.resampling = ResamplingScheme::Systematic;
        else if (s == "multinomial") c.shared.resampling = ResamplingScheme::Multinomial;
        else throw ConfigError("config: belief.resampling must be systematic or multinomial");
    }
    r.get("planner.num_simulations", c.shared.planner.num_simulations);
    r.get("planner.ucb_constant", c.shared.planner.ucb_constant);
    r.get("planner.depth_cap", c.shared.planner.depth_cap);
    detail::read_reinvigoration(r, "reinvigoration.", c.shared.reinvigoration);

    // Per-agent blocks: agent.<id>.<field>.
    std::set<std::string> ids;
    for (const auto& k : r.keys_with_prefix("agent.")) {
        const auto dot = k.find('.', 6);
        if (dot == std::string::npos) throw ConfigError("config: malformed per-agent key '" + k + "'");
        ids.insert(k.substr(6, dot - 6));
        const std::string field = k.substr(dot + 1);
        if (field != "model" && field != "structure" && field.rfind("prior.", 0) != 0 &&
            field.rfind("reinvigoration.", 0) != 0)
            throw ConfigError("config: per-agent key '" + k +
                              "' may only set model, structure, prior.* or reinvigoration.*");
    }
    for (const auto& id : ids) {
        AgentSpec spec;
        try {
            spec = standard_agent(id, c.shared.reinvigoration);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        const std::string p = "agent." + id + ".";
        if (r.has(p + "model")) {
            std::string m;
            r.get(p + "model", m);
            if (m == "known") spec.model = ModelClass::Known;
            else if (m == "flat") spec.model = ModelClass::Flat;
            else if (m == "factored") spec.model = ModelClass::Factored;
            else throw ConfigError("config: " + p + "model must be known, flat or factored");
        }
        if (r.has(p + "structure")) {
            std::string s;
            r.get(p + "structure", s);
            if (s == "known") spec.known_structure = true;
            else if (s == "uncertain") spec.known_structure = false;
            else throw ConfigError("config: " + p + "structure must be known or uncertain");
        }
        r.get(p + "prior.confidence", spec.confidence);
        r.get(p + "prior.edge_probability", spec.edge_probability);
        detail::read_reinvigoration(r, p + "reinvigoration.", spec.reinvigoration);
        c.overrides[id] = spec;
    }
    r.check_all_used();
    for (const auto& id : c.agents)
        if (std::find(standard_agent_ids().begin(), standard_agent_ids().end(), id) == standard_agent_ids().end())
            throw ConfigError("config: unknown agent id '" + id + "'");
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Domain bundle for one agent of the experiment, with its prior overrides.
inline DomainBundle make_bundle(const ExperimentConfig& c, const AgentSpec& spec) {
    DomainBundle b;
    if (c.domain == "tiger") {
        TigerParams p = c.tiger;
        if (spec.confidence) p.confidence = *spec.confidence;
        b = make_factored_tiger(p);
    } else if (c.domain == "collision") {
        CollisionParams p = c.collision;
        if (spec.confidence) p.confidence = *spec.confidence;
        b = make_collision_avoidance(p);
    } else if (c.domain == "gridworld") {
        GridworldParams p = c.grid;
        if (spec.confidence) p.confidence = *spec.confidence;
        b = make_gridworld(p);
    } else {
        throw InvalidArgument("unknown domain '" + c.domain + "'");
    }
    if (c.discount) b.domain.discount = *c.discount;
    if (c.horizon) b.domain.horizon = *c.horizon;
    if (c.discount || c.horizon) b.domain.finalize();
    if (spec.edge_probability) {
        if (!(*spec.edge_probability >= 0.0 && *spec.edge_probability <= 1.0))
            throw InvalidArgument("prior.edge_probability must lie in [0, 1]");
        b.prior.edge_probability = *spec.edge_probability;
    }
    if (spec.known_structure) b.prior = b.prior.concentrated_on(b.true_topology);
    return b;
}

// ------------------------------------------------------------ running

struct EpisodeRow {
    std::size_t run = 0;
    std::size_t episode = 0;
    double discounted_return = 0.0;
    double ms = 0.0;
    bool reinvigorated = false;
    std::size_t topo_count = 0;
};

struct RunResult {
    std::vector<EpisodeRow> rows;
    std::vector<ReinvigorationEvent> events;
    /// Distinct belief topologies at the start of the run (before episode 0).
    std::size_t initial_topo_count = 0;
};

/// Seed of run `run`: independent of the agent, so agents see common
/// random numbers run by run.
inline std::uint64_t run_seed(std::uint64_t seed, std::size_t run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace detail {

template <class Agent>
RunResult run_episodes(const DomainBundle& b, Agent& agent, std::size_t run, std::size_t episodes, Rng& rng,
                       const std::function<void(const EpisodeRow&)>& progress) {
    RunResult out;
    out.initial_topo_count = agent.topology_count();
    for (std::size_t e = 0; e < episodes; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        const EpisodeResult r = run_episode(b.domain, agent, b.domain.horizon, rng);
        const auto t1 = std::chrono::steady_clock::now();
        EpisodeRow row;
        row.run = run;
        row.episode = e;
        row.discounted_return = r.discounted_return;
        row.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        row.reinvigorated = agent.reinvigorated_this_episode();
        row.topo_count = agent.topology_count();
        out.rows.push_back(row);
        if (progress) progress(row);
    }
    out.events = agent.events();
    return out;
}

}  // namespace detail

/// One run of `episodes` episodes of one agent; deterministic given the
/// bundle, spec, shared settings and `seed`.
inline RunResult run_agent(const DomainBundle& b, const AgentSpec& spec, const AgentConfig& shared,
                           std::size_t run, std::size_t episodes, std::uint64_t seed,
                           const std::function<void(const EpisodeRow&)>& progress = {}) {
    Rng rng(seed);
    AgentConfig cfg = shared;
    cfg.reinvigoration = spec.reinvigoration;
    const std::size_t K = cfg.num_particles;
    switch (spec.model) {
        case ModelClass::Known: {
            cfg.reinvigoration.enabled = false;
            BayesAgent<KnownModel> agent(b.domain, state_particles(b.domain, K, rng), cfg);
            return detail::run_episodes(b, agent, run, episodes, rng, progress);
        }
        case ModelClass::Flat: {
            cfg.reinvigoration.enabled = false;
            const TabularCounts prior = flat_prior(b);
            BayesAgent<TabularModel> agent(b.domain, tabular_prior_particles(b.domain, prior, K, rng), cfg);
            return detail::run_episodes(b, agent, run, episodes, rng, progress);
        }
        case ModelClass::Factored: {
            StructureCache cache(b.domain, b.prior);
            auto particles = sample_factored_prior(b.domain, cache, K, rng);
            BayesAgent<FactoredModel> agent(b.domain, std::move(particles), cfg, &b.prior);
            return detail::run_episodes(b, agent, run, episodes, rng, progress);
        }
    }
    throw InvalidArgument("run_agent: unknown model class");
}

struct AgentResult {
    std::string id;
    std::vector<RunResult> runs;
};

/// All runs of one agent on a worker pool; results are ordered by run.
inline AgentResult run_experiment_agent(const ExperimentConfig& c, const std::string& id) {
    const AgentSpec spec = c.agent(id);
    const DomainBundle bundle = make_bundle(c, spec);
    AgentResult out{id, std::vector<RunResult>(c.runs)};
    std::size_t workers = c.threads != 0 ? c.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, c.runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t run; (run = next.fetch_add(1)) < c.runs;) {
            try {
                out.runs[run] = run_agent(bundle, spec, c.shared, run, c.episodes, run_seed(c.seed, run));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = c.runs;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

inline std::vector<AgentResult> run_experiment(const ExperimentConfig& c) {
    c.validate();
    std::vector<AgentResult> out;
    for (const auto& id : c.agents) out.push_back(run_experiment_agent(c, id));
    return out;
}

// ------------------------------------------------------------ summary

struct SummaryRow {
    std::size_t episode = 0;
    double mean = 0.0;
    /// Half-width of the normal-approximation 95% interval.
    double ci = 0.0;
    double smoothed_mean = 0.0;
    double smoothed_ci = 0.0;
};

/// Per-episode mean and 95% CI across runs (`returns[run][episode]`), plus a
/// trailing moving average over `window` episodes.
inline std::vector<SummaryRow> summarize(const std::vector<std::vector<double>>& returns, std::size_t window = 1) {
    if (returns.size() < 2) throw InsufficientData("summarize: need at least two runs");
    if (window == 0) throw InvalidArgument("summarize: window must be positive");
    const std::size_t episodes = returns.front().size();
    for (const auto& r : returns)
        if (r.size() != episodes) throw InvalidArgument("summarize: runs differ in length");
    const auto n = static_cast<double>(returns.size());
    std::vector<SummaryRow> out(episodes);
    for (std::size_t e = 0; e < episodes; ++e) {
        double sum = 0.0;
        for (const auto& r : returns) sum += r[e];
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& r : returns) ss += (r[e] - mean) * (r[e] - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        out[e].episode = e;
        out[e].mean = mean;
        out[e].ci = 1.96 * sd / std::sqrt(n);
    }
    for (std::size_t e = 0; e < episodes; ++e) {
        const std::size_t lo = e + 1 >= window ? e + 1 - window : 0;
        double m = 0.0, c = 0.0;
        for (std::size_t k = lo; k <= e; ++k) {
            m += out[k].mean;
            c += out[k].ci;
        }
        const auto w = static_cast<double>(e - lo + 1);
        out[e].smoothed_mean = m / w;
        out[e].smoothed_ci = c / w;
    }
    return out;
}

inline std::vector<std::vector<double>> returns_by_run(const AgentResult& r) {
    std::vector<std::vector<double>> out;
    for (const auto& run : r.runs) {
        std::vector<double> v;
        for (const auto& row : run.rows) v.push_back(row.discounted_return);
        out.push_back(std::move(v));
    }
    return out;
}

// ------------------------------------------------------------ output

inline void write_runs_csv(std::ostream& os, const AgentResult& r) {
    os << "run,episode,return,ms,reinvigorated,topo_count\n";
    os << std::setprecision(12);
    for (const auto& run : r.runs)
        for (const auto& row : run.rows)
            os << row.run << ',' << row.episode << ',' << row.discounted_return << ',' << std::fixed
               << std::setprecision(3) << row.ms << std::defaultfloat << std::setprecision(12) << ','
               << (row.reinvigorated ? 1 : 0) << ',' << row.topo_count << '\n';
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "episode,mean,ci_low,ci_high,smoothed_mean,smoothed_ci_low,smoothed_ci_high\n";
    os << std::setprecision(12);
    for (const auto& s : rows)
        os << s.episode << ',' << s.mean << ',' << s.mean - s.ci << ',' << s.mean + s.ci << ',' << s.smoothed_mean
           << ',' << s.smoothed_mean - s.smoothed_ci << ',' << s.smoothed_mean + s.smoothed_ci << '\n';
}

/// Self-contained SVG: one line per agent over its smoothed mean, with a
/// shaded band for the smoothed 95% interval.
inline void write_svg(std::ostream& os, const std::vector<std::pair<std::string, std::vector<SummaryRow>>>& series,
                      const std::string& title) {
    const double W = 800, H = 480, L = 70, R = 170, T = 40, B = 50;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t episodes = 1;
    for (const auto& [name, rows] : series) {
        episodes = std::max(episodes, rows.size());
        for (const auto& s : rows) {
            lo = std::min(lo, s.smoothed_mean - s.smoothed_ci);
            hi = std::max(hi, s.smoothed_mean + s.smoothed_ci);
        }
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-9) lo -= 1.0, hi += 1.0;
    auto px = [&](double e) { return L + (W - L - R) * (episodes > 1 ? e / static_cast<double>(episodes - 1) : 0.5); };
    auto py = [&](double v) { return T + (H - T - B) * (1.0 - (v - lo) / (hi - lo)); };
    static const char* colors[] = {"#e67e22", "#2e6fd6", "#d62e2e", "#2ca02c", "#7f3fbf", "#555555"};

    os << std::fixed << std::setprecision(2);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << title << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << v << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">episode (0.." << episodes - 1
       << ")</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& [name, rows] = series[i];
        const char* color = colors[i % 6];
        if (rows.empty()) continue;
        os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (const auto& s : rows) os << px(static_cast<double>(s.episode)) << ',' << py(s.smoothed_mean + s.smoothed_ci) << ' ';
        for (auto it = rows.rbegin(); it != rows.rend(); ++it)
            os << px(static_cast<double>(it->episode)) << ',' << py(it->smoothed_mean - it->smoothed_ci) << ' ';
        os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& s : rows) os << px(static_cast<double>(s.episode)) << ',' << py(s.smoothed_mean) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 18 * (i + 1) << "\" fill=\"" << color
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << name << "</text>\n";
    }
    os << "</svg>\n";
    os << std::defaultfloat;
}

/// Writes <agent>.csv, <agent>_summary.csv (when runs >= 2) and returns.svg.
inline void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                          const std::vector<AgentResult>& results) {
    std::filesystem::create_directories(dir);
    std::vector<std::pair<std::string, std::vector<SummaryRow>>> series;
    for (const auto& r : results) {
        std::ofstream csv(dir / (r.id + ".csv"));
        write_runs_csv(csv, r);
        if (r.runs.size() >= 2) {
            auto rows = summarize(returns_by_run(r), c.window);
            std::ofstream sum(dir / (r.id + "_summary.csv"));
            write_summary_csv(sum, rows);
            series.emplace_back(r.id, std::move(rows));
        }
    }
    if (!series.empty()) {
        std::ofstream svg(dir / "returns.svg");
        write_svg(svg, series, c.domain + ": average discounted return");
    }
}

}  // namespace fbapomdp
