#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "tsc/demand.hpp"
#include "tsc/sim_metrics.hpp"
#include "tsc/simulator.hpp"
#include "tsc/tensor.hpp"
#include "tsc/traffic_graph.hpp"

namespace tsc {

struct RewardParams {
    double kappa1 = 25.0;  // extra reward when the intersection is clear
    double kappa2 = 5.0;   // scales the waiting-time penalty
    double kappa3 = 5.0;   // scales the queue-change reward
};

struct EnvConfig {
    SimConfig sim;
    RewardParams reward;
    double episode_seconds = 2500.0;
    bool tcv_reward = false;             // ablation: r = Q(k-1) - Q(k)
    std::vector<double> demand_rates;    // per source; empty = graph defaults
};

// r = kappa1 when the queue is empty; -W/kappa2 when the queue grew;
// -kappa3 * dQ otherwise. The empty-queue branch is checked first.
double reward_value(int queue_now, int queue_prev, double step_wait,
                    const RewardParams& p);

Vec global_reward_terms_sum(const Vec& per_agent);

struct Transition {
    Vec obs;
    int action = 0;
    double reward = 0.0;
    Vec next_obs;
};

struct EpisodeResult {
    EpisodeTrace trace;
    std::vector<std::vector<Transition>> transitions;  // [agent][step]
    Vec global_rewards;                                // per step
    double global_reward_total = 0.0;
    bool aborted = false;
};

using PolicyFn = std::function<std::vector<int>(const std::vector<Vec>&)>;

// Partially observed wrapper: each agent sees its phase one-hot plus queue
// and density per incoming edge, zero-padded to the network's max in-degree.
class TrafficEnv {
public:
    TrafficEnv(const TrafficGraph& graph, EnvConfig cfg);

    std::size_t n_agents() const { return graph_.intersection_count(); }
    std::size_t observation_width() const { return obs_width_; }
    long steps_per_episode() const { return steps_per_episode_; }
    const TrafficGraph& graph() const { return graph_; }
    const Simulator& sim() const { return sim_; }
    const EnvConfig& config() const { return cfg_; }

    void reset(std::uint64_t seed);
    std::vector<Vec> observe() const;

    // Applies stage requests, advances one step, returns per-agent rewards.
    Vec step(const std::vector<int>& actions);
    bool done() const { return sim_.clock_step() >= steps_per_episode_; }

    int queue_length(std::size_t agent) const { return sim_.queue_length(agent); }
    int prev_queue_length(std::size_t agent) const { return prev_queue_[agent]; }

private:
    TrafficGraph graph_;
    EnvConfig cfg_;
    RoutePlanner planner_;
    Simulator sim_;
    std::size_t obs_width_ = 0;
    long steps_per_episode_ = 0;
    std::vector<int> prev_queue_;
};

// Runs exactly T/dt decision steps; a policy exception aborts the episode
// and marks the partial trace. `record_densities` adds the per-edge CSV rows.
EpisodeResult run_episode(TrafficEnv& env, const PolicyFn& policy, std::uint64_t seed,
                          bool record_densities = false);

}  // namespace tsc
