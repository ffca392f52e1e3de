#include "tsc/env.hpp"

#include <cmath>

#include "tsc/errors.hpp"

namespace tsc {

double reward_value(int queue_now, int queue_prev, double step_wait,
                    const RewardParams& p) {
    if (queue_now == 0) return p.kappa1;
    const int delta = queue_now - queue_prev;
    if (delta > 0) return -step_wait / p.kappa2;
    return -p.kappa3 * static_cast<double>(delta);
}

Vec global_reward_terms_sum(const Vec& per_agent) {
    double total = 0.0;
    for (double r : per_agent) total += r;
    return {total};
}

TrafficEnv::TrafficEnv(const TrafficGraph& graph, EnvConfig cfg)
    : graph_(graph), cfg_(cfg), planner_(graph_), sim_(graph_, cfg.sim) {
    if (!(cfg_.reward.kappa1 > 0.0) || !(cfg_.reward.kappa2 > 0.0) ||
        !(cfg_.reward.kappa3 > 0.0)) {
        throw ConfigError("reward parameters kappa1..kappa3 must be > 0");
    }
    obs_width_ = 4 + 2 * graph_.max_in_degree();
    steps_per_episode_ = static_cast<long>(
        std::llround(cfg_.episode_seconds / cfg_.sim.dt_seconds));
    prev_queue_.assign(n_agents(), 0);
}

void TrafficEnv::reset(std::uint64_t seed) {
    sim_.reset(generate_demand(graph_, planner_, cfg_.demand_rates, seed,
                               steps_per_episode_, cfg_.sim.dt_seconds));
    prev_queue_.assign(n_agents(), 0);
}

std::vector<Vec> TrafficEnv::observe() const {
    std::vector<Vec> obs(n_agents(), Vec(obs_width_, 0.0));
    for (std::size_t a = 0; a < n_agents(); ++a) {
        const auto& node = graph_.nodes()[graph_.intersections()[a]];
        Vec& o = obs[a];
        o[static_cast<std::size_t>(sim_.phase(a).stage)] = 1.0;
        const std::size_t q_base = 4;
        const std::size_t d_base = 4 + graph_.max_in_degree();
        for (std::size_t j = 0; j < node.incoming.size(); ++j) {
            o[q_base + j] = static_cast<double>(sim_.queued_on_edge(node.incoming[j]));
            o[d_base + j] = sim_.density(node.incoming[j]);
        }
    }
    return obs;
}

Vec TrafficEnv::step(const std::vector<int>& actions) {
    for (std::size_t a = 0; a < n_agents(); ++a) {
        prev_queue_[a] = sim_.queue_length(a);
    }
    sim_.request_stages(actions);
    sim_.step();
    Vec rewards(n_agents(), 0.0);
    for (std::size_t a = 0; a < n_agents(); ++a) {
        const int q_now = sim_.queue_length(a);
        if (cfg_.tcv_reward) {
            rewards[a] = static_cast<double>(prev_queue_[a] - q_now);
        } else {
            rewards[a] =
                reward_value(q_now, prev_queue_[a], sim_.step_waiting(a), cfg_.reward);
        }
    }
    return rewards;
}

EpisodeResult run_episode(TrafficEnv& env, const PolicyFn& policy, std::uint64_t seed,
                          bool record_densities) {
    env.reset(seed);
    EpisodeResult result;
    result.transitions.assign(env.n_agents(), {});
    result.trace.n_agents = env.n_agents();
    result.trace.dt_seconds = env.sim().dt();

    std::vector<Vec> obs = env.observe();
    for (long k = 0; k < env.steps_per_episode(); ++k) {
        std::vector<int> actions;
        try {
            actions = policy(obs);
        } catch (...) {
            result.aborted = true;
            result.trace.aborted = true;
            break;
        }
        const Vec rewards = env.step(actions);
        const std::vector<Vec> next_obs = env.observe();

        double global = 0.0;
        double wait_total = 0.0;
        for (std::size_t a = 0; a < env.n_agents(); ++a) {
            result.transitions[a].push_back(
                {obs[a], actions[a], rewards[a], next_obs[a]});
            global += rewards[a];
            const double w = env.sim().step_waiting(a);
            wait_total += w;
            result.trace.rows.push_back(
                {k, a, env.sim().phase(a).stage, env.sim().queue_length(a), w});
        }
        if (record_densities) {
            for (std::size_t e = 0; e < env.graph().edges().size(); ++e) {
                result.trace.densities.push_back(
                    {k, env.graph().edges()[e].id, env.sim().density(e)});
            }
        }
        result.global_rewards.push_back(global);
        result.global_reward_total += global;
        result.trace.step_wait_totals.push_back(wait_total);
        obs = next_obs;
    }
    return result;
}

}  // namespace tsc
