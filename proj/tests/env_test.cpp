#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tsc/env.hpp"
#include "tsc/errors.hpp"
#include "tsc/rng.hpp"
#include "tsc/traffic_graph.hpp"

using namespace tsc;

namespace {

EnvConfig quiet_config() {
    EnvConfig ec;
    ec.demand_rates = {};  // graph defaults
    return ec;
}

EnvConfig zero_demand(const TrafficGraph& g) {
    EnvConfig ec;
    ec.demand_rates.assign(g.sources().size(), 0.0);
    return ec;
}

}  // namespace

TEST_CASE("reward branch table") {
    const RewardParams p;  // 25, 5, 5
    CHECK(reward_value(0, 3, 10.0, p) == 25.0);   // empty queue wins
    CHECK(reward_value(0, 0, 0.0, p) == 25.0);
    CHECK(reward_value(5, 3, 10.0, p) == -2.0);   // dQ=+2: -W/kappa2
    CHECK(reward_value(2, 5, 10.0, p) == 15.0);   // dQ=-3: -kappa3*dQ
    CHECK(reward_value(4, 4, 10.0, p) == 0.0);    // dQ=0 with Q>0
}

TEST_CASE("reward branch enumeration against hand-computed values") {
    const RewardParams p{25.0, 5.0, 5.0};
    struct Case {
        int q_now, q_prev;
        double wait, expected;
    };
    const Case cases[] = {
        {0, 0, 0.0, 25.0},  {0, 7, 55.0, 25.0}, {1, 0, 5.0, -1.0},
        {9, 2, 45.0, -9.0}, {3, 3, 15.0, 0.0},  {2, 6, 10.0, 20.0},
        {1, 2, 5.0, 5.0},
    };
    for (const auto& c : cases) {
        CHECK(reward_value(c.q_now, c.q_prev, c.wait, p) == c.expected);
    }
}

TEST_CASE("global reward is the plain sum and permutation invariant") {
    CHECK(global_reward_terms_sum({1.0, 2.0, 3.0})[0] == 6.0);
    CHECK(global_reward_terms_sum({0.0, 0.0})[0] == 0.0);
    CHECK(global_reward_terms_sum({3.0, 1.0, 2.0})[0] ==
          global_reward_terms_sum({1.0, 2.0, 3.0})[0]);
}

TEST_CASE("reward parameters must be positive") {
    const TrafficGraph g = load_preset("grid1x1");
    EnvConfig ec = quiet_config();
    ec.reward.kappa2 = 0.0;
    CHECK_THROWS_AS(TrafficEnv(g, ec), ConfigError);
}

TEST_CASE("observation layout and padding") {
    const TrafficGraph g = load_preset("non_euclidean8");
    TrafficEnv env(g, zero_demand(g));
    CHECK(env.observation_width() == 4 + 2 * 4);
    env.reset(1);
    const auto obs = env.observe();
    REQUIRE(obs.size() == 8);
    for (const auto& o : obs) {
        REQUIRE(o.size() == env.observation_width());
        double onehot = 0.0;
        for (int s = 0; s < 4; ++s) onehot += o[s];
        CHECK(onehot == 1.0);
        for (std::size_t j = 4; j < o.size(); ++j) CHECK(o[j] == 0.0);  // zero demand
    }
}

TEST_CASE("observation matches an independent assembly from simulator state") {
    const TrafficGraph g = load_preset("grid1x1");
    EnvConfig ec = quiet_config();
    ec.demand_rates.assign(g.sources().size(), 0.05);
    TrafficEnv env(g, ec);
    env.reset(3);
    Rng rng(9);
    for (int k = 0; k < 40; ++k) {
        std::vector<int> actions(env.n_agents());
        for (auto& a : actions) a = static_cast<int>(rng.uniform_index(4));
        env.step(actions);
        const auto obs = env.observe();
        const auto& node = g.nodes()[g.intersections()[0]];
        Vec expected(env.observation_width(), 0.0);
        expected[static_cast<std::size_t>(env.sim().phase(0).stage)] = 1.0;
        for (std::size_t j = 0; j < node.incoming.size(); ++j) {
            expected[4 + j] =
                static_cast<double>(env.sim().queued_on_edge(node.incoming[j]));
            expected[4 + g.max_in_degree() + j] = env.sim().density(node.incoming[j]);
        }
        CHECK(obs[0] == expected);
        for (std::size_t j = 4; j < obs[0].size(); ++j) {
            if (j >= 4 + g.max_in_degree() && j < 4 + g.max_in_degree()) continue;
            CHECK(obs[0][j] >= 0.0);
        }
    }
}

TEST_CASE("min green holds early switch requests") {
    const TrafficGraph g = load_preset("grid1x1");
    TrafficEnv env(g, zero_demand(g));
    env.reset(0);
    env.step({1});  // elapsed 0 < g_min: hold
    CHECK(env.sim().phase(0).stage == 0);
    CHECK(env.sim().phase_events().empty());
    env.step({1});  // elapsed 5 >= g_min: yellow, then the new green
    CHECK(env.sim().phase_events().size() == 1);
    CHECK(env.sim().phase(0).stage == 1);
}

TEST_CASE("holding the same stage adds no yellow until max green forces one") {
    const TrafficGraph g = load_preset("grid1x1");
    TrafficEnv env(g, zero_demand(g));
    env.reset(0);
    for (int k = 0; k < 9; ++k) env.step({0});  // 45 s of green, no events
    CHECK(env.sim().phase_events().empty());
    env.step({0});  // elapsed 45 + 5 > 50: forced switch to the next stage
    REQUIRE(env.sim().phase_events().size() == 1);
    CHECK(env.sim().phase_events()[0].to_stage == 1);
    CHECK(env.sim().phase_events()[0].green_dwell == doctest::Approx(45.0));
}

TEST_CASE("episode shape: 500 decision steps at the default horizon") {
    const TrafficGraph g = load_preset("grid1x2");
    TrafficEnv env(g, zero_demand(g));
    CHECK(env.steps_per_episode() == 500);
    const PolicyFn hold = [](const std::vector<Vec>& obs) {
        return std::vector<int>(obs.size(), 0);
    };
    const EpisodeResult episode = run_episode(env, hold, 5);
    CHECK(episode.transitions.size() == 2);
    for (const auto& per_agent : episode.transitions) {
        CHECK(per_agent.size() == 500);
    }
    CHECK(episode.trace.step_wait_totals.size() == 500);
    CHECK(!episode.aborted);
}

TEST_CASE("zero demand pays the clear-intersection reward everywhere") {
    const TrafficGraph g = load_preset("grid1x2");
    TrafficEnv env(g, zero_demand(g));
    Rng rng(17);
    const PolicyFn random_policy = [&](const std::vector<Vec>& obs) {
        std::vector<int> a(obs.size());
        for (auto& v : a) v = static_cast<int>(rng.uniform_index(4));
        return a;
    };
    const EpisodeResult episode = run_episode(env, random_policy, 2);
    const double expected = 2.0 * 25.0 * 500.0;  // N * kappa1 * steps
    CHECK(episode.global_reward_total == expected);
}

TEST_CASE("same seed and policy reproduce transitions bit-exactly") {
    const TrafficGraph g = load_preset("non_euclidean4");
    EnvConfig ec = quiet_config();
    TrafficEnv env(g, ec);
    auto run = [&]() {
        Rng rng(31);
        const PolicyFn policy = [&](const std::vector<Vec>& obs) {
            std::vector<int> a(obs.size());
            for (auto& v : a) v = static_cast<int>(rng.uniform_index(4));
            return a;
        };
        return run_episode(env, policy, 77);
    };
    const EpisodeResult a = run();
    const EpisodeResult b = run();
    REQUIRE(a.transitions.size() == b.transitions.size());
    for (std::size_t i = 0; i < a.transitions.size(); ++i) {
        REQUIRE(a.transitions[i].size() == b.transitions[i].size());
        for (std::size_t k = 0; k < a.transitions[i].size(); ++k) {
            CHECK(a.transitions[i][k].obs == b.transitions[i][k].obs);
            CHECK(a.transitions[i][k].action == b.transitions[i][k].action);
            CHECK(a.transitions[i][k].reward == b.transitions[i][k].reward);
            CHECK(a.transitions[i][k].next_obs == b.transitions[i][k].next_obs);
        }
    }
}

TEST_CASE("policy exceptions abort with a partial-trace marker") {
    const TrafficGraph g = load_preset("grid1x1");
    TrafficEnv env(g, zero_demand(g));
    int calls = 0;
    const PolicyFn faulty = [&](const std::vector<Vec>& obs) -> std::vector<int> {
        if (++calls > 10) throw std::runtime_error("policy crashed");
        return std::vector<int>(obs.size(), 0);
    };
    const EpisodeResult episode = run_episode(env, faulty, 1);
    CHECK(episode.aborted);
    CHECK(episode.trace.aborted);
    CHECK(episode.trace.step_wait_totals.size() == 10);
}

TEST_CASE("tcv reward ablation equals the negated queue change exactly") {
    const TrafficGraph g = load_preset("grid1x2");
    EnvConfig ec = quiet_config();
    ec.tcv_reward = true;
    TrafficEnv env(g, ec);
    env.reset(5);
    Rng rng(2);
    for (int k = 0; k < 200; ++k) {
        std::vector<int> actions(env.n_agents());
        for (auto& a : actions) a = static_cast<int>(rng.uniform_index(4));
        std::vector<int> q_before(env.n_agents());
        for (std::size_t i = 0; i < env.n_agents(); ++i)
            q_before[i] = env.queue_length(i);
        const Vec r = env.step(actions);
        for (std::size_t i = 0; i < env.n_agents(); ++i) {
            const int dq = env.queue_length(i) - q_before[i];
            CHECK(r[i] == static_cast<double>(-dq));
        }
    }
}

TEST_CASE("invalid actions raise an action error") {
    const TrafficGraph g = load_preset("grid1x1");
    TrafficEnv env(g, zero_demand(g));
    env.reset(0);
    CHECK_THROWS_AS(env.step({7}), ActionError);
}
