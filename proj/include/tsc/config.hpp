#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsc/env.hpp"
#include "tsc/forecast.hpp"
#include "tsc/influence.hpp"
#include "tsc/trainer.hpp"

namespace tsc {

struct ForecastSection {
    std::string data = "synthetic";  // csv path or "synthetic"
    std::size_t synthetic_nodes = 15;
    std::size_t synthetic_length = 2000;
    std::vector<std::size_t> horizons = {3, 6, 9};
    std::size_t window = 12;
    std::size_t ehh_input_dim = 12;
    std::int64_t min_node_cap = 128;
    double l1_penalty = 1e-4;
    std::size_t iters = 600;
    double learning_rate = 0.01;
};

// Declarative experiment description. Defaults follow the reference
// hyperparameter table and simulation settings; unknown keys are errors.
struct RunConfig {
    std::string network = "grid5x5";  // preset name or topology file path

    // MDP / simulation
    double kappa1 = 25.0;
    double kappa2 = 5.0;
    double kappa3 = 5.0;
    double dt_seconds = 5.0;
    double episode_seconds = 2500.0;
    double yellow_seconds = 2.0;
    double min_green_seconds = 5.0;
    double max_green_seconds = 50.0;
    double saturation_flow = 0.5;
    double vehicle_gap_m = 7.5;
    bool tcv_reward = false;
    std::vector<double> demand_rates;  // per source; empty = preset defaults
    double demand_scale = 1.0;

    // trainer
    double gamma = 0.99;
    double l1_penalty = 1e-4;
    double clip_epsilon = 0.2;
    std::size_t batch_size = 32;
    std::size_t episodes = 100;
    double critic_lr = 0.01;
    double actor_lr = 0.001;
    std::size_t embed_width = 16;
    std::size_t hidden_width = 64;
    bool normalize_advantages = true;

    // pretraining
    std::size_t pretrain_episodes = 5;
    std::size_t ehh_input_dim = 8;
    std::int64_t ehh_min_node_cap = 64;
    std::size_t pretrain_iters = 400;
    double pretrain_lr = 0.01;

    // baselines / evaluation
    double fixed_green_seconds = 25.0;
    std::size_t eval_episodes = 5;

    ForecastSection forecast;

    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int workers = 1;

    TrafficGraph load_graph() const;
    EnvConfig env_config() const;
    TrainerConfig trainer_config() const;
    PretrainOptions pretrain_options() const;
    ForecastOptions forecast_options() const;
};

// Strict parser: any unknown key is a ConfigError naming the field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace tsc
