#include "tsc/config.hpp"

#include <fstream>
#include <set>

#include "tsc/errors.hpp"

namespace tsc {

namespace {

void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("config: unknown field '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& into) {
    if (obj.contains(key)) into = obj.at(key).get<T>();
}

}  // namespace

RunConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
    check_keys(doc,
               {"network", "mdp", "trainer", "pretrain", "fixed_time", "forecast",
                "seed", "out_dir", "workers", "eval_episodes"},
               "top level");
    RunConfig cfg;
    read(doc, "network", cfg.network);
    read(doc, "seed", cfg.seed);
    read(doc, "out_dir", cfg.out_dir);
    read(doc, "workers", cfg.workers);
    read(doc, "eval_episodes", cfg.eval_episodes);

    if (doc.contains("mdp")) {
        const auto& m = doc.at("mdp");
        check_keys(m,
                   {"kappa1", "kappa2", "kappa3", "dt_seconds", "episode_seconds",
                    "yellow_seconds", "min_green_seconds", "max_green_seconds",
                    "saturation_flow", "vehicle_gap_m", "tcv_reward", "demand_rates",
                    "demand_scale"},
                   "mdp");
        read(m, "kappa1", cfg.kappa1);
        read(m, "kappa2", cfg.kappa2);
        read(m, "kappa3", cfg.kappa3);
        read(m, "dt_seconds", cfg.dt_seconds);
        read(m, "episode_seconds", cfg.episode_seconds);
        read(m, "yellow_seconds", cfg.yellow_seconds);
        read(m, "min_green_seconds", cfg.min_green_seconds);
        read(m, "max_green_seconds", cfg.max_green_seconds);
        read(m, "saturation_flow", cfg.saturation_flow);
        read(m, "vehicle_gap_m", cfg.vehicle_gap_m);
        read(m, "tcv_reward", cfg.tcv_reward);
        read(m, "demand_rates", cfg.demand_rates);
        read(m, "demand_scale", cfg.demand_scale);
    }
    if (doc.contains("trainer")) {
        const auto& t = doc.at("trainer");
        check_keys(t,
                   {"gamma", "l1_penalty", "clip_epsilon", "batch_size", "episodes",
                    "critic_lr", "actor_lr", "embed_width", "hidden_width",
                    "normalize_advantages"},
                   "trainer");
        read(t, "gamma", cfg.gamma);
        read(t, "l1_penalty", cfg.l1_penalty);
        read(t, "clip_epsilon", cfg.clip_epsilon);
        read(t, "batch_size", cfg.batch_size);
        read(t, "episodes", cfg.episodes);
        read(t, "critic_lr", cfg.critic_lr);
        read(t, "actor_lr", cfg.actor_lr);
        read(t, "embed_width", cfg.embed_width);
        read(t, "hidden_width", cfg.hidden_width);
        read(t, "normalize_advantages", cfg.normalize_advantages);
    }
    if (doc.contains("pretrain")) {
        const auto& p = doc.at("pretrain");
        check_keys(p, {"episodes", "ehh_input_dim", "min_node_cap", "iters", "lr"},
                   "pretrain");
        read(p, "episodes", cfg.pretrain_episodes);
        read(p, "ehh_input_dim", cfg.ehh_input_dim);
        read(p, "min_node_cap", cfg.ehh_min_node_cap);
        read(p, "iters", cfg.pretrain_iters);
        read(p, "lr", cfg.pretrain_lr);
    }
    if (doc.contains("fixed_time")) {
        const auto& f = doc.at("fixed_time");
        check_keys(f, {"green_seconds"}, "fixed_time");
        read(f, "green_seconds", cfg.fixed_green_seconds);
    }
    if (doc.contains("forecast")) {
        const auto& f = doc.at("forecast");
        check_keys(f,
                   {"data", "synthetic_nodes", "synthetic_length", "horizons",
                    "window", "ehh_input_dim", "min_node_cap", "l1_penalty", "iters",
                    "lr"},
                   "forecast");
        read(f, "data", cfg.forecast.data);
        read(f, "synthetic_nodes", cfg.forecast.synthetic_nodes);
        read(f, "synthetic_length", cfg.forecast.synthetic_length);
        read(f, "horizons", cfg.forecast.horizons);
        read(f, "window", cfg.forecast.window);
        read(f, "ehh_input_dim", cfg.forecast.ehh_input_dim);
        read(f, "min_node_cap", cfg.forecast.min_node_cap);
        read(f, "l1_penalty", cfg.forecast.l1_penalty);
        read(f, "iters", cfg.forecast.iters);
        read(f, "lr", cfg.forecast.learning_rate);
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: invalid JSON in '" + path + "': " + e.what());
    }
    // A manifest written by a previous run embeds the resolved config.
    if (doc.is_object() && doc.contains("config") && doc.contains("command")) {
        return parse_config(doc.at("config"));
    }
    return parse_config(doc);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    return nlohmann::json{
        {"network", cfg.network},
        {"seed", cfg.seed},
        {"out_dir", cfg.out_dir},
        {"workers", cfg.workers},
        {"eval_episodes", cfg.eval_episodes},
        {"mdp",
         {{"kappa1", cfg.kappa1},
          {"kappa2", cfg.kappa2},
          {"kappa3", cfg.kappa3},
          {"dt_seconds", cfg.dt_seconds},
          {"episode_seconds", cfg.episode_seconds},
          {"yellow_seconds", cfg.yellow_seconds},
          {"min_green_seconds", cfg.min_green_seconds},
          {"max_green_seconds", cfg.max_green_seconds},
          {"saturation_flow", cfg.saturation_flow},
          {"vehicle_gap_m", cfg.vehicle_gap_m},
          {"tcv_reward", cfg.tcv_reward},
          {"demand_rates", cfg.demand_rates},
          {"demand_scale", cfg.demand_scale}}},
        {"trainer",
         {{"gamma", cfg.gamma},
          {"l1_penalty", cfg.l1_penalty},
          {"clip_epsilon", cfg.clip_epsilon},
          {"batch_size", cfg.batch_size},
          {"episodes", cfg.episodes},
          {"critic_lr", cfg.critic_lr},
          {"actor_lr", cfg.actor_lr},
          {"embed_width", cfg.embed_width},
          {"hidden_width", cfg.hidden_width},
          {"normalize_advantages", cfg.normalize_advantages}}},
        {"pretrain",
         {{"episodes", cfg.pretrain_episodes},
          {"ehh_input_dim", cfg.ehh_input_dim},
          {"min_node_cap", cfg.ehh_min_node_cap},
          {"iters", cfg.pretrain_iters},
          {"lr", cfg.pretrain_lr}}},
        {"fixed_time", {{"green_seconds", cfg.fixed_green_seconds}}},
        {"forecast",
         {{"data", cfg.forecast.data},
          {"synthetic_nodes", cfg.forecast.synthetic_nodes},
          {"synthetic_length", cfg.forecast.synthetic_length},
          {"horizons", cfg.forecast.horizons},
          {"window", cfg.forecast.window},
          {"ehh_input_dim", cfg.forecast.ehh_input_dim},
          {"min_node_cap", cfg.forecast.min_node_cap},
          {"l1_penalty", cfg.forecast.l1_penalty},
          {"iters", cfg.forecast.iters},
          {"lr", cfg.forecast.learning_rate}}}};
}

TrafficGraph RunConfig::load_graph() const {
    TrafficGraph g;
    if (is_preset_name(network)) {
        g = load_preset(network);
    } else {
        std::ifstream in(network);
        if (!in) throw ConfigError("config: cannot open topology '" + network + "'");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("topology: invalid JSON in '" + network + "': " +
                                  e.what());
        }
        g = load_network(doc);
    }
    return g;
}

EnvConfig RunConfig::env_config() const {
    EnvConfig ec;
    ec.sim.dt_seconds = dt_seconds;
    ec.sim.saturation_flow = saturation_flow;
    ec.sim.vehicle_gap_m = vehicle_gap_m;
    ec.sim.yellow_seconds = yellow_seconds;
    ec.sim.min_green_seconds = min_green_seconds;
    ec.sim.max_green_seconds = max_green_seconds;
    ec.reward = {kappa1, kappa2, kappa3};
    ec.episode_seconds = episode_seconds;
    ec.tcv_reward = tcv_reward;
    ec.demand_rates = demand_rates;
    return ec;
}

TrainerConfig RunConfig::trainer_config() const {
    TrainerConfig tc;
    tc.gamma = gamma;
    tc.l1_penalty = l1_penalty;
    tc.clip_epsilon = clip_epsilon;
    tc.batch_size = batch_size;
    tc.episodes = episodes;
    tc.critic_lr = critic_lr;
    tc.actor_lr = actor_lr;
    tc.seed = seed;
    tc.embed_width = embed_width;
    tc.hidden_width = hidden_width;
    tc.normalize_advantages = normalize_advantages;
    return tc;
}

PretrainOptions RunConfig::pretrain_options() const {
    PretrainOptions po;
    po.ehh_input_dim = ehh_input_dim;
    po.min_node_cap = ehh_min_node_cap;
    po.l1_penalty = l1_penalty;
    po.iters = pretrain_iters;
    po.learning_rate = pretrain_lr;
    po.episodes = pretrain_episodes;
    return po;
}

ForecastOptions RunConfig::forecast_options() const {
    ForecastOptions fo;
    fo.ehh_input_dim = forecast.ehh_input_dim;
    fo.min_node_cap = forecast.min_node_cap;
    fo.l1_penalty = forecast.l1_penalty;
    fo.iters = forecast.iters;
    fo.learning_rate = forecast.learning_rate;
    fo.seed = seed;
    return fo;
}

}  // namespace tsc
