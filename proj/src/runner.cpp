#include "tsc/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>

#include "tsc/baselines.hpp"
#include "tsc/csv.hpp"
#include "tsc/errors.hpp"
#include "tsc/forecast.hpp"
#include "tsc/svg_plot.hpp"

namespace tsc {

namespace fs = std::filesystem;

std::string version_string() { return "tsc 0.1.0"; }

namespace {

void write_json(const std::string& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs) {
    nlohmann::json manifest{{"command", command},
                            {"version", version_string()},
                            {"seed", cfg.seed},
                            {"config", config_to_json(cfg)},
                            {"outputs", outputs}};
    write_json(cfg.out_dir + "/manifest.json", manifest);
    write_json(cfg.out_dir + "/config_resolved.json", config_to_json(cfg));
}

nlohmann::json metrics_json(const ForecastMetrics& m) {
    nlohmann::json j{{"MAE", m.mae}, {"RMSE", m.rmse}};
    if (m.r2_defined) {
        j["R2"] = m.r2;
    } else {
        j["R2"] = nullptr;
        j["R2_undefined"] = true;
    }
    return j;
}

std::vector<double> scaled_rates(const TrafficGraph& graph, const RunConfig& cfg) {
    std::vector<double> rates = cfg.demand_rates;
    if (rates.empty()) {
        for (const auto& src : graph.sources()) rates.push_back(src.rate_veh_per_s);
    }
    for (double& r : rates) r *= cfg.demand_scale;
    return rates;
}

}  // namespace

int cmd_pretrain(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const TrafficGraph graph = cfg.load_graph();
    EnvConfig ec = cfg.env_config();
    ec.demand_rates = scaled_rates(graph, cfg);
    TrafficEnv env(graph, ec);

    PretrainReport report;
    const InfluenceModule module =
        pretrain_ehh(env, cfg.pretrain_options(), cfg.seed, &report);

    const std::string ckpt = cfg.out_dir + "/pretrain_checkpoint.json";
    write_json(ckpt, module.to_json());
    write_json(cfg.out_dir + "/pretrain_report.json",
               {{"samples", report.samples},
                {"train_mse", report.train_mse},
                {"train_r2", report.train_r2},
                {"val_r2", std::isnan(report.val_r2) ? nlohmann::json(nullptr)
                                                     : nlohmann::json(report.val_r2)}});
    write_manifest(cfg, "pretrain", {ckpt, cfg.out_dir + "/pretrain_report.json"});
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& method,
              std::string pretrained_path) {
    if (method != "ours" && method != "ippo" && method != "fixed") {
        throw ConfigError("train: unknown method '" + method +
                          "' (expected ours, ippo or fixed)");
    }
    fs::create_directories(cfg.out_dir);
    const TrafficGraph graph = cfg.load_graph();
    EnvConfig ec = cfg.env_config();
    ec.demand_rates = scaled_rates(graph, cfg);

    std::vector<EpisodeStats> curve;
    const std::string curve_path = cfg.out_dir + "/curve_" + method + ".csv";
    const std::string ckpt_path = cfg.out_dir + "/checkpoint_" + method + ".json";
    std::vector<std::string> outputs{curve_path};

    if (method == "fixed") {
        // No learning: one evaluation pass per episode with the fixed program.
        TrafficEnv env(graph, ec);
        const PolicyFn policy =
            fixed_time_policy(env, FixedTimeProgram{cfg.fixed_green_seconds});
        for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
            const EpisodeResult episode =
                run_episode(env, policy, derive_seed(cfg.seed, "demand", ep));
            const SimMetrics m = compute_metrics(episode.trace);
            curve.push_back({ep, episode.global_reward_total, m.ave, m.sta, 0.0, 0.0});
        }
    } else if (method == "ippo") {
        MarlTrainer trainer(graph, cfg.trainer_config(), ec);
        curve = trainer.train().curve;
        write_json(ckpt_path, {{"method", method},
                               {"bundle", trainer.bundle().to_json()},
                               {"network", cfg.network}});
        outputs.push_back(ckpt_path);
    } else {
        if (pretrained_path.empty()) {
            pretrained_path = cfg.out_dir + "/pretrain_checkpoint.json";
        }
        if (!fs::exists(pretrained_path)) {
            throw ConfigError("train: pretrained EHH checkpoint not found at '" +
                              pretrained_path +
                              "'; run `tsc pretrain` first or pass --pretrained");
        }
        InfluenceModule influence = InfluenceModule::from_json(load_json(pretrained_path));
        MarlTrainer trainer(graph, cfg.trainer_config(), ec, std::move(influence));
        curve = trainer.train().curve;
        write_json(ckpt_path, {{"method", method},
                               {"bundle", trainer.bundle().to_json()},
                               {"influence", trainer.influence()->to_json()},
                               {"network", cfg.network}});
        outputs.push_back(ckpt_path);
    }

    write_curve_csv(curve_path, curve);
    write_manifest(cfg, "train", outputs);
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path) {
    fs::create_directories(cfg.out_dir);
    const TrafficGraph graph = cfg.load_graph();
    EnvConfig ec = cfg.env_config();
    ec.demand_rates = scaled_rates(graph, cfg);
    TrafficEnv env(graph, ec);

    PolicyFn policy;
    std::optional<PolicyBundle> bundle;
    std::string method = "fixed";
    if (checkpoint_path.empty()) {
        policy = fixed_time_policy(env, FixedTimeProgram{cfg.fixed_green_seconds});
    } else {
        const nlohmann::json j = load_json(checkpoint_path);
        method = j.at("method").get<std::string>();
        bundle.emplace(PolicyBundle::from_json(graph, j.at("bundle")));
        policy = greedy_policy_for(*bundle);
    }

    const EvalResult result =
        evaluate_policy(env, policy, cfg.eval_episodes, cfg.seed);
    nlohmann::json episodes = nlohmann::json::array();
    for (const auto& ep : result.episodes) {
        episodes.push_back({{"seed", ep.seed},
                            {"global_reward", ep.global_reward},
                            {"AVE", ep.metrics.ave},
                            {"STA", ep.metrics.sta}});
    }
    const nlohmann::json out{{"method", method},
                             {"episodes", episodes},
                             {"AVE", result.mean_ave},
                             {"AVE_variance", result.var_ave},
                             {"STA", result.mean_sta},
                             {"mean_global_reward", result.mean_global_reward}};
    const std::string path = cfg.out_dir + "/eval_metrics.json";
    write_json(path, out);
    write_manifest(cfg, "eval", {path});
    return 0;
}

int cmd_forecast(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    SeriesDataset ds;
    if (cfg.forecast.data == "synthetic") {
        ds = synthetic_series(cfg.forecast.synthetic_nodes,
                              cfg.forecast.synthetic_length, cfg.seed);
    } else {
        ds = ingest_csv(cfg.forecast.data);
    }
    ds.window = cfg.forecast.window;

    auto run_one = [&](std::size_t horizon) {
        return forecast_run(ds, horizon, cfg.forecast_options());
    };

    std::vector<ForecastRun> runs;
    if (cfg.workers > 1 && cfg.forecast.horizons.size() > 1) {
        std::vector<std::future<ForecastRun>> futures;
        for (std::size_t h : cfg.forecast.horizons) {
            futures.push_back(std::async(std::launch::async, run_one, h));
        }
        for (auto& f : futures) runs.push_back(f.get());
    } else {
        for (std::size_t h : cfg.forecast.horizons) runs.push_back(run_one(h));
    }

    std::vector<std::string> outputs;
    for (const auto& run : runs) {
        const std::string tag = std::to_string(run.horizon);
        const std::string mpath = cfg.out_dir + "/forecast_metrics_h" + tag + ".json";
        nlohmann::json j{{"horizon", run.horizon},
                         {"params", run.params},
                         {"neurons", run.neurons},
                         {"persistence", metrics_json(run.persistence)}};
        j.update(metrics_json(run.test));
        write_json(mpath, j);
        const std::string apath = cfg.out_dir + "/forecast_anova_h" + tag + ".csv";
        write_anova_csv(apath, run.anova, run.sigma_in, run.input_labels);
        outputs.push_back(mpath);
        outputs.push_back(apath);
    }
    write_manifest(cfg, "forecast", outputs);
    return 0;
}

int cmd_anova(const RunConfig& cfg, const std::string& checkpoint_path) {
    if (checkpoint_path.empty()) {
        throw ConfigError("anova: --checkpoint is required");
    }
    fs::create_directories(cfg.out_dir);
    const TrafficGraph graph = cfg.load_graph();
    EnvConfig ec = cfg.env_config();
    ec.demand_rates = scaled_rates(graph, cfg);
    TrafficEnv env(graph, ec);

    const InfluenceModule module = InfluenceModule::from_json(load_json(checkpoint_path));

    // One seeded random-policy episode supplies the sample batch.
    Rng rng(derive_seed(cfg.seed, "anova-actions"));
    std::vector<Vec> batch;
    env.reset(derive_seed(cfg.seed, "anova-demand"));
    std::vector<Vec> obs = env.observe();
    for (long k = 0; k < env.steps_per_episode(); ++k) {
        Vec concat;
        for (const auto& o : obs) concat.insert(concat.end(), o.begin(), o.end());
        batch.push_back(std::move(concat));
        std::vector<int> actions(env.n_agents());
        for (auto& a : actions) a = static_cast<int>(rng.uniform_index(4));
        env.step(actions);
        obs = env.observe();
    }

    const AnovaReport report = module.anova(batch);
    const InverseImportance inv = importance_inverse(module.model().transform,
                                                     report.combined());
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < module.n_agents(); ++a) {
        const std::string id = graph.nodes()[graph.intersections()[a]].id;
        for (std::size_t j = 0; j < module.obs_width(); ++j) {
            labels.push_back(id + ".obs" + std::to_string(j));
        }
    }
    const std::string path = cfg.out_dir + "/anova_report.csv";
    write_anova_csv(path, report, inv.sigma_in, labels);
    write_manifest(cfg, "anova", {path});
    return 0;
}

int cmd_plot(const std::vector<std::string>& curve_csvs, const std::string& out_dir) {
    if (curve_csvs.empty()) throw ConfigError("plot: no curve files given");
    fs::create_directories(out_dir);

    struct Metric {
        const char* column;
        const char* title;
        const char* file;
    };
    const Metric metrics[] = {
        {"ave", "Waiting Time Comparison", "waiting_time.svg"},
        {"global_reward", "Reward Comparison", "reward.svg"},
        {"sta", "Flow Stability Comparison", "flow_stability.svg"},
    };

    for (const auto& metric : metrics) {
        std::vector<PlotSeries> series;
        for (const auto& path : curve_csvs) {
            const CsvTable table = read_csv_table(path);
            const std::size_t xc = table.column("episode");
            const std::size_t yc = table.column(metric.column);
            PlotSeries s;
            s.label = fs::path(path).stem().string();
            for (const auto& row : table.rows) {
                s.points.push_back({row.at(xc), row.at(yc)});
            }
            if (s.points.empty()) throw DataError("plot: empty curve file " + path);
            series.push_back(std::move(s));
        }
        write_text_file(out_dir + "/" + metric.file,
                        render_line_chart(metric.title, "episode", metric.column,
                                          series));
    }
    return 0;
}

}  // namespace tsc
