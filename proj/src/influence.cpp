#include "tsc/influence.hpp"

#include <algorithm>
#include <cmath>

#include "tsc/errors.hpp"
#include "tsc/rng.hpp"

namespace tsc {

InfluenceModule::InfluenceModule(JointEhhModel model, std::size_t n_agents,
                                 std::size_t obs_width)
    : model_(std::move(model)), n_agents_(n_agents), obs_width_(obs_width) {
    if (model_.transform.cols() != n_agents_ * obs_width_) {
        throw ShapeError("influence: transform columns != concatenated observation width");
    }
}

AnovaReport InfluenceModule::anova(const std::vector<Vec>& concat_obs_batch) const {
    ++anova_calls_;
    std::vector<Vec> inputs;
    inputs.reserve(concat_obs_batch.size());
    for (const auto& o : concat_obs_batch) inputs.push_back(model_.to_ehh_input(o));
    return anova_decompose(model_.ehh, inputs);
}

InverseImportance InfluenceModule::input_importances(
    const std::vector<Vec>& concat_obs_batch) const {
    const AnovaReport report = anova(concat_obs_batch);
    return importance_inverse(model_.transform, report.combined());
}

InfluenceModule::Weights InfluenceModule::influence_weights(
    const std::vector<Vec>& concat_obs_batch) const {
    Weights result;
    result.w.assign(n_agents_, 1.0 / static_cast<double>(n_agents_));

    const AnovaReport report = anova(concat_obs_batch);
    const Vec sigma_m = report.combined();
    double sig_total = 0.0;
    for (double s : sigma_m) sig_total += s;
    if (sig_total <= 0.0) {
        result.fallback_uniform = true;
        return result;
    }

    const InverseImportance inv = importance_inverse(model_.transform, sigma_m);
    result.clamped = inv.clamped_count;

    Vec scores(n_agents_, 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < n_agents_; ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j < obs_width_; ++j)
            acc += inv.sigma_in[a * obs_width_ + j];
        scores[a] = acc / static_cast<double>(obs_width_);
        total += scores[a];
    }
    if (total <= 0.0) {
        result.fallback_uniform = true;
        return result;
    }
    for (std::size_t a = 0; a < n_agents_; ++a) result.w[a] = scores[a] / total;
    return result;
}

nlohmann::json InfluenceModule::to_json() const {
    nlohmann::json j = model_.to_json();
    j["n_agents"] = n_agents_;
    j["obs_width"] = obs_width_;
    return j;
}

InfluenceModule InfluenceModule::from_json(const nlohmann::json& j) {
    return InfluenceModule(JointEhhModel::from_json(j),
                           j.at("n_agents").get<std::size_t>(),
                           j.at("obs_width").get<std::size_t>());
}

InfluenceModule pretrain_ehh(TrafficEnv& env, const PretrainOptions& opts,
                             std::uint64_t seed, PretrainReport* report) {
    // Random-policy rollouts: predict every agent's next-step queue total
    // from the current concatenated observations.
    std::vector<Vec> xs, ys;
    for (std::size_t ep = 0; ep < opts.episodes; ++ep) {
        Rng action_rng(derive_seed(seed, "pretrain-actions", ep));
        env.reset(derive_seed(seed, "pretrain-demand", ep));
        std::vector<Vec> obs = env.observe();
        for (long k = 0; k < env.steps_per_episode(); ++k) {
            std::vector<int> actions(env.n_agents());
            for (auto& a : actions) a = static_cast<int>(action_rng.uniform_index(4));
            Vec concat;
            for (const auto& o : obs) concat.insert(concat.end(), o.begin(), o.end());
            env.step(actions);
            Vec target(env.n_agents());
            for (std::size_t a = 0; a < env.n_agents(); ++a)
                target[a] = static_cast<double>(env.queue_length(a));
            xs.push_back(std::move(concat));
            ys.push_back(std::move(target));
            obs = env.observe();
            if (xs.size() >= opts.max_samples) break;
        }
        if (xs.size() >= opts.max_samples) break;
    }
    if (xs.size() < 32) {
        throw DataError("pretrain: insufficient data (" + std::to_string(xs.size()) +
                        " steps, need >= 32)");
    }

    const std::size_t n_val = xs.size() / 5;  // chronological holdout
    const std::size_t n_train = xs.size() - n_val;

    JointFitOptions fit_opts;
    fit_opts.ehh_input_dim = opts.ehh_input_dim;
    fit_opts.min_node_cap = opts.min_node_cap;
    fit_opts.l1_penalty = opts.l1_penalty;
    fit_opts.iters = opts.iters;
    fit_opts.learning_rate = opts.learning_rate;

    JointFitReport fit_report;
    JointEhhModel model =
        joint_ehh_fit(xs, ys, n_train, n_val, fit_opts, seed, &fit_report);
    if (report) {
        report->samples = xs.size();
        report->train_mse = fit_report.train_mse;
        report->train_r2 = fit_report.train_r2;
        report->val_r2 = fit_report.val_r2;
    }
    return InfluenceModule(std::move(model), env.n_agents(), env.observation_width());
}

}  // namespace tsc
