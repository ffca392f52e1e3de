#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "tsc/anova.hpp"
#include "tsc/ehh_fit.hpp"
#include "tsc/env.hpp"
#include "tsc/tensor.hpp"

namespace tsc {

struct PretrainOptions {
    std::size_t ehh_input_dim = 8;   // width after the linear transform
    std::int64_t min_node_cap = 64;  // order-2 candidate cap
    double l1_penalty = 1e-4;
    std::size_t iters = 400;
    double learning_rate = 0.01;
    std::size_t max_samples = 4000;
    std::size_t episodes = 5;  // random-policy rollouts
};

struct PretrainReport {
    std::size_t samples = 0;
    double train_mse = 0.0;
    double train_r2 = 0.0;
    double val_r2 = 0.0;
};

// Frozen linear transform + EHH network used to derive per-agent influence
// weights during training. The predictor maps the concatenated observation
// vector at step k to every intersection's queue total at k+1.
class InfluenceModule {
public:
    InfluenceModule() = default;
    InfluenceModule(JointEhhModel model, std::size_t n_agents, std::size_t obs_width);

    std::size_t n_agents() const { return n_agents_; }
    std::size_t obs_width() const { return obs_width_; }
    const JointEhhModel& model() const { return model_; }

    Vec predict(const Vec& concat_obs) const { return model_.predict(concat_obs); }

    struct Weights {
        Vec w;            // per agent, nonnegative, sums to 1
        int clamped = 0;  // negative inverse-importance entries zeroed
        bool fallback_uniform = false;
    };

    // ANOVA importances over the batch, inverse-transformed through the
    // linear layer and grouped by owning agent. All-zero importances fall
    // back to uniform weights.
    Weights influence_weights(const std::vector<Vec>& concat_obs_batch) const;

    // Raw report over the EHH input components (for the anova CLI command).
    AnovaReport anova(const std::vector<Vec>& concat_obs_batch) const;

    // Importances mapped back to raw observation components.
    InverseImportance input_importances(const std::vector<Vec>& concat_obs_batch) const;

    long anova_calls() const { return anova_calls_; }

    nlohmann::json to_json() const;
    static InfluenceModule from_json(const nlohmann::json& j);

private:
    JointEhhModel model_;
    std::size_t n_agents_ = 0;
    std::size_t obs_width_ = 0;
    mutable long anova_calls_ = 0;
};

// Collects random-policy rollouts from the environment and fits the module.
InfluenceModule pretrain_ehh(TrafficEnv& env, const PretrainOptions& opts,
                             std::uint64_t seed, PretrainReport* report = nullptr);

}  // namespace tsc
