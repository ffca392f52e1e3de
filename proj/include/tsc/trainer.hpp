#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "tsc/embedding.hpp"
#include "tsc/env.hpp"
#include "tsc/influence.hpp"
#include "tsc/mlp.hpp"
#include "tsc/sim_metrics.hpp"

namespace tsc {

struct TrainerConfig {
    double gamma = 0.99;
    double l1_penalty = 1e-4;     // lambda in the critic loss
    double clip_epsilon = 0.2;    // PPO clip
    std::size_t batch_size = 32;  // N_b
    std::size_t episodes = 100;   // N_ep
    double critic_lr = 0.01;
    double actor_lr = 0.001;
    std::uint64_t seed = 0;
    std::size_t embed_width = 16;
    std::size_t hidden_width = 64;
    bool normalize_advantages = true;

    void validate() const;
};

// --- building blocks (also exercised directly by tests) ---

// A(b) = sum_{b' >= b, within segment} gamma^(b'-b) r(b') - V(b).
Vec truncated_advantages(const Vec& rewards, const Vec& values, double gamma);

// min(r*A, clip(r, 1-eps, 1+eps)*A) and its derivative in r (exactly 0 in
// the clipped deadzone).
double ppo_objective(double ratio, double advantage, double eps);
double ppo_ratio_gradient(double ratio, double advantage, double eps);

Vec softmax(const Vec& logits);

inline constexpr double kProbabilityFloor = 1e-8;

struct ActorSample {
    Vec input;
    int action = 0;
    double advantage = 0.0;
    double old_prob = 0.0;
};

struct ActorUpdateResult {
    double objective = 0.0;  // sum over the batch, raw advantages
};

// One gradient-ascent step on the clipped surrogate. When `normalize` is
// set the gradient uses batch-standardized advantages; the reported
// objective always uses the raw ones.
ActorUpdateResult actor_update(BreluMlp& actor, const std::vector<ActorSample>& batch,
                               double eps, double lr, bool normalize);

struct CriticSample {
    Vec input;
    double return_target = 0.0;
};

struct CriticUpdateResult {
    double loss = 0.0;  // sum of squared advantages + l1 * |weights|
};

// One gradient-descent step on sum_b (G_b - V(x_b))^2 + l1 * |W|; the step
// itself averages the squared-error gradient over the batch.
CriticUpdateResult critic_update(BreluMlp& critic, const std::vector<CriticSample>& batch,
                                 double l1_penalty, double lr);

// --- the training system ---

struct PolicyBundle {
    NodeEmbedder embedder;
    std::vector<BreluMlp> actors;
    BreluMlp joint_critic;               // ours
    std::vector<BreluMlp> ippo_critics;  // ippo (per-agent value heads)
    bool uses_influence = false;

    nlohmann::json to_json() const;
    static PolicyBundle from_json(const TrafficGraph& graph, const nlohmann::json& j);
};

struct EpisodeStats {
    std::size_t episode = 0;
    double global_reward = 0.0;
    double ave = 0.0;
    double sta = 0.0;
    double actor_loss = 0.0;
    double critic_loss = 0.0;
};

struct TrainResult {
    std::vector<EpisodeStats> curve;
};

class MarlTrainer {
public:
    // Full method: centralized critic over influence-aggregated embeddings.
    MarlTrainer(const TrafficGraph& graph, const TrainerConfig& cfg,
                const EnvConfig& env_cfg, InfluenceModule influence);
    // Ablation (IPPO): per-agent critics on local embeddings, no influence.
    MarlTrainer(const TrafficGraph& graph, const TrainerConfig& cfg,
                const EnvConfig& env_cfg);

    TrainResult train();

    const PolicyBundle& bundle() const { return bundle_; }
    PolicyBundle& bundle() { return bundle_; }
    const InfluenceModule* influence() const {
        return influence_ ? &*influence_ : nullptr;
    }
    long anova_calls() const { return influence_ ? influence_->anova_calls() : 0; }
    TrafficEnv& env() { return env_; }

    PolicyFn greedy_policy() const;

private:
    struct PassOutcome {
        double actor_objective_mean = 0.0;
        double critic_loss_mean = 0.0;
    };
    std::vector<int> sample_actions(const std::vector<Vec>& obs, Rng& rng) const;
    Vec critic_input(std::size_t agent, const std::vector<Vec>& v_in,
                     const Vec& influence_weights) const;
    PassOutcome update_pass(const EpisodeResult& episode);

    const TrafficGraph& graph_;
    TrainerConfig cfg_;
    TrafficEnv env_;
    std::optional<InfluenceModule> influence_;
    PolicyBundle bundle_;
};

PolicyFn greedy_policy_for(const PolicyBundle& bundle);

struct EvalEpisode {
    std::uint64_t seed = 0;
    double global_reward = 0.0;
    SimMetrics metrics;
};

struct EvalResult {
    double mean_ave = 0.0;
    double var_ave = 0.0;
    double mean_sta = 0.0;
    double mean_global_reward = 0.0;
    std::vector<EvalEpisode> episodes;
};

EvalResult evaluate_policy(TrafficEnv& env, const PolicyFn& policy,
                           std::size_t episodes, std::uint64_t base_seed);

}  // namespace tsc
