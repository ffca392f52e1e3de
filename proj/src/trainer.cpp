#include "tsc/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "tsc/errors.hpp"
#include "tsc/optim.hpp"
#include "tsc/rng.hpp"

namespace tsc {

void TrainerConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
        throw ConfigError("clip epsilon must be in (0, 1)");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (l1_penalty < 0.0) throw ConfigError("l1 penalty must be >= 0");
}

Vec truncated_advantages(const Vec& rewards, const Vec& values, double gamma) {
    if (rewards.empty()) throw DataError("advantage: empty buffer segment");
    if (rewards.size() != values.size()) {
        throw ShapeError("advantage: rewards/values length mismatch");
    }
    Vec adv(rewards.size(), 0.0);
    double running = 0.0;
    for (std::size_t b = rewards.size(); b-- > 0;) {
        running = rewards[b] + gamma * running;
        adv[b] = running - values[b];
    }
    return adv;
}

double ppo_objective(double ratio, double advantage, double eps) {
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * advantage, clipped * advantage);
}

double ppo_ratio_gradient(double ratio, double advantage, double eps) {
    if (advantage > 0.0 && ratio > 1.0 + eps) return 0.0;
    if (advantage < 0.0 && ratio < 1.0 - eps) return 0.0;
    return advantage;
}

Vec softmax(const Vec& logits) {
    double best = logits[0];
    for (double v : logits) best = std::max(best, v);
    Vec p(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - best);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

ActorUpdateResult actor_update(BreluMlp& actor, const std::vector<ActorSample>& batch,
                               double eps, double lr, bool normalize) {
    if (batch.empty()) throw DataError("actor update: empty batch");

    double mean = 0.0, sd = 1.0;
    if (normalize && batch.size() > 1) {
        for (const auto& s : batch) mean += s.advantage;
        mean /= static_cast<double>(batch.size());
        double sq = 0.0;
        for (const auto& s : batch) {
            const double c = s.advantage - mean;
            sq += c * c;
        }
        sd = std::max(std::sqrt(sq / static_cast<double>(batch.size())), 1e-8);
    } else {
        mean = 0.0;
    }

    MlpGradients grads = actor.zero_gradients();
    MlpTrace trace;
    double objective = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        const Vec logits = actor.forward(s.input, trace);
        const Vec probs = softmax(logits);
        const double p_old = std::max(s.old_prob, kProbabilityFloor);
        const double ratio = probs[static_cast<std::size_t>(s.action)] / p_old;
        objective += ppo_objective(ratio, s.advantage, eps);

        const double adv_used = normalize ? (s.advantage - mean) / sd : s.advantage;
        const double g = ppo_ratio_gradient(ratio, adv_used, eps);
        if (g == 0.0) continue;
        const double pa = probs[static_cast<std::size_t>(s.action)];
        Vec dlogits(probs.size(), 0.0);
        for (std::size_t j = 0; j < probs.size(); ++j) {
            const double indicator = (static_cast<int>(j) == s.action) ? 1.0 : 0.0;
            dlogits[j] = (g / p_old) * pa * (indicator - probs[j]);
        }
        // Ascent: accumulate the negated gradient and take a descent step.
        actor.backward(trace, dlogits, grads, -inv_n);
    }
    Optimizer opt({OptimMethod::Sgd, lr});
    opt.step(actor, grads);
    return {objective};
}

CriticUpdateResult critic_update(BreluMlp& critic, const std::vector<CriticSample>& batch,
                                 double l1_penalty, double lr) {
    if (batch.empty()) throw DataError("critic update: empty batch");
    MlpGradients grads = critic.zero_gradients();
    MlpTrace trace;
    double sum_sq = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        const double v = critic.forward(s.input, trace)[0];
        const double adv = s.return_target - v;
        sum_sq += adv * adv;
        critic.backward(trace, {-2.0 * adv}, grads, inv_n);
    }
    double l1 = 0.0;
    if (l1_penalty > 0.0) {
        auto& layers = const_cast<std::vector<MlpLayer>&>(critic.layers());
        for (std::size_t l = 0; l < layers.size(); ++l) {
            for (std::size_t k = 0; k < layers[l].weight.values.size(); ++k) {
                const double w = layers[l].weight.values[k];
                l1 += std::fabs(w);
                grads.weights[l].values[k] +=
                    l1_penalty * (w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0));
            }
        }
    }
    const double loss = sum_sq + l1_penalty * l1;
    if (!std::isfinite(loss)) throw NumericError("critic update: non-finite loss");
    Optimizer opt({OptimMethod::Sgd, lr});
    opt.step(critic, grads);
    return {loss};
}

nlohmann::json PolicyBundle::to_json() const {
    nlohmann::json j;
    j["embed"] = embedder.net().to_json();
    nlohmann::json ja = nlohmann::json::array();
    for (const auto& a : actors) ja.push_back(a.to_json());
    j["actors"] = std::move(ja);
    j["uses_influence"] = uses_influence;
    if (uses_influence) {
        j["critic"] = joint_critic.to_json();
    } else {
        nlohmann::json jc = nlohmann::json::array();
        for (const auto& c : ippo_critics) jc.push_back(c.to_json());
        j["critics"] = std::move(jc);
    }
    return j;
}

PolicyBundle PolicyBundle::from_json(const TrafficGraph& graph, const nlohmann::json& j) {
    PolicyBundle b{NodeEmbedder(graph, BreluMlp::from_json(j.at("embed"))),
                   {}, {}, {}, j.at("uses_influence").get<bool>()};
    for (const auto& ja : j.at("actors")) b.actors.push_back(BreluMlp::from_json(ja));
    if (b.actors.size() != graph.intersection_count()) {
        throw ShapeError("checkpoint: actor count != intersection count");
    }
    if (b.uses_influence) {
        b.joint_critic = BreluMlp::from_json(j.at("critic"));
    } else {
        for (const auto& jc : j.at("critics"))
            b.ippo_critics.push_back(BreluMlp::from_json(jc));
    }
    return b;
}

namespace {

PolicyBundle make_bundle(const TrafficGraph& graph, const TrainerConfig& cfg,
                         bool uses_influence) {
    Rng rng(derive_seed(cfg.seed, "init"));
    PolicyBundle b{NodeEmbedder(graph, cfg.embed_width, rng), {}, {}, {}, uses_influence};
    for (std::size_t a = 0; a < graph.intersection_count(); ++a) {
        b.actors.push_back(MlpBuilder(cfg.embed_width)
                               .affine_brelu(cfg.hidden_width)
                               .affine_relu(cfg.hidden_width)
                               .affine(4)
                               .build(rng));
    }
    if (uses_influence) {
        b.joint_critic = MlpBuilder(2 * cfg.embed_width)
                             .affine_brelu(cfg.hidden_width)
                             .affine_relu(cfg.hidden_width)
                             .affine(1)
                             .build(rng);
    } else {
        for (std::size_t a = 0; a < graph.intersection_count(); ++a) {
            b.ippo_critics.push_back(MlpBuilder(cfg.embed_width)
                                         .affine_brelu(cfg.hidden_width)
                                         .affine_relu(cfg.hidden_width)
                                         .affine(1)
                                         .build(rng));
        }
    }
    return b;
}

}  // namespace

MarlTrainer::MarlTrainer(const TrafficGraph& graph, const TrainerConfig& cfg,
                         const EnvConfig& env_cfg, InfluenceModule influence)
    : graph_(graph),
      cfg_(cfg),
      env_(graph, env_cfg),
      influence_(std::move(influence)),
      bundle_(make_bundle(graph, cfg, true)) {
    cfg_.validate();
}

MarlTrainer::MarlTrainer(const TrafficGraph& graph, const TrainerConfig& cfg,
                         const EnvConfig& env_cfg)
    : graph_(graph),
      cfg_(cfg),
      env_(graph, env_cfg),
      bundle_(make_bundle(graph, cfg, false)) {
    cfg_.validate();
}

std::vector<int> MarlTrainer::sample_actions(const std::vector<Vec>& obs,
                                             Rng& rng) const {
    const std::vector<Vec> v_in = bundle_.embedder.embed(obs);
    std::vector<int> actions(obs.size());
    for (std::size_t a = 0; a < obs.size(); ++a) {
        const Vec probs = softmax(bundle_.actors[a].forward(v_in[a]));
        actions[a] = static_cast<int>(rng.categorical(probs));
    }
    return actions;
}

Vec MarlTrainer::critic_input(std::size_t agent, const std::vector<Vec>& v_in,
                              const Vec& influence_weights) const {
    if (!bundle_.uses_influence) return v_in[agent];
    Vec out = v_in[agent];
    out.resize(2 * v_in[agent].size(), 0.0);
    const std::size_t d = v_in[agent].size();
    for (std::size_t j = 0; j < v_in.size(); ++j) {
        for (std::size_t k = 0; k < d; ++k)
            out[d + k] += influence_weights[j] * v_in[j][k];
    }
    return out;
}

MarlTrainer::PassOutcome MarlTrainer::update_pass(const EpisodeResult& episode) {
    const std::size_t n_agents = episode.transitions.size();
    const std::size_t n_steps = episode.transitions[0].size();
    PassOutcome outcome;

    // Influence weights from the whole stored buffer (Algorithm-level batch).
    Vec w(n_agents, 1.0 / static_cast<double>(n_agents));
    if (bundle_.uses_influence) {
        std::vector<Vec> concat_batch(n_steps);
        for (std::size_t k = 0; k < n_steps; ++k) {
            Vec& row = concat_batch[k];
            for (std::size_t a = 0; a < n_agents; ++a) {
                const Vec& o = episode.transitions[a][k].obs;
                row.insert(row.end(), o.begin(), o.end());
            }
        }
        w = influence_->influence_weights(concat_batch).w;
    }

    // Old-policy snapshot: probabilities recorded before any update.
    const NodeEmbedder embed_snapshot = bundle_.embedder;
    const std::vector<BreluMlp> actor_snapshot = bundle_.actors;
    std::vector<Vec> old_probs(n_agents, Vec(n_steps, 0.0));
    {
        std::vector<Vec> obs_step(n_agents);
        for (std::size_t k = 0; k < n_steps; ++k) {
            for (std::size_t a = 0; a < n_agents; ++a)
                obs_step[a] = episode.transitions[a][k].obs;
            const std::vector<Vec> v_in = embed_snapshot.embed(obs_step);
            for (std::size_t a = 0; a < n_agents; ++a) {
                const Vec probs = softmax(actor_snapshot[a].forward(v_in[a]));
                old_probs[a][k] = probs[static_cast<std::size_t>(
                    episode.transitions[a][k].action)];
            }
        }
    }

    Optimizer critic_opt({OptimMethod::Sgd, cfg_.critic_lr});
    Optimizer embed_opt({OptimMethod::Sgd, cfg_.critic_lr});
    std::size_t n_chunks = 0;
    double actor_obj_total = 0.0;
    double critic_loss_total = 0.0;

    for (std::size_t start = 0; start < n_steps; start += cfg_.batch_size) {
        const std::size_t end = std::min(n_steps, start + cfg_.batch_size);
        const std::size_t len = end - start;
        ++n_chunks;

        // Current embeddings with traces (embedding learns with the critic).
        std::vector<NodeEmbedder::Trace> embed_traces(len);
        std::vector<std::vector<Vec>> v_in(len);
        std::vector<Vec> obs_step(n_agents);
        for (std::size_t k = 0; k < len; ++k) {
            for (std::size_t a = 0; a < n_agents; ++a)
                obs_step[a] = episode.transitions[a][start + k].obs;
            v_in[k] = bundle_.embedder.embed(obs_step, embed_traces[k]);
        }

        // Critic values and advantages per agent.
        std::vector<std::vector<Vec>> critic_inputs(len, std::vector<Vec>(n_agents));
        std::vector<std::vector<MlpTrace>> critic_traces(
            len, std::vector<MlpTrace>(n_agents));
        std::vector<Vec> advantages(n_agents);
        std::vector<Vec> returns(n_agents, Vec(len, 0.0));
        for (std::size_t a = 0; a < n_agents; ++a) {
            Vec rewards(len), values(len);
            for (std::size_t k = 0; k < len; ++k) {
                critic_inputs[k][a] = critic_input(a, v_in[k], w);
                BreluMlp& critic =
                    bundle_.uses_influence ? bundle_.joint_critic : bundle_.ippo_critics[a];
                values[k] = critic.forward(critic_inputs[k][a], critic_traces[k][a])[0];
                rewards[k] = episode.transitions[a][start + k].reward;
            }
            advantages[a] = truncated_advantages(rewards, values, cfg_.gamma);
            for (std::size_t k = 0; k < len; ++k)
                returns[a][k] = advantages[a][k] + values[k];
        }

        // Decentralized actor updates on local embeddings.
        for (std::size_t a = 0; a < n_agents; ++a) {
            std::vector<ActorSample> batch(len);
            for (std::size_t k = 0; k < len; ++k) {
                batch[k] = {v_in[k][a], episode.transitions[a][start + k].action,
                            advantages[a][k], old_probs[a][start + k]};
            }
            actor_obj_total +=
                actor_update(bundle_.actors[a], batch, cfg_.clip_epsilon,
                             cfg_.actor_lr, cfg_.normalize_advantages)
                    .objective /
                static_cast<double>(len);
        }

        // Joint critic + embedding update (one gradient step per chunk).
        const std::size_t n_samples = len * n_agents;
        const double inv_n = 1.0 / static_cast<double>(n_samples);
        MlpGradients embed_grads = bundle_.embedder.net().zero_gradients();
        double sum_sq = 0.0;
        if (bundle_.uses_influence) {
            MlpGradients critic_grads = bundle_.joint_critic.zero_gradients();
            const std::size_t d = cfg_.embed_width;
            for (std::size_t k = 0; k < len; ++k) {
                std::vector<Vec> d_vin(n_agents, Vec(d, 0.0));
                for (std::size_t a = 0; a < n_agents; ++a) {
                    const double adv = advantages[a][k];
                    sum_sq += adv * adv;
                    // d_input carries dLoss/d(critic input) for this sample;
                    // inv_n matches the mean scaling of the parameter step.
                    const Vec d_input = bundle_.joint_critic.backward(
                        critic_traces[k][a], {-2.0 * adv}, critic_grads, inv_n);
                    for (std::size_t i = 0; i < d; ++i)
                        d_vin[a][i] += inv_n * d_input[i];
                    // The aggregate half flows back to every agent via w.
                    for (std::size_t j = 0; j < n_agents; ++j) {
                        for (std::size_t i = 0; i < d; ++i)
                            d_vin[j][i] += inv_n * w[j] * d_input[d + i];
                    }
                }
                bundle_.embedder.backward(embed_traces[k], d_vin, embed_grads);
            }
            double l1 = 0.0;
            if (cfg_.l1_penalty > 0.0) {
                auto& layers =
                    const_cast<std::vector<MlpLayer>&>(bundle_.joint_critic.layers());
                for (std::size_t l = 0; l < layers.size(); ++l) {
                    for (std::size_t kk = 0; kk < layers[l].weight.values.size(); ++kk) {
                        const double wv = layers[l].weight.values[kk];
                        l1 += std::fabs(wv);
                        critic_grads.weights[l].values[kk] +=
                            cfg_.l1_penalty * (wv > 0.0 ? 1.0 : (wv < 0.0 ? -1.0 : 0.0));
                    }
                }
            }
            critic_loss_total += (sum_sq + cfg_.l1_penalty * l1) * inv_n;
            critic_opt.step(bundle_.joint_critic, critic_grads);
        } else {
            std::vector<MlpGradients> critic_grads;
            critic_grads.reserve(n_agents);
            for (std::size_t a = 0; a < n_agents; ++a)
                critic_grads.push_back(bundle_.ippo_critics[a].zero_gradients());
            const std::size_t d = cfg_.embed_width;
            for (std::size_t k = 0; k < len; ++k) {
                std::vector<Vec> d_vin(n_agents, Vec(d, 0.0));
                for (std::size_t a = 0; a < n_agents; ++a) {
                    const double adv = advantages[a][k];
                    sum_sq += adv * adv;
                    const Vec d_input = bundle_.ippo_critics[a].backward(
                        critic_traces[k][a], {-2.0 * adv}, critic_grads[a], inv_n);
                    for (std::size_t i = 0; i < d; ++i)
                        d_vin[a][i] += inv_n * d_input[i];
                }
                bundle_.embedder.backward(embed_traces[k], d_vin, embed_grads);
            }
            critic_loss_total += sum_sq * inv_n;
            for (std::size_t a = 0; a < n_agents; ++a) {
                Optimizer per_agent({OptimMethod::Sgd, cfg_.critic_lr});
                per_agent.step(bundle_.ippo_critics[a], critic_grads[a]);
            }
        }
        embed_opt.step(bundle_.embedder.net(), embed_grads);
    }

    outcome.actor_objective_mean =
        actor_obj_total / static_cast<double>(n_chunks * n_agents);
    outcome.critic_loss_mean = critic_loss_total / static_cast<double>(n_chunks);
    return outcome;
}

TrainResult MarlTrainer::train() {
    TrainResult result;
    for (std::size_t ep = 0; ep < cfg_.episodes; ++ep) {
        Rng action_rng(derive_seed(cfg_.seed, "actions", ep));
        const PolicyFn policy = [&](const std::vector<Vec>& obs) {
            return sample_actions(obs, action_rng);
        };
        const EpisodeResult episode =
            run_episode(env_, policy, derive_seed(cfg_.seed, "demand", ep));
        if (episode.aborted) {
            throw StateError("training episode aborted by policy exception");
        }

        EpisodeStats stats;
        stats.episode = ep;
        stats.global_reward = episode.global_reward_total;
        const SimMetrics metrics = compute_metrics(episode.trace);
        stats.ave = metrics.ave;
        stats.sta = metrics.sta;
        if (episode.transitions[0].size() > cfg_.batch_size) {
            const PassOutcome outcome = update_pass(episode);
            stats.actor_loss = outcome.actor_objective_mean;
            stats.critic_loss = outcome.critic_loss_mean;
        }
        result.curve.push_back(stats);
    }
    return result;
}

PolicyFn greedy_policy_for(const PolicyBundle& bundle) {
    return [&bundle](const std::vector<Vec>& obs) {
        const std::vector<Vec> v_in = bundle.embedder.embed(obs);
        std::vector<int> actions(obs.size(), 0);
        for (std::size_t a = 0; a < obs.size(); ++a) {
            const Vec logits = bundle.actors[a].forward(v_in[a]);
            std::size_t best = 0;
            for (std::size_t j = 1; j < logits.size(); ++j)
                if (logits[j] > logits[best]) best = j;
            actions[a] = static_cast<int>(best);
        }
        return actions;
    };
}

PolicyFn MarlTrainer::greedy_policy() const { return greedy_policy_for(bundle_); }

EvalResult evaluate_policy(TrafficEnv& env, const PolicyFn& policy,
                           std::size_t episodes, std::uint64_t base_seed) {
    EvalResult result;
    for (std::size_t e = 0; e < episodes; ++e) {
        const std::uint64_t seed = derive_seed(base_seed, "eval", e);
        const EpisodeResult episode = run_episode(env, policy, seed);
        const SimMetrics m = compute_metrics(episode.trace);
        result.episodes.push_back({seed, episode.global_reward_total, m});
        result.mean_ave += m.ave;
        result.mean_sta += m.sta;
        result.mean_global_reward += episode.global_reward_total;
    }
    const double n = static_cast<double>(episodes);
    result.mean_ave /= n;
    result.mean_sta /= n;
    result.mean_global_reward /= n;
    for (const auto& ep : result.episodes) {
        const double c = ep.metrics.ave - result.mean_ave;
        result.var_ave += c * c / n;
    }
    return result;
}

}  // namespace tsc
