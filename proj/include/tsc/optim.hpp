#pragma once

#include <string>
#include <vector>

#include "tsc/mlp.hpp"
#include "tsc/tensor.hpp"

namespace tsc {

enum class OptimMethod { Sgd, Adam };

OptimMethod optim_method_from_name(const std::string& name);

struct OptimConfig {
    OptimMethod method = OptimMethod::Sgd;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First-order parameter updates. Adam keeps per-element moment estimates
// keyed by parameter position, so the same optimizer instance must always
// see the same parameter list.
class Optimizer {
public:
    explicit Optimizer(OptimConfig cfg) : cfg_(cfg) {}

    const OptimConfig& config() const { return cfg_; }

    // params, grads and names are parallel. Throws NumericError naming the
    // parameter when a gradient is non-finite.
    void step(const std::vector<Tensor*>& params,
              const std::vector<const Tensor*>& grads,
              const std::vector<std::string>& names);

    void step(BreluMlp& net, const MlpGradients& grads);

private:
    OptimConfig cfg_;
    std::vector<Vec> m_;
    std::vector<Vec> v_;
    long step_count_ = 0;
};

std::vector<const Tensor*> gradient_ptrs(const MlpGradients& grads);

}  // namespace tsc
