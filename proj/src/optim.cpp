#include "tsc/optim.hpp"

#include <cmath>

#include "tsc/errors.hpp"

namespace tsc {

OptimMethod optim_method_from_name(const std::string& name) {
    if (name == "sgd") return OptimMethod::Sgd;
    if (name == "adam") return OptimMethod::Adam;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void Optimizer::step(const std::vector<Tensor*>& params,
                     const std::vector<const Tensor*>& grads,
                     const std::vector<std::string>& names) {
    if (params.size() != grads.size()) {
        throw ShapeError("optimizer: parameter/gradient count mismatch");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (params[p]->size() != grads[p]->size()) {
            throw ShapeError("optimizer: shape mismatch for parameter '" +
                             (p < names.size() ? names[p] : std::to_string(p)) + "'");
        }
        for (double g : grads[p]->values) {
            if (!std::isfinite(g)) {
                throw NumericError("optimizer: non-finite gradient for parameter '" +
                                   (p < names.size() ? names[p] : std::to_string(p)) + "'");
            }
        }
    }

    if (cfg_.method == OptimMethod::Sgd) {
        for (std::size_t p = 0; p < params.size(); ++p) {
            Vec& vals = params[p]->values;
            const Vec& g = grads[p]->values;
            for (std::size_t i = 0; i < vals.size(); ++i)
                vals[i] -= cfg_.learning_rate * g[i];
        }
        return;
    }

    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t p = 0; p < params.size(); ++p) {
            m_[p].assign(params[p]->size(), 0.0);
            v_[p].assign(params[p]->size(), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw StateError("optimizer: parameter list changed between adam steps");
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Vec& vals = params[p]->values;
        const Vec& g = grads[p]->values;
        Vec& m = m_[p];
        Vec& v = v_[p];
        for (std::size_t i = 0; i < vals.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            vals[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

void Optimizer::step(BreluMlp& net, const MlpGradients& grads) {
    step(net.parameters(), gradient_ptrs(grads), net.parameter_names());
}

std::vector<const Tensor*> gradient_ptrs(const MlpGradients& grads) {
    std::vector<const Tensor*> out;
    out.reserve(grads.weights.size() * 2);
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        out.push_back(&grads.weights[l]);
        out.push_back(&grads.biases[l]);
    }
    return out;
}

}  // namespace tsc
