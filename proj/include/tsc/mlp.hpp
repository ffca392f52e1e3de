#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsc/brelu.hpp"
#include "tsc/rng.hpp"
#include "tsc/tensor.hpp"

namespace tsc {

enum class Activation { Identity, Relu, Brelu };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// One network stage: affine map y = Wx + b followed by an activation.
// A Brelu stage expands the affine width d to grid.output_dims().
struct MlpLayer {
    Tensor weight;  // affine_out x in, row-major
    Tensor bias;    // affine_out
    Activation act = Activation::Identity;
    BiasGrid grid;  // populated only for Brelu

    std::size_t in_width() const { return weight.cols(); }
    std::size_t affine_width() const { return weight.rows(); }
    std::size_t out_width() const {
        return act == Activation::Brelu ? grid.output_dims() : affine_width();
    }
};

// Recorded activations from one forward pass; required by backward().
// One trace per evaluation context keeps concurrent read-only forwards safe.
struct MlpTrace {
    bool recorded = false;
    std::vector<Vec> layer_inputs;      // input to each affine
    std::vector<Vec> pre_activations;   // affine outputs (activation inputs)
    Vec output;
};

// Per-parameter gradients in the same layout as the layers.
struct MlpGradients {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    void scale(double s);
    void add(const MlpGradients& other, double s = 1.0);
};

// Stacked affine + {identity, ReLU, BReLU} network. Parameters are mutable
// only through parameters()/load; forward and backward are const.
class BreluMlp {
public:
    BreluMlp() = default;
    explicit BreluMlp(std::vector<MlpLayer> layers);

    std::size_t input_width() const;
    std::size_t output_width() const;
    const std::vector<MlpLayer>& layers() const { return layers_; }

    Vec forward(const Vec& x) const;
    Vec forward(const Vec& x, MlpTrace& trace) const;

    MlpGradients zero_gradients() const;

    // Accumulates scale * dLoss/dParams into grads given the recorded trace
    // and dLoss/dOutput; returns dLoss/dInput. Subgradient 0 at kinks.
    Vec backward(const MlpTrace& trace, const Vec& output_grad,
                 MlpGradients& grads, double scale = 1.0) const;

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;
    std::size_t parameter_count() const;

    nlohmann::json to_json() const;
    static BreluMlp from_json(const nlohmann::json& j);

private:
    std::vector<MlpLayer> layers_;
};

// Incremental construction with width checking. He-uniform initialization
// from the supplied stream; build_zero() leaves all parameters at 0.
class MlpBuilder {
public:
    explicit MlpBuilder(std::size_t input_width);

    MlpBuilder& affine(std::size_t width);                 // identity activation
    MlpBuilder& affine_relu(std::size_t width);
    MlpBuilder& affine_brelu(std::size_t width, const BiasGrid& grid);
    MlpBuilder& affine_brelu(std::size_t width, double nu = 1.0, double eta = 0.0);

    BreluMlp build(Rng& rng) const;
    BreluMlp build_zero() const;

private:
    MlpBuilder& push(std::size_t width, Activation act, BiasGrid grid);

    std::size_t input_width_;
    std::size_t current_width_;
    std::vector<MlpLayer> layers_;
};

}  // namespace tsc
