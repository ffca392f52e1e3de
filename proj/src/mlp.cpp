#include "tsc/mlp.hpp"

#include <cmath>

#include "tsc/errors.hpp"

namespace tsc {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Brelu: return "brelu";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "brelu") return Activation::Brelu;
    throw ConfigError("unknown activation '" + name + "'");
}

void MlpGradients::scale(double s) {
    for (auto& t : weights)
        for (double& v : t.values) v *= s;
    for (auto& t : biases)
        for (double& v : t.values) v *= s;
}

void MlpGradients::add(const MlpGradients& other, double s) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].values.size(); ++i)
            weights[l].values[i] += s * other.weights[l].values[i];
        for (std::size_t i = 0; i < biases[l].values.size(); ++i)
            biases[l].values[i] += s * other.biases[l].values[i];
    }
}

BreluMlp::BreluMlp(std::vector<MlpLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.act == Activation::Brelu &&
            layer.grid.input_dims() != layer.affine_width()) {
            throw ShapeError("layer " + std::to_string(l) +
                             ": brelu grid dims != affine width");
        }
        if (l > 0 && layers_[l - 1].out_width() != layer.in_width()) {
            throw ShapeError("layer " + std::to_string(l) + ": input width " +
                             std::to_string(layer.in_width()) +
                             " != previous output width " +
                             std::to_string(layers_[l - 1].out_width()));
        }
    }
}

std::size_t BreluMlp::input_width() const {
    return layers_.empty() ? 0 : layers_.front().in_width();
}

std::size_t BreluMlp::output_width() const {
    return layers_.empty() ? 0 : layers_.back().out_width();
}

Vec BreluMlp::forward(const Vec& x) const {
    MlpTrace trace;
    return forward(x, trace);
}

Vec BreluMlp::forward(const Vec& x, MlpTrace& trace) const {
    if (x.size() != input_width()) {
        throw ShapeError("mlp forward: input width " + std::to_string(x.size()) +
                         " != expected " + std::to_string(input_width()));
    }
    trace.layer_inputs.assign(layers_.size(), {});
    trace.pre_activations.assign(layers_.size(), {});
    Vec h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        trace.layer_inputs[l] = h;
        Vec pre(layer.affine_width(), 0.0);
        const std::size_t in = layer.in_width();
        for (std::size_t r = 0; r < layer.affine_width(); ++r) {
            double acc = layer.bias.values[r];
            const double* wrow = layer.weight.values.data() + r * in;
            for (std::size_t c = 0; c < in; ++c) acc += wrow[c] * h[c];
            pre[r] = acc;
        }
        trace.pre_activations[l] = pre;
        switch (layer.act) {
            case Activation::Identity:
                h = std::move(pre);
                break;
            case Activation::Relu:
                h = std::move(pre);
                for (double& v : h)
                    if (v < 0.0) v = 0.0;
                break;
            case Activation::Brelu:
                h = brelu_forward(pre, layer.grid);
                break;
        }
    }
    trace.output = h;
    trace.recorded = true;
    return h;
}

MlpGradients BreluMlp::zero_gradients() const {
    MlpGradients g;
    g.weights.reserve(layers_.size());
    g.biases.reserve(layers_.size());
    for (const auto& layer : layers_) {
        g.weights.push_back(Tensor(layer.weight.shape));
        g.biases.push_back(Tensor(layer.bias.shape));
    }
    return g;
}

Vec BreluMlp::backward(const MlpTrace& trace, const Vec& output_grad,
                       MlpGradients& grads, double scale) const {
    if (!trace.recorded) {
        throw StateError("mlp backward: no recorded forward pass");
    }
    if (output_grad.size() != output_width()) {
        throw ShapeError("mlp backward: output gradient width mismatch");
    }
    Vec d = output_grad;  // dLoss/d(post-activation of current layer)
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& layer = layers_[li];
        const Vec& pre = trace.pre_activations[li];
        Vec dpre;
        switch (layer.act) {
            case Activation::Identity:
                dpre = std::move(d);
                break;
            case Activation::Relu:
                dpre = std::move(d);
                for (std::size_t i = 0; i < dpre.size(); ++i)
                    if (!(pre[i] > 0.0)) dpre[i] = 0.0;
                break;
            case Activation::Brelu:
                dpre = brelu_backward(pre, layer.grid, d);
                break;
        }
        const Vec& in = trace.layer_inputs[li];
        Tensor& wg = grads.weights[li];
        Tensor& bg = grads.biases[li];
        const std::size_t nin = layer.in_width();
        for (std::size_t r = 0; r < layer.affine_width(); ++r) {
            const double dr = dpre[r] * scale;
            bg.values[r] += dr;
            double* wrow = wg.values.data() + r * nin;
            for (std::size_t c = 0; c < nin; ++c) wrow[c] += dr * in[c];
        }
        Vec din(nin, 0.0);
        for (std::size_t r = 0; r < layer.affine_width(); ++r) {
            const double dr = dpre[r];
            const double* wrow = layer.weight.values.data() + r * nin;
            for (std::size_t c = 0; c < nin; ++c) din[c] += dr * wrow[c];
        }
        d = std::move(din);
    }
    return d;
}

std::vector<Tensor*> BreluMlp::parameters() {
    std::vector<Tensor*> out;
    out.reserve(layers_.size() * 2);
    for (auto& layer : layers_) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::vector<const Tensor*> BreluMlp::parameters() const {
    std::vector<const Tensor*> out;
    out.reserve(layers_.size() * 2);
    for (const auto& layer : layers_) {
        out.push_back(&layer.weight);
        out.push_back(&layer.bias);
    }
    return out;
}

std::vector<std::string> BreluMlp::parameter_names() const {
    std::vector<std::string> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        out.push_back("layer" + std::to_string(l) + ".weight");
        out.push_back("layer" + std::to_string(l) + ".bias");
    }
    return out;
}

std::size_t BreluMlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
}

nlohmann::json BreluMlp::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : layers_) {
        nlohmann::json jl;
        jl["activation"] = activation_name(layer.act);
        jl["shape"] = {layer.weight.rows(), layer.weight.cols()};
        jl["weight"] = layer.weight.values;
        jl["bias"] = layer.bias.values;
        if (layer.act == Activation::Brelu) jl["grid"] = layer.grid.biases();
        layers.push_back(std::move(jl));
    }
    return nlohmann::json{{"layers", std::move(layers)}};
}

BreluMlp BreluMlp::from_json(const nlohmann::json& j) {
    std::vector<MlpLayer> layers;
    for (const auto& jl : j.at("layers")) {
        MlpLayer layer;
        layer.act = activation_from_name(jl.at("activation").get<std::string>());
        const auto shape = jl.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2) throw ConfigError("mlp checkpoint: bad layer shape");
        layer.weight = Tensor::matrix(shape[0], shape[1]);
        layer.weight.values = jl.at("weight").get<Vec>();
        layer.weight.check_invariants("weight");
        layer.bias = Tensor::vector(shape[0]);
        layer.bias.values = jl.at("bias").get<Vec>();
        layer.bias.check_invariants("bias");
        if (layer.act == Activation::Brelu) {
            layer.grid = BiasGrid(jl.at("grid").get<std::vector<std::vector<double>>>());
        }
        layers.push_back(std::move(layer));
    }
    return BreluMlp(std::move(layers));
}

MlpBuilder::MlpBuilder(std::size_t input_width)
    : input_width_(input_width), current_width_(input_width) {}

MlpBuilder& MlpBuilder::push(std::size_t width, Activation act, BiasGrid grid) {
    MlpLayer layer;
    layer.weight = Tensor::matrix(width, current_width_);
    layer.bias = Tensor::vector(width);
    layer.act = act;
    layer.grid = std::move(grid);
    current_width_ = layer.out_width();
    layers_.push_back(std::move(layer));
    return *this;
}

MlpBuilder& MlpBuilder::affine(std::size_t width) {
    return push(width, Activation::Identity, {});
}

MlpBuilder& MlpBuilder::affine_relu(std::size_t width) {
    return push(width, Activation::Relu, {});
}

MlpBuilder& MlpBuilder::affine_brelu(std::size_t width, const BiasGrid& grid) {
    if (grid.input_dims() != width) {
        throw ShapeError("mlp builder: grid dims != affine width");
    }
    return push(width, Activation::Brelu, grid);
}

MlpBuilder& MlpBuilder::affine_brelu(std::size_t width, double nu, double eta) {
    return push(width, Activation::Brelu, brelu_bias_grid(width, nu, eta));
}

BreluMlp MlpBuilder::build(Rng& rng) const {
    std::vector<MlpLayer> layers = layers_;
    for (auto& layer : layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.in_width()));
        for (double& w : layer.weight.values) w = rng.uniform(-bound, bound);
        for (double& b : layer.bias.values) b = 0.0;
    }
    return BreluMlp(std::move(layers));
}

BreluMlp MlpBuilder::build_zero() const { return BreluMlp(layers_); }

}  // namespace tsc
