#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "tsc/brelu.hpp"
#include "tsc/tensor.hpp"

namespace tsc {

// Hinge source node: z = max{0, x[dim] - bias}.
struct EhhSourceNode {
    std::size_t dim = 0;
    double bias = 0.0;
};

// Min-combination node over source nodes from pairwise distinct input
// dimensions; |sources| is the node's interaction order.
struct EhhMinNode {
    std::vector<std::size_t> sources;
};

inline constexpr std::int64_t kEhhNoCap = std::numeric_limits<std::int64_t>::max();

// Hinging-hyperplanes network: one hidden layer of hinge source nodes plus
// min-combination nodes, output = alpha0 + sum_s alpha_s * z_s. The hidden
// structure is fixed after generation; training touches only alpha/alpha0.
class EhhNetwork {
public:
    EhhNetwork() = default;
    EhhNetwork(BiasGrid grids, std::vector<EhhMinNode> min_nodes,
               std::size_t output_dim);

    std::size_t input_dim() const { return grids_.input_dims(); }
    std::size_t output_dim() const { return output_dim_; }
    std::size_t source_count() const { return sources_.size(); }
    std::size_t min_node_count() const { return min_nodes_.size(); }
    std::size_t node_count() const { return sources_.size() + min_nodes_.size(); }
    std::size_t parameter_count() const { return alpha_.size() + alpha0_.size(); }

    const std::vector<EhhSourceNode>& sources() const { return sources_; }
    const std::vector<EhhMinNode>& min_nodes() const { return min_nodes_; }
    const BiasGrid& grids() const { return grids_; }

    Tensor& alpha() { return alpha_; }               // node_count x output_dim
    const Tensor& alpha() const { return alpha_; }
    Vec& alpha0() { return alpha0_; }
    const Vec& alpha0() const { return alpha0_; }

    // Hidden-layer activations, sources first then min nodes.
    Vec node_values(const Vec& x) const;
    Vec forward(const Vec& x) const;
    Vec forward_from_nodes(const Vec& z) const;

    // dLoss/dx given dLoss/doutput, using min-argmin/hinge subgradients
    // (first index wins ties, 0 exactly at kinks).
    Vec input_gradient(const Vec& x, const Vec& output_grad) const;

    nlohmann::json to_json() const;
    static EhhNetwork from_json(const nlohmann::json& j);

private:
    BiasGrid grids_;
    std::vector<EhhSourceNode> sources_;
    std::vector<EhhMinNode> min_nodes_;
    Tensor alpha_;
    Vec alpha0_;
    std::size_t output_dim_ = 0;
};

// Emits every (dimension, bias) source node plus, per interaction order
// p = 2..max_order, up to candidate_cap min-nodes sampled uniformly without
// replacement from the cross-dimension combinations. Weights start at 0.
EhhNetwork ehh_generate(const BiasGrid& grids, std::size_t max_order,
                        std::int64_t candidate_cap, std::size_t output_dim,
                        std::uint64_t seed);

struct EhhTrainOptions {
    std::size_t max_iters = 4000;
    double tol = 1e-14;  // stop when the objective improvement drops below
};

struct EhhTrainResult {
    double mse = 0.0;
    double objective = 0.0;
    std::size_t iters = 0;
};

// Fits alpha/alpha0 to mean squared error + l1_penalty * sum|alpha| with the
// structure and biases fixed. Accelerated proximal gradient descent with
// backtracking; alpha0 is not penalized.
EhhTrainResult ehh_train(EhhNetwork& net, const std::vector<Vec>& inputs,
                         const std::vector<Vec>& targets, double l1_penalty,
                         const EhhTrainOptions& opts = {});

}  // namespace tsc
