#pragma once

#include <cstddef>
#include <vector>

#include "tsc/tensor.hpp"

namespace tsc {

// Multi-bias grid for the biased-ReLU activation. Each input dimension i
// carries a strictly increasing bias list beta_{i,1..q_i}; the activation
// emits max{0, x_i - beta} per bias, expanding width d to sum_i q_i.
class BiasGrid {
public:
    BiasGrid() = default;
    explicit BiasGrid(std::vector<std::vector<double>> biases);

    // Same grid for every one of `dims` input dimensions.
    static BiasGrid uniform(std::size_t dims, const std::vector<double>& biases);

    std::size_t input_dims() const { return biases_.size(); }
    std::size_t output_dims() const { return total_; }
    const std::vector<double>& biases_for(std::size_t dim) const { return biases_[dim]; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

private:
    std::vector<std::vector<double>> biases_;
    std::size_t total_ = 0;
};

// The five-bias placement [-3v, -0.824v, -0.248v, 0.248v, 0.834v] + eta for
// one dimension, where v and eta describe the (normalized) input
// distribution. Throws NumericError for v <= 0.
std::vector<double> brelu_bias_row(double nu, double eta);

// Convenience: the same (nu, eta) placement replicated over `dims` inputs.
BiasGrid brelu_bias_grid(std::size_t dims, double nu, double eta);

// y[(i,q)] = max{0, x[i] - beta_{i,q}}, dimension-major, bias-ascending.
Vec brelu_forward(const Vec& x, const BiasGrid& grid);

// Accumulates dL/dx given dL/dy. Subgradient 0 exactly at kinks (x == beta).
Vec brelu_backward(const Vec& x, const BiasGrid& grid, const Vec& dy);

}  // namespace tsc
