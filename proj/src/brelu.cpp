#include "tsc/brelu.hpp"

#include <string>

#include "tsc/errors.hpp"

namespace tsc {

BiasGrid::BiasGrid(std::vector<std::vector<double>> biases)
    : biases_(std::move(biases)) {
    for (std::size_t i = 0; i < biases_.size(); ++i) {
        const auto& row = biases_[i];
        if (row.empty()) {
            throw ConfigError("bias grid: dimension " + std::to_string(i) +
                              " has no biases (q_i >= 1 required)");
        }
        for (std::size_t q = 1; q < row.size(); ++q) {
            if (!(row[q - 1] < row[q])) {
                throw ConfigError("bias grid: dimension " + std::to_string(i) +
                                  " is not strictly increasing");
            }
        }
        total_ += row.size();
    }
}

BiasGrid BiasGrid::uniform(std::size_t dims, const std::vector<double>& biases) {
    return BiasGrid(std::vector<std::vector<double>>(dims, biases));
}

std::vector<double> brelu_bias_row(double nu, double eta) {
    if (!(nu > 0.0)) {
        throw NumericError("bias grid: degenerate input distribution (nu = " +
                           std::to_string(nu) + ", must be > 0)");
    }
    return {-3.0 * nu + eta, -0.824 * nu + eta, -0.248 * nu + eta,
            0.248 * nu + eta, 0.834 * nu + eta};
}

BiasGrid brelu_bias_grid(std::size_t dims, double nu, double eta) {
    return BiasGrid::uniform(dims, brelu_bias_row(nu, eta));
}

Vec brelu_forward(const Vec& x, const BiasGrid& grid) {
    if (x.size() != grid.input_dims()) {
        throw ShapeError("brelu: input width " + std::to_string(x.size()) +
                         " != grid dims " + std::to_string(grid.input_dims()));
    }
    Vec y;
    y.reserve(grid.output_dims());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (double beta : grid.biases_for(i)) {
            const double v = x[i] - beta;
            y.push_back(v > 0.0 ? v : 0.0);
        }
    }
    return y;
}

Vec brelu_backward(const Vec& x, const BiasGrid& grid, const Vec& dy) {
    if (x.size() != grid.input_dims()) {
        throw ShapeError("brelu backward: input width mismatch");
    }
    if (dy.size() != grid.output_dims()) {
        throw ShapeError("brelu backward: output gradient width mismatch");
    }
    Vec dx(x.size(), 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (double beta : grid.biases_for(i)) {
            if (x[i] > beta) dx[i] += dy[k];
            ++k;
        }
    }
    return dx;
}

}  // namespace tsc
