#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tsc {

using Vec = std::vector<double>;

// Dense row-major tensor. Gradient storage is allocated lazily by training
// code; when present it has the same shape as the values.
struct Tensor {
    std::vector<std::size_t> shape;
    Vec values;
    Vec grad;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_in, double fill = 0.0);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Tensor vector(std::size_t n, double fill = 0.0);

    std::size_t size() const { return values.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

    bool has_grad() const { return grad.size() == values.size(); }
    void ensure_grad();
    void zero_grad();

    // Throws ShapeError when the invariant product(shape) == values.size()
    // is broken or a grad of the wrong shape is attached.
    void check_invariants(const std::string& name) const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace tsc
