#include "tsc/tensor.hpp"

#include "tsc/errors.hpp"

namespace tsc {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape_in, double fill)
    : shape(std::move(shape_in)), values(shape_product(shape), fill) {}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
    return Tensor({rows, cols}, fill);
}

Tensor Tensor::vector(std::size_t n, double fill) { return Tensor({n}, fill); }

void Tensor::ensure_grad() {
    if (!has_grad()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

void Tensor::check_invariants(const std::string& name) const {
    if (shape_product(shape) != values.size()) {
        throw ShapeError("tensor '" + name + "': shape product " +
                         std::to_string(shape_product(shape)) +
                         " != value count " + std::to_string(values.size()));
    }
    if (!grad.empty() && grad.size() != values.size()) {
        throw ShapeError("tensor '" + name + "': grad size " +
                         std::to_string(grad.size()) + " != value count " +
                         std::to_string(values.size()));
    }
}

}  // namespace tsc
