#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "tsc/ehh.hpp"
#include "tsc/tensor.hpp"

namespace tsc {

// Two-factor variance decomposition of an EHH network over a sample set.
// Every hidden node belongs to exactly one term: source nodes to the main
// term of their dimension, order-2 min nodes to the pair term of their two
// dimensions. Sigmas are population standard deviations of the term values;
// multi-output networks use the total variance summed over components.
struct AnovaReport {
    std::size_t input_dim = 0;
    Vec sigma_main;  // per input component
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> sigma_pairs;

    // Single per-component vector: main importance plus half of each pair
    // importance credited to both members.
    Vec combined() const;
    double pair_sigma(std::size_t a, std::size_t b) const;
};

AnovaReport anova_decompose(const EhhNetwork& net, const std::vector<Vec>& samples);

struct InverseImportance {
    Vec sigma_in;
    int clamped_count = 0;  // negative entries zeroed
};

// Maps hidden-input importances back through the linear transform W
// (x_tilde = W * x_in): exact inverse when square, Moore-Penrose
// pseudo-inverse otherwise. Throws SingularityError naming the dependent
// columns when W is rank deficient.
InverseImportance importance_inverse(const Tensor& w, const Vec& sigma_m);

}  // namespace tsc
