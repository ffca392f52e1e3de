#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "tsc/ehh.hpp"
#include "tsc/tensor.hpp"

namespace tsc {

// Per-column affine normalization fitted on training data.
struct Standardizer {
    Vec mean;
    Vec std;

    static Standardizer fit(const std::vector<Vec>& rows, std::size_t n_rows = 0);
    Vec apply(const Vec& row) const;
    Vec invert(const Vec& row) const;
};

// Dimension-reducing linear transform followed by an EHH network; the whole
// map stays continuous piecewise linear.
struct JointEhhModel {
    Standardizer input_std;
    Tensor transform;  // ehh_input_dim x raw_input_dim
    EhhNetwork ehh;

    Vec to_ehh_input(const Vec& raw) const;
    Vec predict(const Vec& raw) const;
    std::size_t parameter_count() const {
        return transform.size() + ehh.parameter_count();
    }

    nlohmann::json to_json() const;
    static JointEhhModel from_json(const nlohmann::json& j);
};

struct JointFitOptions {
    std::size_t ehh_input_dim = 8;
    std::int64_t min_node_cap = 64;
    double l1_penalty = 1e-4;
    std::size_t iters = 400;
    double learning_rate = 0.01;
    std::size_t val_check_every = 0;  // 0 = no validation-based selection
};

struct JointFitReport {
    double train_mse = 0.0;
    double train_r2 = 0.0;
    double val_r2 = 0.0;
    double best_val_rmse = 0.0;
    std::size_t best_iter = 0;
};

// Fits transform + EHH output weights to (x, y) by least-squares
// initialization and joint adam refinement. Rows [0, n_train) train the
// model; rows [n_train, n_train + n_val) drive best-iterate selection when
// val_check_every > 0 and fill the validation metrics.
JointEhhModel joint_ehh_fit(const std::vector<Vec>& x_raw, const std::vector<Vec>& y,
                            std::size_t n_train, std::size_t n_val,
                            const JointFitOptions& opts, std::uint64_t seed,
                            JointFitReport* report = nullptr);

// R^2 against the global target mean; NaN when the targets are constant.
double r_squared(const std::vector<Vec>& pred, const std::vector<Vec>& target);

}  // namespace tsc
