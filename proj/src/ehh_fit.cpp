#include "tsc/ehh_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "tsc/errors.hpp"
#include "tsc/optim.hpp"
#include "tsc/rng.hpp"

namespace tsc {

Standardizer Standardizer::fit(const std::vector<Vec>& rows, std::size_t n_rows) {
    if (rows.empty()) throw DataError("standardizer: no rows");
    const std::size_t n = n_rows == 0 ? rows.size() : std::min(n_rows, rows.size());
    const std::size_t d = rows[0].size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.std.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) s.mean[c] += rows[i][c];
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) {
            const double v = rows[i][c] - s.mean[c];
            s.std[c] += v * v;
        }
    for (double& v : s.std) {
        v = std::sqrt(v / static_cast<double>(n));
        if (v < 1e-9) v = 1.0;  // constant column
    }
    return s;
}

Vec Standardizer::apply(const Vec& row) const {
    Vec out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = (row[i] - mean[i]) / std[i];
    return out;
}

Vec Standardizer::invert(const Vec& row) const {
    Vec out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] * std[i] + mean[i];
    return out;
}

Vec JointEhhModel::to_ehh_input(const Vec& raw) const {
    const Vec x = input_std.apply(raw);
    Vec out(transform.rows(), 0.0);
    for (std::size_t r = 0; r < transform.rows(); ++r) {
        const double* row = transform.values.data() + r * transform.cols();
        double acc = 0.0;
        for (std::size_t c = 0; c < transform.cols(); ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
    return out;
}

Vec JointEhhModel::predict(const Vec& raw) const {
    return ehh.forward(to_ehh_input(raw));
}

nlohmann::json JointEhhModel::to_json() const {
    return nlohmann::json{{"standardizer_mean", input_std.mean},
                          {"standardizer_std", input_std.std},
                          {"transform_shape", {transform.rows(), transform.cols()}},
                          {"transform", transform.values},
                          {"ehh", ehh.to_json()}};
}

JointEhhModel JointEhhModel::from_json(const nlohmann::json& j) {
    JointEhhModel m;
    m.input_std.mean = j.at("standardizer_mean").get<Vec>();
    m.input_std.std = j.at("standardizer_std").get<Vec>();
    const auto shape = j.at("transform_shape").get<std::vector<std::size_t>>();
    m.transform = Tensor::matrix(shape.at(0), shape.at(1));
    m.transform.values = j.at("transform").get<Vec>();
    m.transform.check_invariants("joint transform");
    m.ehh = EhhNetwork::from_json(j.at("ehh"));
    return m;
}

double r_squared(const std::vector<Vec>& pred, const std::vector<Vec>& target) {
    double mean = 0.0;
    std::size_t n = 0;
    for (const auto& t : target)
        for (double v : t) {
            mean += v;
            ++n;
        }
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    mean /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        for (std::size_t o = 0; o < target[i].size(); ++o) {
            const double r = target[i][o] - pred[i][o];
            ss_res += r * r;
            const double c = target[i][o] - mean;
            ss_tot += c * c;
        }
    }
    if (ss_tot == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - ss_res / ss_tot;
}

JointEhhModel joint_ehh_fit(const std::vector<Vec>& x_raw, const std::vector<Vec>& y,
                            std::size_t n_train, std::size_t n_val,
                            const JointFitOptions& opts, std::uint64_t seed,
                            JointFitReport* report) {
    if (x_raw.empty() || x_raw.size() != y.size()) {
        throw DataError("joint fit: empty or mismatched dataset");
    }
    if (n_train == 0 || n_train + n_val > x_raw.size()) {
        throw DataError("joint fit: bad train/validation row counts");
    }
    const std::size_t dim_in = x_raw[0].size();
    const std::size_t dim_out = y[0].size();
    const std::size_t dim_ehh = opts.ehh_input_dim;

    const Standardizer standardizer = Standardizer::fit(x_raw, n_train);
    std::vector<Vec> xstd(x_raw.size());
    for (std::size_t i = 0; i < x_raw.size(); ++i) xstd[i] = standardizer.apply(x_raw[i]);

    // Ridge least-squares map to the targets seeds the transform rows;
    // jitter keeps the rows independent and full rank.
    Eigen::MatrixXd X(n_train, dim_in), Y(n_train, dim_out);
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t c = 0; c < dim_in; ++c) X(i, c) = xstd[i][c];
        for (std::size_t o = 0; o < dim_out; ++o) Y(i, o) = y[i][o];
    }
    Eigen::MatrixXd gram = X.transpose() * X;
    gram.diagonal().array() += 1e-3;
    const Eigen::MatrixXd ls = gram.ldlt().solve(X.transpose() * Y);

    Rng init_rng(derive_seed(seed, "joint-fit-init"));
    Tensor w = Tensor::matrix(dim_ehh, dim_in);
    for (std::size_t r = 0; r < dim_ehh; ++r)
        for (std::size_t c = 0; c < dim_in; ++c)
            w.at(r, c) = ls(c, r % dim_out) + 0.01 * init_rng.normal();

    auto transform_with = [&](const Tensor& wt, const Vec& x) {
        Vec out(dim_ehh, 0.0);
        for (std::size_t r = 0; r < dim_ehh; ++r) {
            const double* row = wt.values.data() + r * dim_in;
            double acc = 0.0;
            for (std::size_t c = 0; c < dim_in; ++c) acc += row[c] * x[c];
            out[r] = acc;
        }
        return out;
    };

    // Bias grids from the transformed training inputs.
    Vec mu(dim_ehh, 0.0), sd(dim_ehh, 0.0);
    for (std::size_t i = 0; i < n_train; ++i) {
        const Vec t = transform_with(w, xstd[i]);
        for (std::size_t m = 0; m < dim_ehh; ++m) mu[m] += t[m];
    }
    for (double& v : mu) v /= static_cast<double>(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
        const Vec t = transform_with(w, xstd[i]);
        for (std::size_t m = 0; m < dim_ehh; ++m) {
            const double c = t[m] - mu[m];
            sd[m] += c * c;
        }
    }
    std::vector<std::vector<double>> bias_rows;
    for (std::size_t m = 0; m < dim_ehh; ++m) {
        const double nu = std::max(std::sqrt(sd[m] / static_cast<double>(n_train)), 1e-6);
        bias_rows.push_back(brelu_bias_row(nu, mu[m]));
    }

    EhhNetwork ehh = ehh_generate(BiasGrid(std::move(bias_rows)), 2,
                                  opts.min_node_cap, dim_out, seed);
    for (std::size_t o = 0; o < dim_out; ++o) {
        double m = 0.0;
        for (std::size_t i = 0; i < n_train; ++i) m += y[i][o];
        ehh.alpha0()[o] = m / static_cast<double>(n_train);
    }

    // Joint adam refinement of transform and output weights.
    Tensor alpha0 = Tensor::vector(dim_out);
    alpha0.values = ehh.alpha0();
    Optimizer opt({OptimMethod::Adam, opts.learning_rate});
    Tensor gw = Tensor::matrix(dim_ehh, dim_in);
    Tensor galpha = Tensor::matrix(ehh.node_count(), dim_out);
    Tensor galpha0 = Tensor::vector(dim_out);
    const double inv_n = 1.0 / static_cast<double>(n_train);

    Tensor best_w = w;
    Tensor best_alpha = ehh.alpha();
    Vec best_alpha0 = ehh.alpha0();
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_iter = 0;

    auto val_rmse = [&]() {
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = n_train; i < n_train + n_val; ++i) {
            const Vec pred = ehh.forward(transform_with(w, xstd[i]));
            for (std::size_t o = 0; o < dim_out; ++o) {
                const double r = pred[o] - y[i][o];
                acc += r * r;
                ++cnt;
            }
        }
        return std::sqrt(acc / static_cast<double>(cnt));
    };

    for (std::size_t it = 0; it < opts.iters; ++it) {
        std::fill(gw.values.begin(), gw.values.end(), 0.0);
        std::fill(galpha.values.begin(), galpha.values.end(), 0.0);
        std::fill(galpha0.values.begin(), galpha0.values.end(), 0.0);
        for (std::size_t i = 0; i < n_train; ++i) {
            const Vec xt = transform_with(w, xstd[i]);
            const Vec z = ehh.node_values(xt);
            Vec resid = ehh.forward_from_nodes(z);
            for (std::size_t o = 0; o < dim_out; ++o)
                resid[o] = 2.0 * inv_n * (resid[o] - y[i][o]);
            for (std::size_t o = 0; o < dim_out; ++o) galpha0.values[o] += resid[o];
            for (std::size_t nidx = 0; nidx < z.size(); ++nidx) {
                if (z[nidx] == 0.0) continue;
                for (std::size_t o = 0; o < dim_out; ++o)
                    galpha.values[nidx * dim_out + o] += z[nidx] * resid[o];
            }
            const Vec dxt = ehh.input_gradient(xt, resid);
            for (std::size_t r = 0; r < dim_ehh; ++r) {
                if (dxt[r] == 0.0) continue;
                double* row = gw.values.data() + r * dim_in;
                for (std::size_t c = 0; c < dim_in; ++c) row[c] += dxt[r] * xstd[i][c];
            }
        }
        for (std::size_t k = 0; k < galpha.values.size(); ++k) {
            const double a = ehh.alpha().values[k];
            galpha.values[k] +=
                opts.l1_penalty * (a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0));
        }
        opt.step({&w, &ehh.alpha(), &alpha0}, {&gw, &galpha, &galpha0},
                 {"transform", "ehh.alpha", "ehh.alpha0"});
        ehh.alpha0() = alpha0.values;

        if (opts.val_check_every > 0 && n_val > 0 &&
            ((it + 1) % opts.val_check_every == 0 || it + 1 == opts.iters)) {
            const double v = val_rmse();
            if (v < best_val) {
                best_val = v;
                best_w = w;
                best_alpha = ehh.alpha();
                best_alpha0 = ehh.alpha0();
                best_iter = it + 1;
            }
        }
    }

    if (opts.val_check_every > 0 && n_val > 0) {
        w = best_w;
        ehh.alpha() = best_alpha;
        ehh.alpha0() = best_alpha0;
    }

    JointEhhModel model{standardizer, std::move(w), std::move(ehh)};
    if (report) {
        std::vector<Vec> train_pred, val_pred, train_y, val_y;
        double mse = 0.0;
        std::size_t mse_n = 0;
        for (std::size_t i = 0; i < n_train + n_val; ++i) {
            Vec p = model.ehh.forward(transform_with(model.transform, xstd[i]));
            if (i < n_train) {
                for (std::size_t o = 0; o < dim_out; ++o) {
                    const double r = p[o] - y[i][o];
                    mse += r * r;
                    ++mse_n;
                }
                train_pred.push_back(std::move(p));
                train_y.push_back(y[i]);
            } else {
                val_pred.push_back(std::move(p));
                val_y.push_back(y[i]);
            }
        }
        report->train_mse = mse / static_cast<double>(mse_n);
        report->train_r2 = r_squared(train_pred, train_y);
        report->val_r2 = val_pred.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : r_squared(val_pred, val_y);
        report->best_val_rmse = best_val;
        report->best_iter = best_iter;
    }
    return model;
}

}  // namespace tsc
