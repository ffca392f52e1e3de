#include "tsc/ehh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsc/errors.hpp"
#include "tsc/rng.hpp"

namespace tsc {

EhhNetwork::EhhNetwork(BiasGrid grids, std::vector<EhhMinNode> min_nodes,
                       std::size_t output_dim)
    : grids_(std::move(grids)),
      min_nodes_(std::move(min_nodes)),
      output_dim_(output_dim) {
    for (std::size_t m = 0; m < grids_.input_dims(); ++m) {
        for (double beta : grids_.biases_for(m)) sources_.push_back({m, beta});
    }
    for (std::size_t n = 0; n < min_nodes_.size(); ++n) {
        const auto& node = min_nodes_[n];
        if (node.sources.size() < 2) {
            throw ConfigError("ehh: min-node " + std::to_string(n) +
                              " has order < 2");
        }
        std::vector<std::size_t> dims;
        for (std::size_t s : node.sources) {
            if (s >= sources_.size()) {
                throw ConfigError("ehh: min-node " + std::to_string(n) +
                                  " references missing source node");
            }
            dims.push_back(sources_[s].dim);
        }
        std::sort(dims.begin(), dims.end());
        if (std::adjacent_find(dims.begin(), dims.end()) != dims.end()) {
            throw ConfigError("ehh: min-node " + std::to_string(n) +
                              " mixes source nodes from the same input dimension");
        }
    }
    alpha_ = Tensor::matrix(node_count(), output_dim_);
    alpha0_.assign(output_dim_, 0.0);
}

Vec EhhNetwork::node_values(const Vec& x) const {
    if (x.size() != input_dim()) {
        throw ShapeError("ehh: input width " + std::to_string(x.size()) +
                         " != " + std::to_string(input_dim()));
    }
    Vec z(node_count(), 0.0);
    for (std::size_t s = 0; s < sources_.size(); ++s) {
        const double v = x[sources_[s].dim] - sources_[s].bias;
        z[s] = v > 0.0 ? v : 0.0;
    }
    for (std::size_t n = 0; n < min_nodes_.size(); ++n) {
        double best = z[min_nodes_[n].sources[0]];
        for (std::size_t k = 1; k < min_nodes_[n].sources.size(); ++k) {
            best = std::min(best, z[min_nodes_[n].sources[k]]);
        }
        z[sources_.size() + n] = best;
    }
    return z;
}

Vec EhhNetwork::forward_from_nodes(const Vec& z) const {
    Vec out = alpha0_;
    for (std::size_t n = 0; n < z.size(); ++n) {
        if (z[n] == 0.0) continue;
        const double* row = alpha_.values.data() + n * output_dim_;
        for (std::size_t o = 0; o < output_dim_; ++o) out[o] += row[o] * z[n];
    }
    return out;
}

Vec EhhNetwork::forward(const Vec& x) const {
    return forward_from_nodes(node_values(x));
}

Vec EhhNetwork::input_gradient(const Vec& x, const Vec& output_grad) const {
    if (output_grad.size() != output_dim_) {
        throw ShapeError("ehh: output gradient width mismatch");
    }
    const Vec z = node_values(x);
    // dLoss/dz per node.
    Vec dz(node_count(), 0.0);
    for (std::size_t n = 0; n < node_count(); ++n) {
        const double* row = alpha_.values.data() + n * output_dim_;
        double acc = 0.0;
        for (std::size_t o = 0; o < output_dim_; ++o) acc += row[o] * output_grad[o];
        dz[n] = acc;
    }
    // Min nodes route their gradient to the argmin source (first wins ties).
    for (std::size_t n = 0; n < min_nodes_.size(); ++n) {
        const auto& srcs = min_nodes_[n].sources;
        std::size_t arg = srcs[0];
        for (std::size_t k = 1; k < srcs.size(); ++k) {
            if (z[srcs[k]] < z[arg]) arg = srcs[k];
        }
        dz[arg] += dz[sources_.size() + n];
    }
    Vec dx(input_dim(), 0.0);
    for (std::size_t s = 0; s < sources_.size(); ++s) {
        if (x[sources_[s].dim] > sources_[s].bias) dx[sources_[s].dim] += dz[s];
    }
    return dx;
}

nlohmann::json EhhNetwork::to_json() const {
    nlohmann::json j;
    j["input_dim"] = input_dim();
    j["output_dim"] = output_dim_;
    j["bias_lists"] = grids_.biases();
    nlohmann::json mins = nlohmann::json::array();
    for (const auto& node : min_nodes_) mins.push_back(node.sources);
    j["min_nodes"] = std::move(mins);
    nlohmann::json srcs = nlohmann::json::array();
    for (const auto& s : sources_) srcs.push_back({{"dim", s.dim}, {"bias", s.bias}});
    j["sources"] = std::move(srcs);
    j["alpha"] = alpha_.values;
    j["alpha0"] = alpha0_;
    return j;
}

EhhNetwork EhhNetwork::from_json(const nlohmann::json& j) {
    BiasGrid grids(j.at("bias_lists").get<std::vector<std::vector<double>>>());
    std::vector<EhhMinNode> mins;
    for (const auto& jm : j.at("min_nodes")) {
        mins.push_back({jm.get<std::vector<std::size_t>>()});
    }
    EhhNetwork net(std::move(grids), std::move(mins),
                   j.at("output_dim").get<std::size_t>());
    net.alpha_.values = j.at("alpha").get<Vec>();
    net.alpha_.check_invariants("ehh alpha");
    net.alpha0_ = j.at("alpha0").get<Vec>();
    if (net.alpha0_.size() != net.output_dim_) {
        throw ConfigError("ehh checkpoint: alpha0 width mismatch");
    }
    return net;
}

namespace {

// Enumerates index combinations of `order` distinct dimensions and one
// source per chosen dimension.
void enumerate_combinations(const std::vector<std::vector<std::size_t>>& by_dim,
                            std::size_t order, std::size_t first_dim,
                            std::vector<std::size_t>& current,
                            std::vector<EhhMinNode>& out) {
    if (current.size() == order) {
        out.push_back({current});
        return;
    }
    const std::size_t remaining = order - current.size();
    for (std::size_t m = first_dim; m + remaining <= by_dim.size(); ++m) {
        for (std::size_t s : by_dim[m]) {
            current.push_back(s);
            enumerate_combinations(by_dim, order, m + 1, current, out);
            current.pop_back();
        }
    }
}

}  // namespace

EhhNetwork ehh_generate(const BiasGrid& grids, std::size_t max_order,
                        std::int64_t candidate_cap, std::size_t output_dim,
                        std::uint64_t seed) {
    if (candidate_cap < 0) {
        throw ConfigError("ehh generate: candidate cap must be >= 0, got " +
                          std::to_string(candidate_cap));
    }
    if (grids.input_dims() == 0) {
        throw ConfigError("ehh generate: input dimension must be >= 1");
    }
    std::vector<std::vector<std::size_t>> by_dim(grids.input_dims());
    std::size_t idx = 0;
    for (std::size_t m = 0; m < grids.input_dims(); ++m) {
        for (std::size_t q = 0; q < grids.biases_for(m).size(); ++q) {
            by_dim[m].push_back(idx++);
        }
    }
    Rng rng(derive_seed(seed, "ehh-structure"));
    std::vector<EhhMinNode> chosen;
    for (std::size_t order = 2; order <= max_order; ++order) {
        std::vector<EhhMinNode> candidates;
        std::vector<std::size_t> current;
        enumerate_combinations(by_dim, order, 0, current, candidates);
        rng.shuffle(candidates);
        const std::size_t take = std::min<std::size_t>(
            candidates.size(), static_cast<std::size_t>(candidate_cap));
        chosen.insert(chosen.end(), candidates.begin(), candidates.begin() + take);
    }
    return EhhNetwork(grids, std::move(chosen), output_dim);
}

namespace {

struct LassoProblem {
    // Feature matrix (node values per sample), targets, sizes.
    const std::vector<Vec>& z;
    const std::vector<Vec>& y;
    std::size_t n_feat;
    std::size_t n_out;

    double mse(const Vec& a0, const Tensor& a) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            for (std::size_t o = 0; o < n_out; ++o) {
                double pred = a0[o];
                for (std::size_t f = 0; f < n_feat; ++f)
                    pred += a.values[f * n_out + o] * z[i][f];
                const double r = pred - y[i][o];
                acc += r * r;
            }
        }
        return acc / static_cast<double>(z.size());
    }

    // Gradient of the mean squared error at (a0, a).
    void gradient(const Vec& a0, const Tensor& a, Vec& g0, Tensor& g) const {
        std::fill(g0.begin(), g0.end(), 0.0);
        std::fill(g.values.begin(), g.values.end(), 0.0);
        const double scale = 2.0 / static_cast<double>(z.size());
        Vec resid(n_out);
        for (std::size_t i = 0; i < z.size(); ++i) {
            for (std::size_t o = 0; o < n_out; ++o) {
                double pred = a0[o];
                for (std::size_t f = 0; f < n_feat; ++f)
                    pred += a.values[f * n_out + o] * z[i][f];
                resid[o] = scale * (pred - y[i][o]);
                g0[o] += resid[o];
            }
            for (std::size_t f = 0; f < n_feat; ++f) {
                if (z[i][f] == 0.0) continue;
                for (std::size_t o = 0; o < n_out; ++o)
                    g.values[f * n_out + o] += resid[o] * z[i][f];
            }
        }
    }
};

double l1_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values) s += std::fabs(v);
    return s;
}

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

EhhTrainResult ehh_train(EhhNetwork& net, const std::vector<Vec>& inputs,
                         const std::vector<Vec>& targets, double l1_penalty,
                         const EhhTrainOptions& opts) {
    if (inputs.empty()) throw DataError("ehh train: empty dataset");
    if (inputs.size() != targets.size()) {
        throw DataError("ehh train: input/target count mismatch");
    }
    for (const auto& t : targets) {
        if (t.size() != net.output_dim()) {
            throw ShapeError("ehh train: target width != network output dim");
        }
    }

    std::vector<Vec> z(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) z[i] = net.node_values(inputs[i]);

    LassoProblem prob{z, targets, net.node_count(), net.output_dim()};

    // FISTA with backtracking (accelerated proximal gradient); alpha0 is
    // updated by the smooth step only.
    Vec a0 = net.alpha0();
    Tensor a = net.alpha();
    Vec y0 = a0;
    Tensor ya = a;
    Vec g0(prob.n_out, 0.0);
    Tensor ga = Tensor::matrix(prob.n_feat, prob.n_out);
    double step = 1.0;
    double t_momentum = 1.0;
    double prev_obj = prob.mse(a0, a) + l1_penalty * l1_norm(a);
    EhhTrainResult result;
    result.iters = opts.max_iters;

    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        const double f_y = prob.mse(y0, ya);
        prob.gradient(y0, ya, g0, ga);

        Vec next0;
        Tensor nexta;
        while (true) {
            next0 = y0;
            for (std::size_t o = 0; o < prob.n_out; ++o) next0[o] -= step * g0[o];
            nexta = ya;
            for (std::size_t k = 0; k < nexta.values.size(); ++k) {
                nexta.values[k] = soft_threshold(
                    ya.values[k] - step * ga.values[k], step * l1_penalty);
            }
            // Backtracking condition on the smooth part.
            double quad = f_y;
            double dist = 0.0;
            for (std::size_t o = 0; o < prob.n_out; ++o) {
                const double d = next0[o] - y0[o];
                quad += g0[o] * d;
                dist += d * d;
            }
            for (std::size_t k = 0; k < nexta.values.size(); ++k) {
                const double d = nexta.values[k] - ya.values[k];
                quad += ga.values[k] * d;
                dist += d * d;
            }
            quad += dist / (2.0 * step);
            if (prob.mse(next0, nexta) <= quad + 1e-15 || step < 1e-18) break;
            step *= 0.5;
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        const double mix = (t_momentum - 1.0) / t_next;
        y0 = next0;
        ya = nexta;
        for (std::size_t o = 0; o < prob.n_out; ++o)
            y0[o] += mix * (next0[o] - a0[o]);
        for (std::size_t k = 0; k < ya.values.size(); ++k)
            ya.values[k] += mix * (nexta.values[k] - a.values[k]);
        t_momentum = t_next;
        a0 = std::move(next0);
        a = std::move(nexta);

        const double obj = prob.mse(a0, a) + l1_penalty * l1_norm(a);
        if (std::fabs(prev_obj - obj) < opts.tol * std::max(1.0, std::fabs(prev_obj))) {
            result.iters = it + 1;
            prev_obj = obj;
            break;
        }
        prev_obj = obj;
    }

    net.alpha0() = a0;
    net.alpha() = a;
    result.mse = prob.mse(a0, a);
    result.objective = result.mse + l1_penalty * l1_norm(a);
    return result;
}

}  // namespace tsc
