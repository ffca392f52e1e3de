#include "tsc/anova.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "tsc/errors.hpp"

namespace tsc {

Vec AnovaReport::combined() const {
    Vec out = sigma_main;
    for (const auto& [pair, sigma] : sigma_pairs) {
        out[pair.first] += 0.5 * sigma;
        out[pair.second] += 0.5 * sigma;
    }
    return out;
}

double AnovaReport::pair_sigma(std::size_t a, std::size_t b) const {
    if (a > b) std::swap(a, b);
    for (const auto& [pair, sigma] : sigma_pairs) {
        if (pair.first == a && pair.second == b) return sigma;
    }
    return 0.0;
}

AnovaReport anova_decompose(const EhhNetwork& net, const std::vector<Vec>& samples) {
    if (samples.empty()) throw DataError("anova: empty sample set");

    const std::size_t n_out = net.output_dim();
    const std::size_t n_nodes = net.node_count();
    const std::size_t n_src = net.source_count();

    // Term id per node: main terms first (one per dim), then pairs.
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_term;
    std::vector<std::size_t> term_of_node(n_nodes);
    for (std::size_t s = 0; s < n_src; ++s) term_of_node[s] = net.sources()[s].dim;
    std::size_t next_term = net.input_dim();
    for (std::size_t m = 0; m < net.min_nodes().size(); ++m) {
        const auto& srcs = net.min_nodes()[m].sources;
        if (srcs.size() != 2) {
            throw ConfigError("anova: only two-factor decomposition is supported "
                              "(found order-" + std::to_string(srcs.size()) + " node)");
        }
        std::size_t a = net.sources()[srcs[0]].dim;
        std::size_t b = net.sources()[srcs[1]].dim;
        if (a > b) std::swap(a, b);
        auto [it, inserted] = pair_term.try_emplace({a, b}, next_term);
        if (inserted) ++next_term;
        term_of_node[n_src + m] = it->second;
    }
    const std::size_t n_terms = next_term;

    // Population variance per (term, output component) via Welford.
    std::vector<Vec> mean(n_terms, Vec(n_out, 0.0));
    std::vector<Vec> m2(n_terms, Vec(n_out, 0.0));
    Vec term_value(n_out, 0.0);
    std::size_t count = 0;
    for (const auto& x : samples) {
        const Vec z = net.node_values(x);
        ++count;
        for (std::size_t term = 0; term < n_terms; ++term) {
            std::fill(term_value.begin(), term_value.end(), 0.0);
            for (std::size_t node = 0; node < n_nodes; ++node) {
                if (term_of_node[node] != term || z[node] == 0.0) continue;
                const double* row = net.alpha().values.data() + node * n_out;
                for (std::size_t o = 0; o < n_out; ++o)
                    term_value[o] += row[o] * z[node];
            }
            for (std::size_t o = 0; o < n_out; ++o) {
                const double delta = term_value[o] - mean[term][o];
                mean[term][o] += delta / static_cast<double>(count);
                m2[term][o] += delta * (term_value[o] - mean[term][o]);
            }
        }
    }

    AnovaReport report;
    report.input_dim = net.input_dim();
    report.sigma_main.assign(net.input_dim(), 0.0);
    auto total_sigma = [&](std::size_t term) {
        double var = 0.0;
        for (std::size_t o = 0; o < n_out; ++o)
            var += m2[term][o] / static_cast<double>(count);
        return std::sqrt(var);
    };
    for (std::size_t m = 0; m < net.input_dim(); ++m)
        report.sigma_main[m] = total_sigma(m);
    for (const auto& [dims, term] : pair_term)
        report.sigma_pairs.push_back({dims, total_sigma(term)});
    std::sort(report.sigma_pairs.begin(), report.sigma_pairs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return report;
}

InverseImportance importance_inverse(const Tensor& w, const Vec& sigma_m) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    if (sigma_m.size() != rows) {
        throw ShapeError("importance inverse: sigma length " +
                         std::to_string(sigma_m.size()) + " != transform rows " +
                         std::to_string(rows));
    }
    Eigen::MatrixXd mat(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) mat(r, c) = w.at(r, c);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(mat);
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    if (rank < static_cast<Eigen::Index>(std::min(rows, cols))) {
        // The permutation's trailing columns are the dependent ones.
        std::string cols_str;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index i = rank; i < perm.size(); ++i) {
            if (!cols_str.empty()) cols_str += ", ";
            cols_str += std::to_string(perm[i]);
        }
        throw SingularityError("importance inverse: transform is rank deficient "
                               "(rank " + std::to_string(rank) + " of " +
                               std::to_string(std::min(rows, cols)) +
                               "); dependent columns: " + cols_str);
    }

    Eigen::VectorXd s(rows);
    for (std::size_t r = 0; r < rows; ++r) s(r) = sigma_m[r];
    Eigen::VectorXd result;
    if (rows == cols) {
        result = qr.solve(s);
    } else {
        result = mat.completeOrthogonalDecomposition().pseudoInverse() * s;
    }

    InverseImportance out;
    out.sigma_in.resize(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        const double v = result(c);
        if (v < 0.0) {
            out.sigma_in[c] = 0.0;
            ++out.clamped_count;
        } else {
            out.sigma_in[c] = v;
        }
    }
    return out;
}

}  // namespace tsc
