#include "tsc/embedding.hpp"

#include "tsc/errors.hpp"

namespace tsc {

NodeEmbedder::NodeEmbedder(const TrafficGraph& graph, std::size_t embed_width, Rng& rng)
    : graph_(&graph), max_in_degree_(graph.max_in_degree()) {
    net_ = MlpBuilder(kEdgeFeatureWidth).affine_relu(embed_width).build(rng);
}

NodeEmbedder::NodeEmbedder(const TrafficGraph& graph, BreluMlp net)
    : graph_(&graph), max_in_degree_(graph.max_in_degree()), net_(std::move(net)) {
    if (net_.input_width() != kEdgeFeatureWidth) {
        throw ShapeError("node embedder: net input width must be " +
                         std::to_string(kEdgeFeatureWidth));
    }
}

std::size_t NodeEmbedder::in_degree(std::size_t agent) const {
    return graph_->nodes()[graph_->intersections()[agent]].incoming.size();
}

Vec NodeEmbedder::edge_feature(const Vec& obs, std::size_t slot) const {
    Vec f(kEdgeFeatureWidth, 0.0);
    for (std::size_t p = 0; p < 4; ++p) f[p] = obs[p];
    f[4] = obs[4 + slot];
    f[5] = obs[4 + max_in_degree_ + slot];
    return f;
}

std::vector<Vec> NodeEmbedder::embed(const std::vector<Vec>& obs) const {
    Trace scratch;
    return embed(obs, scratch);
}

std::vector<Vec> NodeEmbedder::embed(const std::vector<Vec>& obs, Trace& trace) const {
    const std::size_t n = graph_->intersection_count();
    if (obs.size() != n) throw ShapeError("embed: observation batch size mismatch");
    trace.per_edge.assign(n, {});
    std::vector<Vec> out(n, Vec(embed_width(), 0.0));
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t deg = in_degree(a);
        trace.per_edge[a].resize(deg);
        for (std::size_t j = 0; j < deg; ++j) {
            const Vec h = net_.forward(edge_feature(obs[a], j), trace.per_edge[a][j]);
            for (std::size_t d = 0; d < h.size(); ++d) out[a][d] += h[d];
        }
        if (deg > 0) {
            for (double& v : out[a]) v /= static_cast<double>(deg);
        }
    }
    return out;
}

void NodeEmbedder::backward(const Trace& trace, const std::vector<Vec>& d_embed,
                            MlpGradients& grads) const {
    for (std::size_t a = 0; a < trace.per_edge.size(); ++a) {
        const std::size_t deg = trace.per_edge[a].size();
        if (deg == 0) continue;
        Vec d = d_embed[a];
        for (double& v : d) v /= static_cast<double>(deg);
        for (std::size_t j = 0; j < deg; ++j) {
            net_.backward(trace.per_edge[a][j], d, grads);
        }
    }
}

}  // namespace tsc
