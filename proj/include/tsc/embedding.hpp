#pragma once

#include <vector>

#include "tsc/mlp.hpp"
#include "tsc/traffic_graph.hpp"

namespace tsc {

// Maps each incoming edge's traffic record [phase one-hot, queue, density]
// through a shared one-layer ReLU MLP and averages over the intersection's
// incoming edges to produce the node embedding.
class NodeEmbedder {
public:
    NodeEmbedder(const TrafficGraph& graph, std::size_t embed_width, Rng& rng);
    NodeEmbedder(const TrafficGraph& graph, BreluMlp net);

    static constexpr std::size_t kEdgeFeatureWidth = 6;  // 4 phase + queue + density

    std::size_t embed_width() const { return net_.output_width(); }
    const BreluMlp& net() const { return net_; }
    BreluMlp& net() { return net_; }

    // Per-edge feature for agent `a`, incoming-edge slot `j`, taken from
    // that agent's observation vector.
    Vec edge_feature(const Vec& obs, std::size_t slot) const;
    std::size_t in_degree(std::size_t agent) const;

    struct Trace {
        std::vector<std::vector<MlpTrace>> per_edge;  // [agent][slot]
    };

    std::vector<Vec> embed(const std::vector<Vec>& obs) const;
    std::vector<Vec> embed(const std::vector<Vec>& obs, Trace& trace) const;

    // Accumulates dLoss/dnet given dLoss/dembedding per agent.
    void backward(const Trace& trace, const std::vector<Vec>& d_embed,
                  MlpGradients& grads) const;

private:
    const TrafficGraph* graph_;
    std::size_t max_in_degree_;
    BreluMlp net_;
};

}  // namespace tsc
