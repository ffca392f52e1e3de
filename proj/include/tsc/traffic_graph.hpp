#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace tsc {

struct RoadEdge {
    std::string id;
    std::size_t from = 0;  // node indices
    std::size_t to = 0;
    int lanes = 1;
    double length_m = 0.0;
    double speed_mps = 13.89;
};

// A node is either a signalized intersection (has a four-stage phase
// program over its incoming edges) or a boundary point where vehicles
// enter and leave the network.
struct GraphNode {
    std::string id;
    bool signalized = false;
    std::vector<std::vector<std::size_t>> stages;  // 4 x incoming-edge indices
    std::vector<std::size_t> incoming;
    std::vector<std::size_t> outgoing;
};

struct DemandSource {
    std::size_t edge = 0;
    double rate_veh_per_s = 0.0;
};

class TrafficGraph {
public:
    TrafficGraph() = default;

    static TrafficGraph from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<RoadEdge>& edges() const { return edges_; }
    const std::vector<DemandSource>& sources() const { return sources_; }
    const std::map<std::string, std::string>& meta() const { return meta_; }

    // Signalized node indices in declaration order; their position in this
    // list is the agent index used everywhere else.
    const std::vector<std::size_t>& intersections() const { return intersections_; }
    std::size_t intersection_count() const { return intersections_.size(); }
    std::size_t max_in_degree() const { return max_in_degree_; }

    std::size_t node_index(const std::string& id) const;
    std::size_t edge_index(const std::string& id) const;
    bool is_boundary(std::size_t node) const { return !nodes_[node].signalized; }

    friend TrafficGraph build_graph(std::vector<GraphNode> nodes,
                                    std::vector<RoadEdge> edges,
                                    std::vector<DemandSource> sources,
                                    std::map<std::string, std::string> meta);

private:
    void finalize();  // index, wire incoming/outgoing, validate

    std::vector<GraphNode> nodes_;
    std::vector<RoadEdge> edges_;
    std::vector<DemandSource> sources_;
    std::map<std::string, std::string> meta_;
    std::vector<std::size_t> intersections_;
    std::map<std::string, std::size_t> node_by_id_;
    std::map<std::string, std::size_t> edge_by_id_;
    std::size_t max_in_degree_ = 0;
};

TrafficGraph build_graph(std::vector<GraphNode> nodes, std::vector<RoadEdge> edges,
                         std::vector<DemandSource> sources,
                         std::map<std::string, std::string> meta = {});

// Topology document (schema in README) or preset name.
TrafficGraph load_network(const nlohmann::json& doc);

// Presets: "gridRxC" (e.g. grid5x5, grid2x2), "non_euclidean8",
// "non_euclidean4". Throws ConfigError for unknown names.
TrafficGraph load_preset(const std::string& name);
bool is_preset_name(const std::string& name);

}  // namespace tsc
