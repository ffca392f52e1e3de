#include "tsc/traffic_graph.hpp"

#include <algorithm>
#include <set>

#include "tsc/errors.hpp"

namespace tsc {

std::size_t TrafficGraph::node_index(const std::string& id) const {
    auto it = node_by_id_.find(id);
    if (it == node_by_id_.end()) {
        throw ValidationError("unknown node id '" + id + "'");
    }
    return it->second;
}

std::size_t TrafficGraph::edge_index(const std::string& id) const {
    auto it = edge_by_id_.find(id);
    if (it == edge_by_id_.end()) {
        throw ValidationError("unknown edge id '" + id + "'");
    }
    return it->second;
}

void TrafficGraph::finalize() {
    std::vector<std::string> problems;

    node_by_id_.clear();
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        if (!node_by_id_.emplace(nodes_[n].id, n).second) {
            problems.push_back("duplicate node id '" + nodes_[n].id + "'");
        }
        nodes_[n].incoming.clear();
        nodes_[n].outgoing.clear();
    }
    edge_by_id_.clear();
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const auto& edge = edges_[e];
        if (!edge_by_id_.emplace(edge.id, e).second) {
            problems.push_back("duplicate edge id '" + edge.id + "'");
        }
        if (edge.from >= nodes_.size() || edge.to >= nodes_.size()) {
            problems.push_back("edge '" + edge.id + "' references a missing node");
            continue;
        }
        if (edge.from == edge.to) {
            problems.push_back("edge '" + edge.id + "' is a self-loop");
        }
        if (!(edge.length_m > 0.0)) {
            problems.push_back("edge '" + edge.id + "' has nonpositive length");
        }
        if (edge.lanes < 1) {
            problems.push_back("edge '" + edge.id + "' has lane count < 1");
        }
        if (!(edge.speed_mps > 0.0)) {
            problems.push_back("edge '" + edge.id + "' has nonpositive speed limit");
        }
        nodes_[edge.to].incoming.push_back(e);
        nodes_[edge.from].outgoing.push_back(e);
    }

    intersections_.clear();
    max_in_degree_ = 0;
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        auto& node = nodes_[n];
        if (!node.signalized) continue;
        intersections_.push_back(n);
        max_in_degree_ = std::max(max_in_degree_, node.incoming.size());
        if (node.stages.size() != 4) {
            problems.push_back("intersection '" + node.id + "' needs exactly 4 green stages");
            continue;
        }
        std::set<std::size_t> covered;
        for (const auto& stage : node.stages) {
            for (std::size_t e : stage) {
                if (std::find(node.incoming.begin(), node.incoming.end(), e) ==
                    node.incoming.end()) {
                    problems.push_back("intersection '" + node.id +
                                       "' stage references edge '" +
                                       (e < edges_.size() ? edges_[e].id : "?") +
                                       "' that is not incoming");
                } else {
                    covered.insert(e);
                }
            }
        }
        if (covered.size() != node.incoming.size()) {
            problems.push_back("intersection '" + node.id +
                               "' stages do not cover all incoming edges");
        }
    }

    for (const auto& src : sources_) {
        if (src.edge >= edges_.size()) {
            problems.push_back("demand source references a missing edge");
        } else if (src.rate_veh_per_s < 0.0) {
            problems.push_back("demand source on edge '" + edges_[src.edge].id +
                               "' has negative rate");
        }
    }

    if (!problems.empty()) {
        std::string msg = "topology validation failed:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw ValidationError(msg);
    }
}

TrafficGraph build_graph(std::vector<GraphNode> nodes, std::vector<RoadEdge> edges,
                         std::vector<DemandSource> sources,
                         std::map<std::string, std::string> meta) {
    TrafficGraph g;
    g.nodes_ = std::move(nodes);
    g.edges_ = std::move(edges);
    g.sources_ = std::move(sources);
    g.meta_ = std::move(meta);
    g.finalize();
    return g;
}

TrafficGraph TrafficGraph::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges")) {
        throw ValidationError("topology document must contain 'nodes' and 'edges'");
    }
    std::vector<GraphNode> nodes;
    std::map<std::string, std::size_t> node_ids;
    for (const auto& jn : doc.at("nodes")) {
        GraphNode node;
        node.id = jn.at("id").get<std::string>();
        node.signalized = jn.contains("phase_program") && !jn.at("phase_program").empty();
        node_ids.emplace(node.id, nodes.size());
        nodes.push_back(std::move(node));
    }
    std::vector<RoadEdge> edges;
    std::map<std::string, std::size_t> edge_ids;
    for (const auto& je : doc.at("edges")) {
        RoadEdge edge;
        edge.id = je.at("id").get<std::string>();
        const std::string from = je.at("from").get<std::string>();
        const std::string to = je.at("to").get<std::string>();
        if (!node_ids.count(from)) {
            throw ValidationError("edge '" + edge.id + "' references missing node '" + from + "'");
        }
        if (!node_ids.count(to)) {
            throw ValidationError("edge '" + edge.id + "' references missing node '" + to + "'");
        }
        edge.from = node_ids.at(from);
        edge.to = node_ids.at(to);
        edge.lanes = je.at("lanes").get<int>();
        edge.length_m = je.at("length_m").get<double>();
        edge.speed_mps = je.value("speed_mps", 13.89);
        edge_ids.emplace(edge.id, edges.size());
        edges.push_back(std::move(edge));
    }
    // Phase programs need edge indices, so resolve them second.
    {
        std::size_t n = 0;
        for (const auto& jn : doc.at("nodes")) {
            if (jn.contains("phase_program") && !jn.at("phase_program").empty()) {
                for (const auto& jstage : jn.at("phase_program")) {
                    std::vector<std::size_t> stage;
                    for (const auto& je : jstage) {
                        const std::string eid = je.get<std::string>();
                        if (!edge_ids.count(eid)) {
                            throw ValidationError("phase program of '" + nodes[n].id +
                                                  "' references missing edge '" + eid + "'");
                        }
                        stage.push_back(edge_ids.at(eid));
                    }
                    nodes[n].stages.push_back(std::move(stage));
                }
            }
            ++n;
        }
    }
    std::vector<DemandSource> sources;
    if (doc.contains("sources")) {
        for (const auto& js : doc.at("sources")) {
            DemandSource src;
            const std::string eid = js.at("edge").get<std::string>();
            if (!edge_ids.count(eid)) {
                throw ValidationError("demand source references missing edge '" + eid + "'");
            }
            src.edge = edge_ids.at(eid);
            src.rate_veh_per_s = js.at("rate_veh_per_s").get<double>();
            sources.push_back(src);
        }
    }
    std::map<std::string, std::string> meta;
    if (doc.contains("meta")) {
        for (const auto& [k, v] : doc.at("meta").items()) {
            meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    return build_graph(std::move(nodes), std::move(edges), std::move(sources),
                       std::move(meta));
}

nlohmann::json TrafficGraph::to_json() const {
    nlohmann::json jnodes = nlohmann::json::array();
    for (const auto& node : nodes_) {
        nlohmann::json jn{{"id", node.id}};
        if (node.signalized) {
            nlohmann::json jstages = nlohmann::json::array();
            for (const auto& stage : node.stages) {
                nlohmann::json js = nlohmann::json::array();
                for (std::size_t e : stage) js.push_back(edges_[e].id);
                jstages.push_back(std::move(js));
            }
            jn["phase_program"] = std::move(jstages);
        }
        jnodes.push_back(std::move(jn));
    }
    nlohmann::json jedges = nlohmann::json::array();
    for (const auto& edge : edges_) {
        jedges.push_back({{"id", edge.id},
                          {"from", nodes_[edge.from].id},
                          {"to", nodes_[edge.to].id},
                          {"lanes", edge.lanes},
                          {"length_m", edge.length_m},
                          {"speed_mps", edge.speed_mps}});
    }
    nlohmann::json jsources = nlohmann::json::array();
    for (const auto& src : sources_) {
        jsources.push_back({{"edge", edges_[src.edge].id},
                            {"rate_veh_per_s", src.rate_veh_per_s}});
    }
    return nlohmann::json{{"nodes", std::move(jnodes)},
                          {"edges", std::move(jedges)},
                          {"sources", std::move(jsources)},
                          {"meta", meta_}};
}

TrafficGraph load_network(const nlohmann::json& doc) {
    return TrafficGraph::from_json(doc);
}

}  // namespace tsc
