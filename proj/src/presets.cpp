#include <array>
#include <cstdio>
#include <string>

#include "tsc/errors.hpp"
#include "tsc/traffic_graph.hpp"

namespace tsc {

namespace {

struct GraphDraft {
    std::vector<GraphNode> nodes;
    std::vector<RoadEdge> edges;
    std::vector<DemandSource> sources;
    std::map<std::string, std::string> meta;
    std::map<std::string, std::size_t> node_ids;

    std::size_t node(const std::string& id, bool signalized) {
        auto it = node_ids.find(id);
        if (it != node_ids.end()) return it->second;
        GraphNode n;
        n.id = id;
        n.signalized = signalized;
        node_ids.emplace(id, nodes.size());
        nodes.push_back(std::move(n));
        return nodes.size() - 1;
    }

    std::size_t edge(std::size_t from, std::size_t to, int lanes, double length,
                     double speed) {
        RoadEdge e;
        e.id = "e:" + nodes[from].id + ":" + nodes[to].id;
        e.from = from;
        e.to = to;
        e.lanes = lanes;
        e.length_m = length;
        e.speed_mps = speed;
        edges.push_back(std::move(e));
        return edges.size() - 1;
    }

    // Both directions; returns (a->b, b->a).
    std::pair<std::size_t, std::size_t> road(std::size_t a, std::size_t b,
                                             int lanes, double length,
                                             double speed) {
        const std::size_t ab = edge(a, b, lanes, length, speed);
        const std::size_t ba = edge(b, a, lanes, length, speed);
        return {ab, ba};
    }
};

// Four singleton stages cycling over the incoming edges (split phasing);
// covers every approach for in-degree <= 4.
std::vector<std::vector<std::size_t>> split_stages(
    const std::vector<std::size_t>& incoming) {
    std::vector<std::vector<std::size_t>> stages(4);
    for (std::size_t s = 0; s < 4; ++s) {
        stages[s] = {incoming[s % incoming.size()]};
    }
    return stages;
}

TrafficGraph make_grid(std::size_t rows, std::size_t cols) {
    const double kLength = 100.0;
    const double kSpeed = 13.89;
    const int kLanes = 3;
    const double kVehPerIntersection = 37.2;  // 930 over a 5x5 grid
    const double kEpisodeSeconds = 2500.0;

    GraphDraft d;
    auto iid = [](std::size_t r, std::size_t c) {
        return "i" + std::to_string(r) + "_" + std::to_string(c);
    };
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) d.node(iid(r, c), true);

    // incoming edge per intersection per approach, ordered N, E, S, W
    std::map<std::size_t, std::array<std::size_t, 4>> approach;
    auto connect = [&](std::size_t a, std::size_t b, int dir_at_b, int dir_at_a) {
        auto [ab, ba] = d.road(a, b, kLanes, kLength, kSpeed);
        approach[b][dir_at_b] = ab;
        approach[a][dir_at_a] = ba;
    };
    enum { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t here = d.node_ids.at(iid(r, c));
            if (c + 1 < cols) {
                // here -> east neighbour arrives at its west approach
                connect(here, d.node_ids.at(iid(r, c + 1)), kWest, kEast);
            }
            if (r + 1 < rows) {
                connect(here, d.node_ids.at(iid(r + 1, c)), kNorth, kSouth);
            }
        }
    }
    std::vector<std::size_t> entry_edges;
    auto boundary = [&](const std::string& bid, std::size_t inter, int dir) {
        const std::size_t b = d.node(bid, false);
        auto [in, out] = d.road(b, inter, kLanes, kLength, kSpeed);
        approach[inter][dir] = in;
        entry_edges.push_back(in);
        (void)out;
    };
    for (std::size_t c = 0; c < cols; ++c) {
        boundary("bn" + std::to_string(c), d.node_ids.at(iid(0, c)), kNorth);
        boundary("bs" + std::to_string(c), d.node_ids.at(iid(rows - 1, c)), kSouth);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        boundary("bw" + std::to_string(r), d.node_ids.at(iid(r, 0)), kWest);
        boundary("be" + std::to_string(r), d.node_ids.at(iid(r, cols - 1)), kEast);
    }

    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t here = d.node_ids.at(iid(r, c));
            const auto& app = approach.at(here);
            d.nodes[here].stages = {{app[kNorth]}, {app[kEast]}, {app[kSouth]}, {app[kWest]}};
        }
    }

    const double total = kVehPerIntersection * static_cast<double>(rows * cols);
    const double rate = total / kEpisodeSeconds / static_cast<double>(entry_edges.size());
    for (std::size_t e : entry_edges) d.sources.push_back({e, rate});

    d.meta["preset"] = "grid" + std::to_string(rows) + "x" + std::to_string(cols);
    return build_graph(std::move(d.nodes), std::move(d.edges), std::move(d.sources),
                       std::move(d.meta));
}

struct Link {
    std::string a, b;
    double length;
};

TrafficGraph make_irregular(const std::string& name,
                            const std::vector<Link>& internal,
                            const std::vector<Link>& boundary,
                            double vehicles_per_episode) {
    const double kSpeed = 13.89;
    const int kLanes = 2;
    const double kEpisodeSeconds = 2500.0;

    GraphDraft d;
    for (const auto& link : internal) {
        d.node(link.a, true);
        d.node(link.b, true);
    }
    std::map<std::size_t, std::vector<std::size_t>> incoming;
    for (const auto& link : internal) {
        const std::size_t a = d.node_ids.at(link.a);
        const std::size_t b = d.node_ids.at(link.b);
        auto [ab, ba] = d.road(a, b, kLanes, link.length, kSpeed);
        incoming[b].push_back(ab);
        incoming[a].push_back(ba);
    }
    std::vector<std::size_t> entry_edges;
    for (const auto& link : boundary) {
        const std::size_t b = d.node(link.a, false);
        const std::size_t inter = d.node_ids.at(link.b);
        auto [in, out] = d.road(b, inter, kLanes, link.length, kSpeed);
        incoming[inter].push_back(in);
        entry_edges.push_back(in);
        (void)out;
    }
    for (auto& [node, in_edges] : incoming) {
        d.nodes[node].stages = split_stages(in_edges);
    }
    const double rate =
        vehicles_per_episode / kEpisodeSeconds / static_cast<double>(entry_edges.size());
    for (std::size_t e : entry_edges) d.sources.push_back({e, rate});
    d.meta["preset"] = name;
    return build_graph(std::move(d.nodes), std::move(d.edges), std::move(d.sources),
                       std::move(d.meta));
}

// Eight intersections, irregular connectivity, road lengths 75-150 m,
// ten external inputs, ~250 vehicles per episode.
TrafficGraph make_non_euclidean8() {
    const std::vector<Link> internal = {
        {"v1", "v2", 120}, {"v2", "v3", 100}, {"v3", "v4", 90},
        {"v4", "v5", 110}, {"v5", "v6", 75},  {"v6", "v7", 150},
        {"v7", "v8", 85},  {"v8", "v1", 130}, {"v2", "v7", 95},
        {"v3", "v6", 140},
    };
    const std::vector<Link> boundary = {
        {"b1", "v1", 80},  {"b2", "v1", 125}, {"b3", "v4", 75},
        {"b4", "v4", 135}, {"b5", "v5", 100}, {"b6", "v5", 115},
        {"b7", "v8", 95},  {"b8", "v8", 145}, {"b9", "v2", 90},
        {"b10", "v3", 105},
    };
    return make_irregular("non_euclidean8", internal, boundary, 250.0);
}

// Four-intersection variant for desk-scale ablation runs.
TrafficGraph make_non_euclidean4() {
    const std::vector<Link> internal = {
        {"v1", "v2", 100},
        {"v2", "v3", 85},
        {"v3", "v4", 120},
        {"v4", "v1", 95},
    };
    const std::vector<Link> boundary = {
        {"b1", "v1", 90}, {"b2", "v2", 110}, {"b3", "v2", 75},
        {"b4", "v3", 130}, {"b5", "v4", 100},
    };
    return make_irregular("non_euclidean4", internal, boundary, 150.0);
}

bool parse_grid_name(const std::string& name, std::size_t& rows, std::size_t& cols) {
    unsigned long r = 0, c = 0;
    if (std::sscanf(name.c_str(), "grid%lux%lu", &r, &c) != 2) return false;
    if (r == 0 || c == 0 || r > 50 || c > 50) return false;
    if (name != "grid" + std::to_string(r) + "x" + std::to_string(c)) return false;
    rows = r;
    cols = c;
    return true;
}

}  // namespace

bool is_preset_name(const std::string& name) {
    std::size_t r, c;
    return name == "non_euclidean8" || name == "non_euclidean4" ||
           parse_grid_name(name, r, c);
}

TrafficGraph load_preset(const std::string& name) {
    std::size_t rows, cols;
    if (parse_grid_name(name, rows, cols)) return make_grid(rows, cols);
    if (name == "non_euclidean8") return make_non_euclidean8();
    if (name == "non_euclidean4") return make_non_euclidean4();
    throw ConfigError("unknown network preset '" + name + "'");
}

}  // namespace tsc
