#include "tsc/demand.hpp"

#include <algorithm>
#include <deque>

#include "tsc/errors.hpp"
#include "tsc/rng.hpp"

namespace tsc {

namespace {

// Can a boundary node be reached from `start` without entering `blocked`?
bool exit_reachable(const TrafficGraph& g, std::size_t start,
                    const std::vector<bool>& blocked) {
    if (g.is_boundary(start)) return true;
    std::vector<bool> seen(g.nodes().size(), false);
    std::deque<std::size_t> frontier{start};
    seen[start] = true;
    while (!frontier.empty()) {
        const std::size_t n = frontier.front();
        frontier.pop_front();
        for (std::size_t e : g.nodes()[n].outgoing) {
            const std::size_t next = g.edges()[e].to;
            if (seen[next] || blocked[next]) continue;
            if (g.is_boundary(next)) return true;
            seen[next] = true;
            frontier.push_back(next);
        }
    }
    return false;
}

// Depth-first enumeration of all simple routes from `edge` to any boundary
// exit; gives up (returns false) once more than `cap` routes exist.
bool enumerate_routes(const TrafficGraph& g, std::size_t first_edge, std::size_t cap,
                      std::vector<std::vector<std::size_t>>& out) {
    std::vector<std::size_t> route{first_edge};
    std::vector<bool> visited(g.nodes().size(), false);
    visited[g.edges()[first_edge].from] = true;

    struct Frame {
        std::size_t node;
        std::size_t next_choice = 0;
    };
    std::vector<Frame> stack;
    auto enter = [&](std::size_t node) {
        visited[node] = true;
        stack.push_back({node, 0});
    };
    enter(g.edges()[first_edge].to);
    if (g.is_boundary(g.edges()[first_edge].to)) {
        out.push_back(route);
        return true;
    }
    while (!stack.empty()) {
        Frame& frame = stack.back();
        const auto& outgoing = g.nodes()[frame.node].outgoing;
        if (frame.next_choice >= outgoing.size()) {
            visited[frame.node] = false;
            stack.pop_back();
            if (!route.empty()) route.pop_back();
            continue;
        }
        const std::size_t e = outgoing[frame.next_choice++];
        const std::size_t next = g.edges()[e].to;
        if (visited[next]) continue;
        if (g.is_boundary(next)) {
            route.push_back(e);
            out.push_back(route);
            route.pop_back();
            if (out.size() > cap) return false;
            continue;
        }
        route.push_back(e);
        enter(next);
    }
    return true;
}

}  // namespace

RoutePlanner::RoutePlanner(const TrafficGraph& graph, std::size_t enumeration_cap)
    : graph_(graph), cap_(enumeration_cap) {
    exit_reachable_somewhere_.assign(graph.edges().size(), false);
    std::vector<bool> no_block(graph.nodes().size(), false);
    for (const auto& src : graph.sources()) {
        std::vector<bool> blocked(graph.nodes().size(), false);
        blocked[graph.edges()[src.edge].from] = true;
        exit_reachable_somewhere_[src.edge] =
            exit_reachable(graph, graph.edges()[src.edge].to, blocked);
        if (!exit_reachable_somewhere_[src.edge]) continue;
        std::vector<std::vector<std::size_t>> routes;
        if (enumerate_routes(graph, src.edge, cap_, routes)) {
            enumerated_.emplace(src.edge, std::move(routes));
        }
    }
}

bool RoutePlanner::enumerated(std::size_t source_edge) const {
    return enumerated_.count(source_edge) > 0;
}

std::vector<std::size_t> RoutePlanner::sample_route(std::size_t source_edge,
                                                    Rng& rng) const {
    if (source_edge < exit_reachable_somewhere_.size() &&
        !exit_reachable_somewhere_[source_edge]) {
        throw RoutingError("no boundary exit reachable from source edge '" +
                           graph_.edges()[source_edge].id + "'");
    }
    if (auto it = enumerated_.find(source_edge); it != enumerated_.end()) {
        if (it->second.empty()) {
            throw RoutingError("no boundary exit reachable from source edge '" +
                               graph_.edges()[source_edge].id + "'");
        }
        return it->second[rng.uniform_index(it->second.size())];
    }

    // Random-walk fallback: at each junction choose uniformly among
    // non-revisiting successors that keep some exit reachable.
    std::vector<std::size_t> route{source_edge};
    std::vector<bool> visited(graph_.nodes().size(), false);
    visited[graph_.edges()[source_edge].from] = true;
    std::size_t current = graph_.edges()[source_edge].to;
    visited[current] = true;
    while (!graph_.is_boundary(current)) {
        std::vector<std::size_t> candidates;
        for (std::size_t e : graph_.nodes()[current].outgoing) {
            const std::size_t next = graph_.edges()[e].to;
            if (visited[next]) continue;
            if (exit_reachable(graph_, next, visited)) candidates.push_back(e);
        }
        if (candidates.empty()) {
            throw RoutingError("route walk dead-ended at node '" +
                               graph_.nodes()[current].id + "'");
        }
        const std::size_t e = candidates[rng.uniform_index(candidates.size())];
        route.push_back(e);
        current = graph_.edges()[e].to;
        visited[current] = true;
    }
    return route;
}

ArrivalSchedule generate_demand(const TrafficGraph& graph, const RoutePlanner& planner,
                                const std::vector<double>& rates, std::uint64_t seed,
                                long horizon_steps, double dt_seconds) {
    std::vector<double> per_source = rates;
    if (per_source.empty()) {
        for (const auto& src : graph.sources()) per_source.push_back(src.rate_veh_per_s);
    }
    if (per_source.size() != graph.sources().size()) {
        throw ConfigError("demand rates: expected " +
                          std::to_string(graph.sources().size()) + " entries, got " +
                          std::to_string(per_source.size()));
    }
    for (double r : per_source) {
        if (r < 0.0) throw ConfigError("demand rates must be >= 0");
    }

    Rng rng(derive_seed(seed, "demand"));
    ArrivalSchedule schedule;
    for (long k = 0; k < horizon_steps; ++k) {
        for (std::size_t s = 0; s < graph.sources().size(); ++s) {
            const double mean = per_source[s] * dt_seconds;
            schedule.expected_total += mean;
            const int count = rng.poisson(mean);
            for (int c = 0; c < count; ++c) {
                SpawnEvent ev;
                ev.step = k;
                ev.source_edge = graph.sources()[s].edge;
                ev.route = planner.sample_route(ev.source_edge, rng);
                schedule.events.push_back(std::move(ev));
            }
        }
    }
    return schedule;
}

}  // namespace tsc
