#pragma once

#include <cstdint>
#include <vector>

#include "tsc/traffic_graph.hpp"

namespace tsc {

struct SpawnEvent {
    long step = 0;
    std::size_t source_edge = 0;
    std::vector<std::size_t> route;  // edge indices, source edge first
};

struct ArrivalSchedule {
    std::vector<SpawnEvent> events;  // sorted by step, stable per source order
    double expected_total = 0.0;
};

// Samples acyclic routes from a source edge to a boundary exit. For sources
// whose complete simple-route set fits under the enumeration cap the draw is
// uniform over that set; larger networks fall back to a uniform-per-junction
// random walk restricted to exit-preserving, non-revisiting moves.
class RoutePlanner {
public:
    explicit RoutePlanner(const TrafficGraph& graph,
                          std::size_t enumeration_cap = 20000);

    // Throws RoutingError when no boundary exit is reachable.
    std::vector<std::size_t> sample_route(std::size_t source_edge, class Rng& rng) const;

    bool enumerated(std::size_t source_edge) const;

private:
    const TrafficGraph& graph_;
    std::size_t cap_;
    // Routes per source edge when enumeration fit under the cap.
    std::map<std::size_t, std::vector<std::vector<std::size_t>>> enumerated_;
    std::vector<bool> exit_reachable_somewhere_;
};

// Poisson arrivals per boundary source per step; rates are vehicles/second.
// An empty rate vector uses the graph's source defaults. Identical seeds
// produce identical schedules.
ArrivalSchedule generate_demand(const TrafficGraph& graph, const RoutePlanner& planner,
                                const std::vector<double>& rates, std::uint64_t seed,
                                long horizon_steps, double dt_seconds);

}  // namespace tsc
