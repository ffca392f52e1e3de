#pragma once

#include <deque>
#include <map>
#include <vector>

#include "tsc/demand.hpp"
#include "tsc/traffic_graph.hpp"

namespace tsc {

struct SimConfig {
    double dt_seconds = 5.0;
    double saturation_flow = 0.5;  // vehicles per lane per second of green
    double vehicle_gap_m = 7.5;    // tau in the density formula
    double yellow_seconds = 2.0;
    double min_green_seconds = 5.0;
    double max_green_seconds = 50.0;
};

struct PhaseState {
    int stage = 0;
    bool in_yellow = false;
    double yellow_left = 0.0;
    int pending_stage = 0;
    double green_elapsed = 0.0;
};

// Logged at every green -> green transition for phase-safety auditing.
struct PhaseEvent {
    long step = 0;
    std::size_t agent = 0;
    int from_stage = 0;
    int to_stage = 0;
    double yellow_seconds = 0.0;
    double green_dwell = 0.0;  // length of the green that just ended
};

// Discrete-time queue simulator. Per step: scheduled arrivals enter, transit
// vehicles reach the queue tail, green queues discharge at the saturation
// rate onto the next route edge (or exit at a boundary), waiting time
// accrues per queued vehicle, and vehicle conservation is re-checked.
class Simulator {
public:
    Simulator(const TrafficGraph& graph, SimConfig cfg);

    void reset(ArrivalSchedule schedule);

    // Desired green stage per agent; min/max green and yellow interlocks are
    // enforced here. Call before step(); holding is the default.
    void request_stages(const std::vector<int>& stages);
    void step();

    long clock_step() const { return clock_; }
    double dt() const { return cfg_.dt_seconds; }
    const TrafficGraph& graph() const { return graph_; }
    const SimConfig& config() const { return cfg_; }

    int edge_population(std::size_t edge) const;  // in transit + queued
    int queued_on_edge(std::size_t edge) const;
    std::map<std::size_t, int> queued_by_destination(std::size_t edge) const;
    double density(std::size_t edge) const;

    int queue_length(std::size_t agent) const;         // Q_i
    double step_waiting(std::size_t agent) const;      // W_i(k), seconds
    double cumulative_waiting(std::size_t agent) const;
    const PhaseState& phase(std::size_t agent) const { return phases_[agent]; }
    const std::vector<PhaseEvent>& phase_events() const { return phase_events_; }

    long entered() const { return entered_; }
    long exited() const { return exited_; }
    long in_transit_total() const;
    long queued_total() const;

private:
    struct Vehicle {
        std::vector<std::size_t> route;
        std::size_t leg = 0;
    };
    struct Transit {
        std::size_t vehicle;
        long arrive_step;
    };
    struct EdgeState {
        std::vector<Transit> transit;
        std::deque<std::size_t> queue;  // vehicle ids, FIFO
        double service_credit = 0.0;
    };

    long travel_steps(std::size_t edge, int queued_behind) const;
    void enter_edge(std::size_t vehicle, std::size_t edge);
    void begin_yellow(std::size_t agent, int target);
    void verify_conservation() const;

    const TrafficGraph& graph_;
    SimConfig cfg_;
    long clock_ = 0;
    std::vector<Vehicle> vehicles_;
    std::vector<EdgeState> edge_states_;
    std::vector<PhaseState> phases_;      // per agent
    std::vector<double> step_waiting_;    // per agent, last step
    std::vector<double> cum_waiting_;     // per agent
    std::vector<PhaseEvent> phase_events_;
    ArrivalSchedule schedule_;
    std::size_t next_event_ = 0;
    long entered_ = 0;
    long exited_ = 0;
};

}  // namespace tsc
