#include "tsc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsc/errors.hpp"

namespace tsc {

Simulator::Simulator(const TrafficGraph& graph, SimConfig cfg)
    : graph_(graph), cfg_(cfg) {
    if (!(cfg_.dt_seconds > 0.0)) throw ConfigError("simulator: dt must be > 0");
    reset({});
}

void Simulator::reset(ArrivalSchedule schedule) {
    clock_ = 0;
    vehicles_.clear();
    edge_states_.assign(graph_.edges().size(), {});
    phases_.assign(graph_.intersection_count(), {});
    step_waiting_.assign(graph_.intersection_count(), 0.0);
    cum_waiting_.assign(graph_.intersection_count(), 0.0);
    phase_events_.clear();
    schedule_ = std::move(schedule);
    next_event_ = 0;
    entered_ = 0;
    exited_ = 0;
    std::sort(schedule_.events.begin(), schedule_.events.end(),
              [](const SpawnEvent& a, const SpawnEvent& b) { return a.step < b.step; });
}

long Simulator::travel_steps(std::size_t edge, int queued_behind) const {
    const auto& e = graph_.edges()[edge];
    const double free_m =
        std::max(0.0, e.length_m - cfg_.vehicle_gap_m * static_cast<double>(queued_behind));
    const double secs = free_m / e.speed_mps;
    return static_cast<long>(std::ceil(secs / cfg_.dt_seconds - 1e-12));
}

void Simulator::enter_edge(std::size_t vehicle, std::size_t edge) {
    const long steps = travel_steps(edge, static_cast<int>(edge_states_[edge].queue.size()));
    edge_states_[edge].transit.push_back({vehicle, clock_ + steps});
}

void Simulator::begin_yellow(std::size_t agent, int target) {
    PhaseState& ps = phases_[agent];
    phase_events_.push_back({clock_, agent, ps.stage, target, cfg_.yellow_seconds,
                             ps.green_elapsed});
    ps.in_yellow = true;
    ps.yellow_left = cfg_.yellow_seconds;
    ps.pending_stage = target;
}

void Simulator::request_stages(const std::vector<int>& stages) {
    if (stages.size() != graph_.intersection_count()) {
        throw ActionError("stage request: expected " +
                          std::to_string(graph_.intersection_count()) +
                          " entries, got " + std::to_string(stages.size()));
    }
    for (std::size_t a = 0; a < stages.size(); ++a) {
        if (stages[a] < 0 || stages[a] > 3) {
            throw ActionError("stage request for agent " + std::to_string(a) +
                              " out of range: " + std::to_string(stages[a]));
        }
        PhaseState& ps = phases_[a];
        if (ps.in_yellow) continue;  // transition already committed
        if (stages[a] != ps.stage && ps.green_elapsed >= cfg_.min_green_seconds) {
            begin_yellow(a, stages[a]);
        }
    }
}

void Simulator::step() {
    const long k = clock_;
    const double dt = cfg_.dt_seconds;

    // (1) scheduled arrivals enter their source edges
    while (next_event_ < schedule_.events.size() &&
           schedule_.events[next_event_].step <= k) {
        const SpawnEvent& ev = schedule_.events[next_event_];
        vehicles_.push_back({ev.route, 0});
        ++entered_;
        enter_edge(vehicles_.size() - 1, ev.route.front());
        ++next_event_;
    }

    // (2) transit vehicles that reached the queue tail join it (or exit at a
    // boundary downstream). Stable per-edge order keeps this deterministic.
    for (std::size_t e = 0; e < edge_states_.size(); ++e) {
        EdgeState& es = edge_states_[e];
        if (es.transit.empty()) continue;
        std::vector<Transit> keep;
        keep.reserve(es.transit.size());
        const bool to_boundary = graph_.is_boundary(graph_.edges()[e].to);
        for (const Transit& t : es.transit) {
            if (t.arrive_step > k) {
                keep.push_back(t);
            } else if (to_boundary) {
                ++exited_;
            } else {
                es.queue.push_back(t.vehicle);
            }
        }
        es.transit = std::move(keep);
    }

    // (3) phase interlocks advance, then green queues discharge
    for (std::size_t a = 0; a < graph_.intersection_count(); ++a) {
        PhaseState& ps = phases_[a];
        // Max-green forcing also applies when no request arrived.
        if (!ps.in_yellow && ps.green_elapsed + dt > cfg_.max_green_seconds) {
            begin_yellow(a, (ps.stage + 1) % 4);
        }
        double remaining = dt;
        if (ps.in_yellow) {
            const double consumed = std::min(ps.yellow_left, remaining);
            ps.yellow_left -= consumed;
            remaining -= consumed;
            if (ps.yellow_left <= 1e-12) {
                ps.in_yellow = false;
                ps.stage = ps.pending_stage;
                ps.green_elapsed = 0.0;
            }
        }
        if (ps.in_yellow || remaining <= 0.0) continue;
        ps.green_elapsed += remaining;

        const auto& node = graph_.nodes()[graph_.intersections()[a]];
        for (std::size_t e : node.stages[static_cast<std::size_t>(ps.stage)]) {
            EdgeState& es = edge_states_[e];
            es.service_credit += cfg_.saturation_flow *
                                 static_cast<double>(graph_.edges()[e].lanes) * remaining;
            long can = static_cast<long>(std::floor(es.service_credit + 1e-12));
            while (can > 0 && !es.queue.empty()) {
                const std::size_t vid = es.queue.front();
                es.queue.pop_front();
                Vehicle& v = vehicles_[vid];
                ++v.leg;
                enter_edge(vid, v.route[v.leg]);
                --can;
                es.service_credit -= 1.0;
            }
            if (es.queue.empty()) es.service_credit = 0.0;
        }
    }

    // (4) waiting time accrues for vehicles still queued
    for (std::size_t a = 0; a < graph_.intersection_count(); ++a) {
        const double w = static_cast<double>(queue_length(a)) * dt;
        step_waiting_[a] = w;
        cum_waiting_[a] += w;
    }

    // (5) advance the clock and re-check conservation
    ++clock_;
    verify_conservation();
}

int Simulator::edge_population(std::size_t edge) const {
    const EdgeState& es = edge_states_[edge];
    return static_cast<int>(es.transit.size() + es.queue.size());
}

int Simulator::queued_on_edge(std::size_t edge) const {
    return static_cast<int>(edge_states_[edge].queue.size());
}

std::map<std::size_t, int> Simulator::queued_by_destination(std::size_t edge) const {
    std::map<std::size_t, int> split;
    for (std::size_t vid : edge_states_[edge].queue) {
        const Vehicle& v = vehicles_[vid];
        // Next node the vehicle heads to after clearing this intersection.
        const std::size_t next_edge = v.route[v.leg + 1];
        split[graph_.edges()[next_edge].to] += 1;
    }
    return split;
}

double Simulator::density(std::size_t edge) const {
    const auto& e = graph_.edges()[edge];
    const double n = static_cast<double>(edge_population(edge));
    return std::min(1.0, n * cfg_.vehicle_gap_m / e.length_m);
}

int Simulator::queue_length(std::size_t agent) const {
    const auto& node = graph_.nodes()[graph_.intersections()[agent]];
    int total = 0;
    for (std::size_t e : node.incoming) total += queued_on_edge(e);
    return total;
}

double Simulator::step_waiting(std::size_t agent) const { return step_waiting_[agent]; }

double Simulator::cumulative_waiting(std::size_t agent) const {
    return cum_waiting_[agent];
}

long Simulator::in_transit_total() const {
    long total = 0;
    for (const auto& es : edge_states_) total += static_cast<long>(es.transit.size());
    return total;
}

long Simulator::queued_total() const {
    long total = 0;
    for (const auto& es : edge_states_) total += static_cast<long>(es.queue.size());
    return total;
}

void Simulator::verify_conservation() const {
    if (entered_ != in_transit_total() + queued_total() + exited_) {
        throw std::logic_error(
            "vehicle conservation violated at step " + std::to_string(clock_) +
            ": entered " + std::to_string(entered_) + " != transit " +
            std::to_string(in_transit_total()) + " + queued " +
            std::to_string(queued_total()) + " + exited " + std::to_string(exited_));
    }
}

}  // namespace tsc
