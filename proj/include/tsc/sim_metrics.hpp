#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsc/tensor.hpp"

namespace tsc {

struct TraceRow {
    long step = 0;
    std::size_t agent = 0;
    int stage = 0;
    int queue = 0;          // Q_i
    double step_wait = 0.0;  // W_i at this step, seconds
};

struct DensityRow {
    long step = 0;
    std::string edge;
    double density = 0.0;
};

struct EpisodeTrace {
    std::size_t n_agents = 0;
    double dt_seconds = 0.0;
    std::vector<TraceRow> rows;                // per step, per agent
    std::vector<double> step_wait_totals;      // sum_i W_i(t) per step
    std::vector<DensityRow> densities;
    bool aborted = false;
};

struct SimMetrics {
    double ave = 0.0;  // time-averaged total waiting
    double sta = 0.0;  // temporal variance of total waiting
};

// AVE = (1/T) sum_t total(t); STA = (1/T) sum_t (total(t) - mean)^2.
SimMetrics compute_metrics(const std::vector<double>& step_wait_totals);
SimMetrics compute_metrics(const EpisodeTrace& trace);

}  // namespace tsc
