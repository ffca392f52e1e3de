#include "tsc/sim_metrics.hpp"

#include "tsc/errors.hpp"

namespace tsc {

SimMetrics compute_metrics(const std::vector<double>& step_wait_totals) {
    if (step_wait_totals.empty()) {
        throw DataError("metrics: empty trace");
    }
    const double n = static_cast<double>(step_wait_totals.size());
    double sum = 0.0;
    for (double w : step_wait_totals) sum += w;
    const double mean = sum / n;
    double sq = 0.0;
    for (double w : step_wait_totals) sq += (w - mean) * (w - mean);
    return {mean, sq / n};
}

SimMetrics compute_metrics(const EpisodeTrace& trace) {
    return compute_metrics(trace.step_wait_totals);
}

}  // namespace tsc
