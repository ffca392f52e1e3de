#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsc/anova.hpp"
#include "tsc/ehh_fit.hpp"
#include "tsc/tensor.hpp"

namespace tsc {

// Rectangular multivariate series: header = node ids, one row per sampling
// instant. Gaps are linearly interpolated per column at ingestion.
struct SeriesDataset {
    std::vector<std::string> node_ids;
    std::vector<Vec> values;  // [time][node]
    double interval_minutes = 5.0;
    std::size_t window = 12;  // observation window in steps (60 minutes)

    std::size_t n_nodes() const { return node_ids.size(); }
    std::size_t length() const { return values.size(); }
    std::size_t sample_count(std::size_t horizon) const;
};

SeriesDataset ingest_csv(const std::string& path);
SeriesDataset ingest_csv_text(const std::string& text);

// Supervised windows for one horizon. Inputs are lag-major: component
// l * n_nodes + i is node i at lag l, lag 0 being the most recent step.
struct SupervisedSet {
    std::vector<Vec> inputs;
    std::vector<Vec> targets;
    std::vector<std::string> input_labels;  // "<node>@lag<l>"
};

SupervisedSet make_windows(const SeriesDataset& ds, std::size_t horizon);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

// Chronological 60/20/20 split. Throws DataError below 5 samples.
SplitSizes chronological_split(std::size_t n_samples);

struct ForecastMetrics {
    double mae = 0.0;
    double r2 = 0.0;  // NaN when targets are constant
    double rmse = 0.0;
    bool r2_defined = true;
};

ForecastMetrics evaluate_forecast(const std::vector<Vec>& predictions,
                                  const std::vector<Vec>& targets);

struct ForecastOptions {
    std::size_t ehh_input_dim = 12;
    std::int64_t min_node_cap = 128;
    double l1_penalty = 1e-4;
    std::size_t iters = 600;
    double learning_rate = 0.01;
    std::size_t val_check_every = 25;
    std::uint64_t seed = 0;
};

struct ForecastRun {
    std::size_t horizon = 0;
    ForecastMetrics test;
    ForecastMetrics persistence;  // last-observation baseline on the same targets
    std::size_t params = 0;
    std::size_t neurons = 0;
    AnovaReport anova;                      // over the EHH input components
    Vec sigma_in;                           // per (node, lag) input component
    std::vector<std::string> input_labels;  // aligned with sigma_in
    JointEhhModel model;
};

// Trains on the chronological split, model-selects on validation RMSE, and
// reports test metrics plus the input-importance decomposition.
ForecastRun forecast_run(const SeriesDataset& ds, std::size_t horizon,
                         const ForecastOptions& opts);

// Bundled generator matching the ingestion shape: sinusoidal daily profile
// plus cross-coupled short-memory noise.
SeriesDataset synthetic_series(std::size_t nodes = 15, std::size_t length = 2000,
                               std::uint64_t seed = 7);

}  // namespace tsc
