#include "tsc/forecast.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tsc/errors.hpp"

namespace tsc {

std::size_t SeriesDataset::sample_count(std::size_t horizon) const {
    const std::size_t need = window + horizon;
    return length() >= need ? length() - need + 1 : 0;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

SeriesDataset ingest_csv_text(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    SeriesDataset ds;
    // value or NaN marker per cell; missing cells interpolated afterwards
    std::vector<Vec> raw;
    std::size_t row_no = 0;
    while (std::getline(ss, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (ds.node_ids.empty()) {
            for (const auto& c : cells) ds.node_ids.push_back(trim(c));
            if (ds.node_ids.empty()) throw DataError("series csv: empty header");
            continue;
        }
        if (cells.size() != ds.node_ids.size()) {
            throw DataError("series csv: row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(ds.node_ids.size()));
        }
        Vec row(cells.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string v = trim(cells[c]);
            if (v.empty()) continue;  // missing, interpolate later
            try {
                std::size_t used = 0;
                row[c] = std::stod(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                throw DataError("series csv: non-numeric cell at row " +
                                std::to_string(row_no) + ", column '" +
                                ds.node_ids[c] + "'");
            }
        }
        raw.push_back(std::move(row));
    }
    if (raw.empty()) throw DataError("series csv: no data rows");

    // Per-column linear interpolation; boundary gaps copy the nearest value.
    for (std::size_t c = 0; c < ds.node_ids.size(); ++c) {
        std::size_t t = 0;
        while (t < raw.size()) {
            if (!std::isnan(raw[t][c])) {
                ++t;
                continue;
            }
            std::size_t gap_end = t;
            while (gap_end < raw.size() && std::isnan(raw[gap_end][c])) ++gap_end;
            const bool has_left = t > 0;
            const bool has_right = gap_end < raw.size();
            if (!has_left && !has_right) {
                throw DataError("series csv: column '" + ds.node_ids[c] +
                                "' has no observed values");
            }
            for (std::size_t g = t; g < gap_end; ++g) {
                if (has_left && has_right) {
                    const double left = raw[t - 1][c];
                    const double right = raw[gap_end][c];
                    const double frac = static_cast<double>(g - t + 1) /
                                        static_cast<double>(gap_end - t + 1);
                    raw[g][c] = left + (right - left) * frac;
                } else if (has_left) {
                    raw[g][c] = raw[t - 1][c];
                } else {
                    raw[g][c] = raw[gap_end][c];
                }
            }
            t = gap_end;
        }
    }
    ds.values = std::move(raw);
    return ds;
}

SeriesDataset ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("series csv: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return ingest_csv_text(buf.str());
}

SupervisedSet make_windows(const SeriesDataset& ds, std::size_t horizon) {
    if (horizon < 1) throw ConfigError("forecast horizon must be >= 1");
    const std::size_t n = ds.sample_count(horizon);
    if (n == 0) {
        throw DataError("series too short for window " + std::to_string(ds.window) +
                        " and horizon " + std::to_string(horizon));
    }
    SupervisedSet set;
    const std::size_t nodes = ds.n_nodes();
    for (std::size_t l = 0; l < ds.window; ++l)
        for (std::size_t i = 0; i < nodes; ++i)
            set.input_labels.push_back(ds.node_ids[i] + "@lag" + std::to_string(l));
    set.inputs.reserve(n);
    set.targets.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        Vec x(ds.window * nodes, 0.0);
        const std::size_t last = t + ds.window - 1;
        for (std::size_t l = 0; l < ds.window; ++l)
            for (std::size_t i = 0; i < nodes; ++i)
                x[l * nodes + i] = ds.values[last - l][i];
        set.inputs.push_back(std::move(x));
        set.targets.push_back(ds.values[last + horizon]);
    }
    return set;
}

SplitSizes chronological_split(std::size_t n_samples) {
    if (n_samples < 5) {
        throw DataError("too few samples to split: " + std::to_string(n_samples));
    }
    SplitSizes s;
    s.train = (n_samples * 6) / 10;
    s.val = (n_samples * 2) / 10;
    s.test = n_samples - s.train - s.val;
    return s;
}

ForecastMetrics evaluate_forecast(const std::vector<Vec>& predictions,
                                  const std::vector<Vec>& targets) {
    if (predictions.size() != targets.size() || targets.empty()) {
        throw ShapeError("forecast metrics: prediction/target shape mismatch");
    }
    double abs_sum = 0.0, sq_sum = 0.0, mean = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (predictions[i].size() != targets[i].size()) {
            throw ShapeError("forecast metrics: prediction/target shape mismatch");
        }
        for (std::size_t c = 0; c < targets[i].size(); ++c) {
            const double d = targets[i][c] - predictions[i][c];
            abs_sum += std::fabs(d);
            sq_sum += d * d;
            mean += targets[i][c];
            ++n;
        }
    }
    mean /= static_cast<double>(n);
    double ss_tot = 0.0;
    for (const auto& t : targets)
        for (double v : t) ss_tot += (v - mean) * (v - mean);

    ForecastMetrics m;
    m.mae = abs_sum / static_cast<double>(n);
    m.rmse = std::sqrt(sq_sum / static_cast<double>(n));
    if (ss_tot == 0.0) {
        m.r2 = std::numeric_limits<double>::quiet_NaN();
        m.r2_defined = false;
    } else {
        m.r2 = 1.0 - sq_sum / ss_tot;
    }
    return m;
}

ForecastRun forecast_run(const SeriesDataset& ds, std::size_t horizon,
                         const ForecastOptions& opts) {
    const SupervisedSet set = make_windows(ds, horizon);
    const SplitSizes split = chronological_split(set.inputs.size());

    JointFitOptions fit_opts;
    fit_opts.ehh_input_dim = opts.ehh_input_dim;
    fit_opts.min_node_cap = opts.min_node_cap;
    fit_opts.l1_penalty = opts.l1_penalty;
    fit_opts.iters = opts.iters;
    fit_opts.learning_rate = opts.learning_rate;
    fit_opts.val_check_every = opts.val_check_every;

    ForecastRun run;
    run.horizon = horizon;
    run.input_labels = set.input_labels;
    run.model = joint_ehh_fit(set.inputs, set.targets, split.train, split.val,
                              fit_opts, opts.seed);

    // Test metrics on the untouched chronological tail.
    std::vector<Vec> test_pred, test_targets, persist_pred;
    const std::size_t nodes = ds.n_nodes();
    for (std::size_t i = split.train + split.val; i < set.inputs.size(); ++i) {
        test_pred.push_back(run.model.predict(set.inputs[i]));
        test_targets.push_back(set.targets[i]);
        // lag-0 block of the input is the last observed row
        persist_pred.push_back(
            Vec(set.inputs[i].begin(), set.inputs[i].begin() + nodes));
    }
    run.test = evaluate_forecast(test_pred, test_targets);
    run.persistence = evaluate_forecast(persist_pred, test_targets);
    run.params = run.model.parameter_count();
    run.neurons = run.model.ehh.node_count();

    // Importance decomposition over the training inputs.
    std::vector<Vec> train_ehh_inputs;
    train_ehh_inputs.reserve(split.train);
    for (std::size_t i = 0; i < split.train; ++i)
        train_ehh_inputs.push_back(run.model.to_ehh_input(set.inputs[i]));
    run.anova = anova_decompose(run.model.ehh, train_ehh_inputs);
    run.sigma_in =
        importance_inverse(run.model.transform, run.anova.combined()).sigma_in;
    return run;
}

}  // namespace tsc
