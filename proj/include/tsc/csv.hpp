#pragma once

#include <string>
#include <vector>

#include "tsc/anova.hpp"
#include "tsc/sim_metrics.hpp"
#include "tsc/trainer.hpp"

namespace tsc {

// %.17g keeps doubles round-trippable and reruns byte-identical.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;  // throws DataError
};

CsvTable read_csv_table(const std::string& path);

void write_curve_csv(const std::string& path, const std::vector<EpisodeStats>& curve);
std::vector<EpisodeStats> read_curve_csv(const std::string& path);

void write_trace_csv(const std::string& path, const EpisodeTrace& trace,
                     const std::vector<std::string>& agent_ids);
void write_density_csv(const std::string& path, const EpisodeTrace& trace);

// (component-or-pair, sigma) rows: main effects as x<m>, pairs as x<a>*x<b>,
// plus optional labelled input-space rows.
void write_anova_csv(const std::string& path, const AnovaReport& report,
                     const Vec& sigma_in = {},
                     const std::vector<std::string>& input_labels = {});

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace tsc
