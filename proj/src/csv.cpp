#include "tsc/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tsc/errors.hpp"

namespace tsc {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == name) return c;
    throw DataError("csv: missing column '" + name + "'");
}

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (table.header.empty()) {
            table.header = cells;
            continue;
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw DataError("csv: non-numeric cell '" + c + "' in " + path);
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw DataError("csv: empty file " + path);
    return table;
}

void write_curve_csv(const std::string& path, const std::vector<EpisodeStats>& curve) {
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot write '" + path + "'");
    out << "episode,global_reward,ave,sta,actor_loss,critic_loss\n";
    for (const auto& row : curve) {
        out << row.episode << ',' << format_double(row.global_reward) << ','
            << format_double(row.ave) << ',' << format_double(row.sta) << ','
            << format_double(row.actor_loss) << ',' << format_double(row.critic_loss)
            << '\n';
    }
}

std::vector<EpisodeStats> read_curve_csv(const std::string& path) {
    const CsvTable table = read_csv_table(path);
    const std::size_t ep = table.column("episode");
    const std::size_t gr = table.column("global_reward");
    const std::size_t ave = table.column("ave");
    const std::size_t sta = table.column("sta");
    const std::size_t al = table.column("actor_loss");
    const std::size_t cl = table.column("critic_loss");
    std::vector<EpisodeStats> curve;
    for (const auto& row : table.rows) {
        EpisodeStats s;
        s.episode = static_cast<std::size_t>(row.at(ep));
        s.global_reward = row.at(gr);
        s.ave = row.at(ave);
        s.sta = row.at(sta);
        s.actor_loss = row.at(al);
        s.critic_loss = row.at(cl);
        curve.push_back(s);
    }
    return curve;
}

void write_trace_csv(const std::string& path, const EpisodeTrace& trace,
                     const std::vector<std::string>& agent_ids) {
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot write '" + path + "'");
    out << "step,intersection,phase,queue,step_wait\n";
    for (const auto& row : trace.rows) {
        out << row.step << ',' << agent_ids[row.agent] << ',' << row.stage << ','
            << row.queue << ',' << format_double(row.step_wait) << '\n';
    }
}

void write_density_csv(const std::string& path, const EpisodeTrace& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot write '" + path + "'");
    out << "step,edge,density\n";
    for (const auto& row : trace.densities) {
        out << row.step << ',' << row.edge << ',' << format_double(row.density) << '\n';
    }
}

void write_anova_csv(const std::string& path, const AnovaReport& report,
                     const Vec& sigma_in,
                     const std::vector<std::string>& input_labels) {
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot write '" + path + "'");
    out << "component,sigma\n";
    for (std::size_t m = 0; m < report.sigma_main.size(); ++m) {
        out << 'x' << m << ',' << format_double(report.sigma_main[m]) << '\n';
    }
    for (const auto& [pair, sigma] : report.sigma_pairs) {
        out << 'x' << pair.first << "*x" << pair.second << ','
            << format_double(sigma) << '\n';
    }
    for (std::size_t c = 0; c < sigma_in.size(); ++c) {
        const std::string label =
            c < input_labels.size() ? input_labels[c] : "in" + std::to_string(c);
        out << label << ',' << format_double(sigma_in[c]) << '\n';
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace tsc
