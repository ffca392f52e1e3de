#include <cmath>

#include "tsc/forecast.hpp"
#include "tsc/rng.hpp"

namespace tsc {

SeriesDataset synthetic_series(std::size_t nodes, std::size_t length,
                               std::uint64_t seed) {
    SeriesDataset ds;
    for (std::size_t i = 0; i < nodes; ++i)
        ds.node_ids.push_back("n" + std::to_string(i));

    Rng rng(derive_seed(seed, "synthetic-series"));
    const double two_pi = 6.283185307179586476925286766559;
    const double daily = 288.0;  // steps per day at 5-minute cadence

    Vec noise(nodes, 0.0), prev_noise(nodes, 0.0);
    ds.values.reserve(length);
    for (std::size_t t = 0; t < length; ++t) {
        // short-memory noise with one-step cross coupling to the neighbour
        for (std::size_t i = 0; i < nodes; ++i) {
            const std::size_t left = (i + nodes - 1) % nodes;
            noise[i] = 0.8 * prev_noise[i] + 0.15 * prev_noise[left] +
                       0.5 * rng.normal();
        }
        Vec row(nodes, 0.0);
        for (std::size_t i = 0; i < nodes; ++i) {
            const double phase = 0.35 * static_cast<double>(i);
            const double base =
                55.0 + 10.0 * std::sin(two_pi * static_cast<double>(t) / daily + phase) +
                2.5 * std::sin(two_pi * static_cast<double>(t) / (daily / 3.0) + 2.0 * phase);
            row[i] = base + noise[i];
        }
        ds.values.push_back(std::move(row));
        prev_noise = noise;
    }
    return ds;
}

}  // namespace tsc
