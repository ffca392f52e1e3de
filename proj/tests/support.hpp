#pragma once

// Shared test oracles: finite-difference gradients and the segment-sampling
// continuity / piecewise-linearity probe. Test-only code, independent of the
// library's backward implementations.

#include <cmath>
#include <functional>
#include <vector>

#include "tsc/tensor.hpp"

namespace tsc::testing {

// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const Vec&)>& f,
                                 Vec x, std::size_t i, double h = 1e-5) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    return (up - down) / (2.0 * h);
}

struct SegmentCheck {
    bool continuous = false;       // max neighbour jump shrinks with step size
    bool piecewise_linear = false; // off-kink windows have ~zero 2nd difference
    double coarse_max_jump = 0.0;
    double fine_max_jump = 0.0;
    double linear_fraction = 0.0;
};

// Samples f along x(t) = a + t (b - a). A continuous PWL map must show
// neighbour jumps proportional to the step size and exactly-zero second
// differences except where a kink is crossed.
inline SegmentCheck segment_pwl_check(const std::function<double(const Vec&)>& f,
                                      const Vec& a, const Vec& b,
                                      std::size_t n_points = 1001) {
    auto at = [&](double t) {
        Vec x(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] + t * (b[i] - a[i]);
        return f(x);
    };
    auto max_jump = [&](std::size_t n) {
        double prev = at(0.0);
        double jump = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            const double cur = at(static_cast<double>(k) / static_cast<double>(n - 1));
            jump = std::max(jump, std::fabs(cur - prev));
            prev = cur;
        }
        return jump;
    };

    SegmentCheck result;
    result.coarse_max_jump = max_jump((n_points - 1) / 4 + 1);
    result.fine_max_jump = max_jump(n_points);
    // Jumps scale ~1/4 when the step does; allow slack, and accept flat maps.
    result.continuous = result.fine_max_jump <= 0.5 * result.coarse_max_jump + 1e-12;

    std::vector<double> samples(n_points);
    for (std::size_t k = 0; k < n_points; ++k) {
        samples[k] = at(static_cast<double>(k) / static_cast<double>(n_points - 1));
    }
    double scale = 1.0;
    for (double v : samples) scale = std::max(scale, std::fabs(v));
    std::size_t linear = 0;
    for (std::size_t k = 1; k + 1 < n_points; ++k) {
        const double second = samples[k + 1] - 2.0 * samples[k] + samples[k - 1];
        if (std::fabs(second) <= 1e-9 * scale) ++linear;
    }
    result.linear_fraction =
        static_cast<double>(linear) / static_cast<double>(n_points - 2);
    // A segment crosses at most a few hundred hinge kinks; the bulk of the
    // windows must be exactly linear.
    result.piecewise_linear = result.linear_fraction >= 0.5;
    return result;
}

inline bool segment_ok(const SegmentCheck& c) {
    return c.continuous && c.piecewise_linear;
}

}  // namespace tsc::testing
