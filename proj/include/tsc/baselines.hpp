#pragma once

#include "tsc/env.hpp"

namespace tsc {

// Round-robin program: each of the four stages holds for a fixed green
// duration; the environment inserts the yellow interlocks.
struct FixedTimeProgram {
    double green_seconds = 25.0;

    double cycle_with_yellows(double yellow_seconds) const {
        return 4.0 * (green_seconds + yellow_seconds);
    }
};

// stage = floor(elapsed / green) mod 4; ignores the traffic state entirely.
int fixed_time_stage(double clock_seconds, double green_seconds);

// Policy adapter reading the clock from the environment.
PolicyFn fixed_time_policy(const TrafficEnv& env, FixedTimeProgram program = {});

}  // namespace tsc
