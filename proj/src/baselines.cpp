#include "tsc/baselines.hpp"

#include <cmath>

#include "tsc/errors.hpp"

namespace tsc {

int fixed_time_stage(double clock_seconds, double green_seconds) {
    const long slot = static_cast<long>(std::floor(clock_seconds / green_seconds));
    return static_cast<int>(((slot % 4) + 4) % 4);
}

PolicyFn fixed_time_policy(const TrafficEnv& env, FixedTimeProgram program) {
    const SimConfig& sim = env.config().sim;
    if (program.green_seconds < sim.min_green_seconds ||
        program.green_seconds > sim.max_green_seconds) {
        throw ConfigError("fixed-time green duration must lie in [g_min, g_max]");
    }
    return [&env, program](const std::vector<Vec>& obs) {
        const double t = static_cast<double>(env.sim().clock_step()) * env.sim().dt();
        const int stage = fixed_time_stage(t, program.green_seconds);
        return std::vector<int>(obs.size(), stage);
    };
}

}  // namespace tsc
