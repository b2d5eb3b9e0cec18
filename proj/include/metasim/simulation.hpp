#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "metasim/cohort_engine.hpp"
#include "metasim/observables.hpp"

namespace metasim {

struct SimulationOptions {
    std::size_t histogram_bins = 40;
    StepControls controls;
};

struct SimulationResult {
    Trajectory trajectory;
    SystemState final_state;
};

/// Number of fixed steps covering [0, t_end] and the sampling stride in
/// steps. Both are rounded to the nearest integer.
inline std::pair<std::int64_t, std::int64_t> step_plan(const SolverSettings& settings)
{
    validate(settings);
    const auto steps = static_cast<std::int64_t>(std::llround(settings.t_end / settings.dt));
    const auto stride = std::max<std::int64_t>(1, std::llround(settings.sample_every / settings.dt));
    return {std::max<std::int64_t>(steps, 1), stride};
}

/// Runs from the birth-state primary tumor and zero inhibitor to t_end,
/// sampling every `sample_every` and at the final step.
inline SimulationResult simulate(const ModelParams& p, const SolverSettings& settings,
                                 std::vector<Cohort> initial_cohorts = {}, const SimulationOptions& options = {})
{
    validate(p);
    const auto [steps, stride] = step_plan(settings);

    SimulationResult result;
    SystemState& s = result.final_state;
    s = SystemState::initial(p, std::move(initial_cohorts));
    Stepper stepper(p, options.controls);

    result.trajectory.append(sample(s));
    for (std::int64_t i = 1; i <= steps; ++i) {
        stepper.advance(s, settings.dt, settings.weight_floor);
        // t accumulates from the step index to avoid drift in sample times
        s.t = static_cast<double>(i) * settings.dt;
        if (i % stride == 0 || i == steps) {
            result.trajectory.append(sample(s));
        }
    }
    result.trajectory.final_histogram = histogram(s, p.V0, options.histogram_bins);
    return result;
}

} // namespace metasim
