#ifndef FLOWRECT_SCHEDULE_HPP
#define FLOWRECT_SCHEDULE_HPP

#include <vector>

#include "flowrect/errors.hpp"

namespace flowrect {

// Strictly decreasing timestep grid t_max = t_0 > t_1 > ... > t_N = 0.
struct TimestepSchedule {
    std::vector<double> steps;

    int num_steps() const { return static_cast<int>(steps.size()) - 1; }
    double t(int k) const { return steps[k]; }
    double dt(int k) const { return steps[k] - steps[k + 1]; }
};

// Uniform grid of num_steps+1 points from t_max down to exactly 0.
inline TimestepSchedule linear_schedule(double t_max, int num_steps) {
    if (!(t_max > 0.0) || t_max > 1.0)
        throw DomainError("linear_schedule: t_max must be in (0,1], got " + std::to_string(t_max));
    if (num_steps < 1)
        throw DomainError("linear_schedule: num_steps must be >= 1");
    TimestepSchedule s;
    s.steps.resize(num_steps + 1);
    for (int k = 0; k <= num_steps; ++k)
        s.steps[k] = t_max * static_cast<double>(num_steps - k) / static_cast<double>(num_steps);
    s.steps.front() = t_max;
    s.steps.back() = 0.0;
    return s;
}

}  // namespace flowrect

#endif
