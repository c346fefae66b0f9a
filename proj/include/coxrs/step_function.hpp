#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace coxrs {

// Right-continuous non-decreasing piecewise-constant function, stored as
// strictly increasing jump times with cumulative values.  eval(t) is 0
// before the first jump.
class StepFunction {
public:
    StepFunction() = default;
    StepFunction(std::vector<double> jump_times, std::vector<double> cumulative_values);

    // Builds from (time, increment) pairs; merges duplicate times, drops
    // zero increments.  Times need not be sorted.
    static StepFunction from_increments(std::vector<std::pair<double, double>> increments);

    double eval(double t) const;

    // Generalized inverse: smallest t with eval(t) >= x.  Returns 0 for
    // x <= 0 and +infinity when x exceeds the total mass.
    double inv(double x) const;

    double total() const { return values_.empty() ? 0.0 : values_.back(); }
    bool empty() const { return times_.empty(); }
    std::size_t size() const { return times_.size(); }
    double last_time() const { return times_.empty() ? 0.0 : times_.back(); }

    const std::vector<double>& jump_times() const { return times_; }
    const std::vector<double>& cumulative_values() const { return values_; }

    StepFunction scaled(double factor) const;

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

}  // namespace coxrs
