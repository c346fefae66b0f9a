#include "coxrs/step_function.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace coxrs {

StepFunction::StepFunction(std::vector<double> jump_times, std::vector<double> cumulative_values)
    : times_(std::move(jump_times)), values_(std::move(cumulative_values)) {
    if (times_.size() != values_.size())
        throw std::invalid_argument("StepFunction: times/values size mismatch");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!(times_[i] > 0.0))
            throw std::invalid_argument("StepFunction: jump times must be positive");
        if (i > 0 && !(times_[i] > times_[i - 1]))
            throw std::invalid_argument("StepFunction: jump times must be strictly increasing");
        if (values_[i] < 0.0 || (i > 0 && values_[i] < values_[i - 1]))
            throw std::invalid_argument("StepFunction: cumulative values must be non-decreasing");
    }
}

StepFunction StepFunction::from_increments(std::vector<std::pair<double, double>> increments) {
    std::sort(increments.begin(), increments.end());
    std::vector<double> times, values;
    double cum = 0.0;
    for (std::size_t i = 0; i < increments.size();) {
        const double t = increments[i].first;
        double inc = 0.0;
        for (; i < increments.size() && increments[i].first == t; ++i) inc += increments[i].second;
        if (inc == 0.0) continue;
        cum += inc;
        times.push_back(t);
        values.push_back(cum);
    }
    return StepFunction(std::move(times), std::move(values));
}

double StepFunction::eval(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 0.0;
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::inv(double x) const {
    if (x <= 0.0) return 0.0;
    auto it = std::lower_bound(values_.begin(), values_.end(), x);
    if (it == values_.end()) return std::numeric_limits<double>::infinity();
    return times_[static_cast<std::size_t>(it - values_.begin())];
}

StepFunction StepFunction::scaled(double factor) const {
    StepFunction out(*this);
    for (double& v : out.values_) v *= factor;
    return out;
}

}  // namespace coxrs
