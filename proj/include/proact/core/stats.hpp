#pragma once

#include <span>
#include <vector>

namespace proact {

// Linear-interpolated percentile (q in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

double mean(std::span<const double> values);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double t_statistic = 0.0;
};

LinearFit ordinary_least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace proact
