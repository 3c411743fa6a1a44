#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace locbound {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double compensated_mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_stddev(std::span<const double> xs);

/// Linear-interpolation quantile (Hyndman-Fan type 7); p in [0, 1].
double quantile(std::vector<double> xs, double p);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0;   ///< 95% two-sided, Student t with n - 2 dof
    double ci_high = 0.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs >= 3 points.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Mean of paired differences b - a divided by its standard error. Pairs
/// with a NaN on either side are skipped; returns 0 when undefined.
double paired_t(std::span<const double> a, std::span<const double> b);

}  // namespace locbound
