#include "locbound/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace locbound {

void CompensatedSum::add(double x)
{
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

double compensated_mean(std::span<const double> xs)
{
    if (xs.empty()) {
        return std::nan("");
    }
    CompensatedSum s;
    for (double x : xs) {
        s.add(x);
    }
    return s.value() / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs)
{
    if (xs.size() < 2) {
        return 0.0;
    }
    const double m = compensated_mean(xs);
    CompensatedSum s;
    for (double x : xs) {
        s.add((x - m) * (x - m));
    }
    return std::sqrt(s.value() / static_cast<double>(xs.size() - 1));
}

double quantile(std::vector<double> xs, double p)
{
    if (xs.empty()) {
        return std::nan("");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("quantile level must be in [0, 1]");
    }
    std::sort(xs.begin(), xs.end());
    const double h = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("fit_line: x and y differ in length");
    }
    const std::size_t n = x.size();
    if (n < 3) {
        throw std::invalid_argument("fit_line: need at least 3 points");
    }
    const double mx = compensated_mean(x);
    const double my = compensated_mean(y);
    CompensatedSum sxx;
    CompensatedSum sxy;
    for (std::size_t i = 0; i < n; ++i) {
        sxx.add((x[i] - mx) * (x[i] - mx));
        sxy.add((x[i] - mx) * (y[i] - my));
    }
    if (!(sxx.value() > 0.0)) {
        throw std::invalid_argument("fit_line: x values are all equal");
    }
    LinearFit f;
    f.points = n;
    f.slope = sxy.value() / sxx.value();
    f.intercept = my - f.slope * mx;
    CompensatedSum sse;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sse.add(r * r);
    }
    const auto dof = static_cast<double>(n - 2);
    f.slope_se = std::sqrt(sse.value() / dof / sxx.value());
    const boost::math::students_t dist(dof);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    f.ci_low = f.slope - t * f.slope_se;
    f.ci_high = f.slope + t * f.slope_se;
    return f;
}

double paired_t(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("paired_t: samples differ in length");
    }
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!std::isnan(a[i]) && !std::isnan(b[i])) {
            d.push_back(b[i] - a[i]);
        }
    }
    if (d.size() < 2) {
        return 0.0;
    }
    const double sd = sample_stddev(d);
    const double m = compensated_mean(d);
    if (sd == 0.0) {
        return m == 0.0 ? 0.0 : std::copysign(HUGE_VAL, m);
    }
    return m / (sd / std::sqrt(static_cast<double>(d.size())));
}

}  // namespace locbound
