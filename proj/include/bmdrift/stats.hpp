#pragma once

#include <cstddef>
#include <vector>

namespace bmdrift {

// Welford running mean/variance.
class RunningStats {
public:
    void add(double x);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  // unbiased
    double stderr_mean() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Interval {
    double low;
    double high;
};

// Wilson score interval; z = 1.959964 gives 95%.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct LinearFit {
    double slope;
    double intercept;
    double slope_stderr;
    double r2;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
    double statistic;
    double p_value;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace bmdrift
