#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "bmdrift/drifts.hpp"
#include "bmdrift/randpath.hpp"
#include "bmdrift/rng.hpp"

namespace bmdrift {

// Points tagged with nondecreasing times.
struct TimedCloud {
    int dim = 1;
    std::vector<double> times;
    std::vector<double> coords;  // row-major

    TimedCloud(int d, std::vector<double> t, std::vector<double> c);  // validates
    std::size_t size() const { return times.size(); }
    const double* point(std::size_t i) const { return coords.data() + i * dim; }
};

// path + f on grid indices [first, last].
TimedCloud timed_cloud(const PathSample& path, const DriftSpec* f = nullptr, std::size_t first = 0,
                       std::size_t last = static_cast<std::size_t>(-1));

struct ClosestApproach {
    double distance = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    std::size_t i1 = 0;
    std::size_t i2 = 0;
    double gap = 0.0;
    int levels = -1;           // grid levels when known
    std::size_t pair_checks = 0;
    bool hashed = false;       // false when the exhaustive loop ran
};

inline constexpr std::size_t kBruteForceLimit = std::size_t{1} << 12;

struct ApproachOptions {
    bool exhaustive_below_limit = true;
};

// Minimum distance over pairs with |t1 - t2| >= gap. With one cloud, pairs
// are distinct indices of that cloud; with two, one point from each.
ClosestApproach closest_approach(const TimedCloud& a, const TimedCloud* b, double gap, double cell,
                                 const ApproachOptions& opts = {});

struct ScalingReport {
    int dim = 0;
    std::vector<int> levels;
    std::vector<double> median_distance;            // per level
    std::vector<std::vector<double>> distances;     // [seed][level]
    std::vector<double> seed_exponents;             // slope of log2 distance vs level
    double exponent = 0.0;                          // slope of log2 median distance
    double exponent_stderr = 0.0;
    std::vector<double> hit_fraction;               // per level: distance <= sqrt(spacing)
    double gap = 0.0;
};

// Closest approach between B+f on [0, 1/2] and on [1/2, 1] with time gap
// delta, on nested bridge refinements of one path per seed.
ScalingReport doublepoint_scaling(std::uint64_t seed, int d, const DriftSpec& f, double delta, int level_min,
                                  int level_max, int seeds);

// Closest approach between B1+f1 started at x1 and B2+f2 started at x2 on [0,1].
ScalingReport two_path_intersection(std::uint64_t seed, int d, const DriftSpec& f1, const DriftSpec& f2,
                                    const std::vector<double>& x1, const std::vector<double>& x2, int level_min,
                                    int level_max, int seeds);

struct RPrimeConfig {
    double s, t, u, v;
    double alpha;
};

// Normalized increment correlation of B + X (X fBM with Hurst alpha).
double r_prime(const RPrimeConfig& c);

struct ClusteredPoint {
    double s, t, u, v;
};

struct RPrimeReport {
    double alpha = 0.0;
    double a = 0.0;
    double delta = 0.0;
    std::vector<double> L;
    std::vector<double> max_abs;               // per L
    std::vector<std::size_t> separated_points;  // per L
    std::size_t separated_violations = 0;      // |r'| above the mean-value bound
    bool decreasing = false;
    double clustered_min_ratio = 0.0;
    ClusteredPoint clustered_argmin{};
    std::size_t clustered_points = 0;
    std::size_t clustered_violations = 0;      // ratio <= 0 or not finite
};

struct RPrimeGrid {
    int steps = 24;  // per scanned coordinate
    std::vector<ClusteredPoint> clustered;  // replaces the generated clustered grid if nonempty
};

RPrimeReport verify_rprime_inequalities(double alpha, double a, double delta, const std::vector<double>& L,
                                        const RPrimeGrid& grid = {});

}  // namespace bmdrift
