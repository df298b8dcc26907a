#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bmdrift/drifts.hpp"
#include "bmdrift/randpath.hpp"
#include "bmdrift/rng.hpp"

namespace bmdrift {

struct PointCloud {
    int dim = 1;
    std::vector<double> coords;  // row-major
    std::string provenance;

    PointCloud(int d, std::vector<double> c, std::string prov);  // validates
    std::size_t size() const { return coords.size() / static_cast<std::size_t>(dim); }
    const double* point(std::size_t i) const { return coords.data() + i * dim; }
};

struct DimEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int level_min = 0;
    int level_max = 0;
    double r2 = 0.0;
    std::string method = "minkowski-proxy";
    std::size_t points = 0;
    std::vector<int> levels;               // every level counted
    std::vector<std::uint64_t> counts;     // occupied boxes per level
    std::vector<std::string> warnings;
};

struct LevelRange {
    int min = 0;
    int max = 24;
};

// Occupied boxes of side 2^-level in the grid anchored at the origin.
std::uint64_t box_count(const PointCloud& cloud, int level);

// Regresses log2 N(2^-k) on k over the unsaturated levels (N < points/10)
// of the range; with no range given, the window is the finest
// kDefaultWindow unsaturated levels.
inline constexpr int kDefaultWindow = 4;
DimEstimate boxcount_dim(const PointCloud& cloud, std::optional<LevelRange> range = std::nullopt);

// Binary digits x_n (n = 1..depth) forced to zero on the given ranges.
struct DyadicSet {
    int depth = 0;
    std::vector<std::pair<int, int>> forced_zero;  // inclusive, 1-based
    double offset = 0.0;

    std::vector<int> free_positions() const;
    std::size_t size() const { return std::size_t{1} << free_positions().size(); }
    // members as integers m, value = offset + m / 2^depth, ascending
    std::vector<std::uint64_t> numerators() const;
    std::vector<double> members() const;
    bool contains(double t) const;
    // dyadic intervals of length 2^-level needed to cover the set
    std::uint64_t covering_count(int level) const;
};

enum class DyadicWhich { A0, A1 };

inline constexpr int kMaxDyadicDepth = 24;
DyadicSet build_dyadic_set(DyadicWhich which, int depth);

struct CoverReport {
    bool covered = false;
    std::uint64_t missing = 0;
    std::uint64_t total = 0;  // dyadics checked
    double offset = 0.0;
};

// Checks that every dyadic offset + m/2^depth, 0 <= m < 2^depth, is a sum.
CoverReport sumset_cover_check(const DyadicSet& a, const DyadicSet& b, int depth);

struct IntervalUnion {
    std::vector<std::pair<double, double>> intervals;  // closed
};
using TimeSubset = std::variant<IntervalUnion, DyadicSet>;

IntervalUnion cantor_intervals(int depth);
IntervalUnion whole_interval(double a, double b);

// Grid indices i with grid.time(i) in A.
std::vector<std::size_t> subset_indices(const TimeGrid& grid, const TimeSubset& A);

PointCloud image_cloud(const PathSample& path, const DriftSpec& f, const TimeSubset& A);
PointCloud graph_cloud(const PathSample& path, const DriftSpec& f, const TimeSubset& A);

// Image of B + (fBM_alpha, 0, 0) in d = 3; with_drift = false gives the f = 0 control.
DimEstimate cuzick_experiment(double alpha, int d, std::size_t samples, RngStream& rng,
                              bool with_drift = true);

void write_cloud_csv(const PointCloud& cloud, const std::string& path);
PointCloud read_cloud_csv(const std::string& path);

}  // namespace bmdrift
