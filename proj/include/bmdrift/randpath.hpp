#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bmdrift/rng.hpp"

namespace bmdrift {

// Uniform dyadic grid: 2^levels + 1 points on [t0, t1].
class TimeGrid {
public:
    TimeGrid(double t0, double t1, int levels);

    double t0() const { return t0_; }
    double t1() const { return t1_; }
    int levels() const { return levels_; }
    std::size_t size() const { return (std::size_t{1} << levels_) + 1; }
    double spacing() const { return (t1_ - t0_) / static_cast<double>(std::size_t{1} << levels_); }
    double time(std::size_t i) const;
    TimeGrid refined() const { return TimeGrid(t0_, t1_, levels_ + 1); }

    bool operator==(const TimeGrid&) const = default;

private:
    double t0_;
    double t1_;
    int levels_;
};

enum class PathSource { brownian, fractional, composite };

// d-dimensional trajectory sampled on a TimeGrid, stored row-major.
struct PathSample {
    TimeGrid grid;
    int dim;
    std::vector<double> coords;  // size() * dim
    PathSource source = PathSource::composite;

    PathSample(TimeGrid g, int d, PathSource src);

    std::size_t size() const { return grid.size(); }
    double& at(std::size_t i, int j) { return coords[i * dim + j]; }
    double at(std::size_t i, int j) const { return coords[i * dim + j]; }
    std::span<const double> point(std::size_t i) const {
        return {coords.data() + i * dim, static_cast<std::size_t>(dim)};
    }
};

PathSample brownian_sample(RngStream& rng, const TimeGrid& grid, int dim);

// One level of Brownian-bridge midpoint refinement.
PathSample refine_bridge(RngStream& rng, const PathSample& path);

enum class FbmMethod { automatic, circulant, cholesky };

// Largest grid size for which the dense Cholesky fallback is attempted.
inline constexpr std::size_t kCholeskyLimit = std::size_t{1} << 12;

PathSample fbm_sample(RngStream& rng, const TimeGrid& grid, int dim, double hurst,
                      FbmMethod method = FbmMethod::automatic);

// Exact fBM covariance (s^{2H} + t^{2H} - |t-s|^{2H}) / 2.
double fbm_covariance(double s, double t, double hurst);

}  // namespace bmdrift
