#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bmdrift/kernels.hpp"

namespace bmdrift {

// Points stored row-major with a fixed dimension.
struct PointSet {
    int dim = 1;
    std::vector<double> coords;

    PointSet() = default;
    PointSet(int d, std::vector<double> c);
    std::size_t size() const { return coords.size() / static_cast<std::size_t>(dim); }
    const double* point(std::size_t i) const { return coords.data() + i * dim; }
};

struct DiscreteMeasure {
    PointSet support;
    std::vector<double> weights;

    DiscreteMeasure(PointSet s, std::vector<double> w);  // validates
    static DiscreteMeasure uniform(PointSet s);
    std::size_t size() const { return weights.size(); }
};

struct ExcludeDiagonal {};
struct CellCutoff {
    double h;  // diagonal contributes w_i^2 (h/2)^{-alpha}
};
using Diagonal = std::variant<ExcludeDiagonal, CellCutoff>;

struct EnergyEstimate {
    double value = 0.0;
    double error_bound = 0.0;  // nonzero only for the blocked approximation
    bool exact = true;
};

inline constexpr std::size_t kExactEnergyLimit = std::size_t{1} << 14;

EnergyEstimate riesz_energy(const DiscreteMeasure& mu, double alpha, Diagonal diagonal = ExcludeDiagonal{});

// Double sum with the Martin kernel symmetrized as (M(x,y) + M(y,x)) / 2.
// A measure with a single atom and excluded diagonal has energy +inf.
double martin_energy(const DiscreteMeasure& mu, const KernelSpec& martin,
                     Diagonal diagonal = ExcludeDiagonal{});

struct RieszKernel {
    double alpha;
};
using EnergyKernel = std::variant<RieszKernel, KernelSpec>;

struct CapacityResult {
    double capacity = 0.0;
    double energy = 0.0;  // +inf sentinel allowed
    std::vector<double> weights;
    int iterations = 0;
    double gap = 0.0;  // relative Frank-Wolfe gap (g.mu - min g) / (g.mu)
    bool converged = false;
    std::string kernel_note;

    DiscreteMeasure minimizer(const PointSet& support) const { return DiscreteMeasure(support, weights); }
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 20000;
    // Unset: cell cutoff at the support's nearest-neighbor spacing. An excluded
    // diagonal is rejected since single atoms would then have zero energy.
    std::optional<CellCutoff> diagonal;
};

CapacityResult min_energy(const PointSet& support, const EnergyKernel& kernel,
                          const SolverOptions& opts = {});

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(const std::vector<double>& v);

double min_nn_spacing(const PointSet& pts);

struct FrostmanEstimate {
    double value = 0.0;
    double bracket_low = 0.0;
    double bracket_high = 0.0;
    std::vector<double> alphas;
    std::vector<double> slopes;  // log10-energy growth per level over the finest levels
    std::vector<std::vector<double>> energies;  // [alpha][level]
    double threshold = 0.05;
    int tail_levels = 3;
};

// family[k] approximates A at refinement level k; each level uses the
// cell-cutoff diagonal with h its own nearest-neighbor spacing. An alpha counts
// as bounded when the log10 min-energy grows by less than threshold per level
// over the finest tail_levels levels (and every smaller alpha is bounded too).
FrostmanEstimate frostman_dim(const std::vector<PointSet>& family, const std::vector<double>& alphas,
                              double threshold = 0.05, const SolverOptions& opts = {},
                              int tail_levels = 3);

// n equispaced points of [0,1], n >= 2.
PointSet equispaced_points(std::size_t n);
// Left endpoints of the 2^depth middle-thirds Cantor intervals of level depth.
PointSet cantor_points(int depth);

// Support-point CSV: one point per row, optional header.
PointSet load_points_csv(const std::string& path);

}  // namespace bmdrift
