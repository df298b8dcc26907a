#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bmdrift/drifts.hpp"

namespace bmdrift {

struct QuadratureSettings {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    double t_split = -1.0;  // <= 0 means r^2
    long max_evals = 400000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;       // quadrature error estimate plus tail bound
    double tail_bound = 0.0;  // analytic bound on the truncated tail
    double t_max = 0.0;
    long evals = 0;
};

struct KernelSpec {
    enum class Kind { transition, green_free, green_killed, green_drifted, martin };

    Kind kind = Kind::green_free;
    int dim = 3;
    double rate = 0.0;  // lambda; 0 means no killing
    std::optional<DriftSpec> drift;
    std::shared_ptr<const KernelSpec> base;
    std::vector<double> x0;

    static KernelSpec transition(int d);
    static KernelSpec green_free(int d);
    static KernelSpec green_killed(int d, double rate);
    static KernelSpec green_drifted(const DriftSpec& f, std::optional<double> rate = std::nullopt);
    static KernelSpec martin(const KernelSpec& base, std::vector<double> x0);

    bool symmetric() const;
};

double transition_density(int d, double t, std::span<const double> x, std::span<const double> y);

// c(d) r^{2-d}, c(d) = Gamma(d/2 - 1) / (2 pi^{d/2})
double green_free_radial(int d, double r);
double green_free(int d, std::span<const double> x, std::span<const double> y);

// Direct quadrature of int_0^inf e^{-rate t} p(t, r) dt (rate may be 0 for d >= 3).
QuadratureResult green_integral(int d, double rate, double r, const QuadratureSettings& s = {});

double green_killed(int d, double rate, std::span<const double> x, std::span<const double> y,
                    const QuadratureSettings& s = {});

QuadratureResult green_drifted(const KernelSpec& spec, std::span<const double> x,
                               std::span<const double> y, const QuadratureSettings& s = {});

// Value of any Green-type kernel (free, killed, drifted).
double green_value(const KernelSpec& spec, std::span<const double> x, std::span<const double> y,
                   const QuadratureSettings& s = {});

double martin_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y,
                     const QuadratureSettings& s = {});

struct SandwichEntry {
    double r;
    std::vector<double> direction;
    double ratio;
};

struct SandwichReport {
    double c1 = 0.0;
    double c2 = 0.0;
    std::vector<SandwichEntry> entries;
};

// Ratio of drifted to undrifted Green kernel at x = 0, y = r * u, over the
// grid of radii r and unit directions u.
SandwichReport verify_green_sandwich(const DriftSpec& f, int d, std::optional<double> rate,
                                     const std::vector<double>& radii,
                                     const std::vector<std::vector<double>>& directions,
                                     const QuadratureSettings& s = {});

// +-e_i plus, in d = 3, the eight (+-1,+-1,+-1)/sqrt(3).
std::vector<std::vector<double>> standard_directions(int d);

std::vector<double> log_spaced(double lo, double hi, int count);

}  // namespace bmdrift
