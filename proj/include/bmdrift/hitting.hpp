#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "bmdrift/capacity.hpp"
#include "bmdrift/drifts.hpp"
#include "bmdrift/rng.hpp"
#include "bmdrift/stats.hpp"

namespace bmdrift {

struct BallTarget {
    std::vector<double> center;
    double radius;
};
struct ShellTarget {
    std::vector<double> center;
    double inner;
    double outer;
};
struct BallUnionTarget {
    std::vector<BallTarget> balls;
};
struct DustTarget {
    PointSet points;
    double hit_radius;
};

class TargetSet {
public:
    using Variant = std::variant<BallTarget, ShellTarget, BallUnionTarget, DustTarget>;

    explicit TargetSet(Variant v);  // validates radii and dimensions

    int dim() const { return dim_; }
    const Variant& variant() const { return v_; }
    // Euclidean distance to the set, <= 0 inside.
    double distance(const double* x) const;
    const std::vector<double>& enclosing_center() const { return center_; }
    double enclosing_radius() const { return radius_; }
    double diameter() const { return 2.0 * radius_; }
    // smallest curvature radius or thickness of the boundary
    double feature_size() const { return feature_; }

    // Surface points for Martin capacity (seen from x0) and the matching
    // cell-cutoff length for the diagonal.
    struct Discretization {
        PointSet points;
        double cutoff;
    };
    Discretization discretize(const std::vector<double>& x0, std::size_t n) const;

private:
    Variant v_;
    int dim_ = 0;
    std::vector<double> center_;
    double radius_ = 0.0;
    double feature_ = 0.0;
};

struct HitOptions {
    double escape_factor = 32.0;  // R = factor * (diameter + start distance)
    double step_scale = 4.0;      // step sd ~ distance / step_scale
    long max_steps = 50'000'000;  // per trial
};

struct HitResult {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t trials = 0;
    std::size_t hits = 0;
    double bias_bound = 0.0;
    std::optional<double> killed;
    double escape_radius = 0.0;  // 0 when no escape truncation
    double mean_steps = 0.0;
};

// Hitting probability of the target by x + W_t + f(t) - f(0). Time steps
// adapt to the distance from the target, floored at 2^-step_levels.
HitResult hit_prob(RngStream& rng, const std::vector<double>& start, const DriftSpec& f,
                   const TargetSet& target, int d, std::optional<double> rate, std::size_t trials,
                   int step_levels, const HitOptions& opts = {});

struct SandwichCheck {
    double cap = 0.0;             // Cap_M on the fine discretization
    double cap_coarse = 0.0;      // Cap_M on a 4x coarser one
    double discretization = 0.0;  // |cap - cap_coarse|
    HitResult mc;
    double ci_width = 0.0;
    double slack = 0.0;
    double lower = 0.0;  // cap/2 - slack
    double upper = 0.0;  // cap + slack
    bool holds = false;
    std::size_t support = 0;
    int solver_iterations = 0;
};

struct SandwichOptions {
    std::size_t support = 1024;  // <= 4096
    int step_levels = 14;
    HitOptions hit;
};

SandwichCheck capacity_sandwich_check(RngStream& rng, const TargetSet& target, const std::vector<double>& x0,
                                      int d, std::size_t trials, const SandwichOptions& opts = {});

struct RecurrenceReport {
    double p_visit = 0.0;  // P(T > 0)
    Interval p_ci{0.0, 0.0};
    double mean_T = 0.0;
    double mean_T_stderr = 0.0;
    double second_moment = 0.0;
    double moment_ratio = 0.0;  // (E T)^2 / E T^2
    std::size_t trials = 0;
};

// Occupation time of the closed unit disc by B + f on [n, n^2], B_0 = w, d = 2.
RecurrenceReport recurrence_statistic(RngStream& rng, const DriftSpec& f, const std::vector<double>& w,
                                      double n, std::size_t trials, double dt = 1e-2);

enum class InjectivityPartner { A1, A0_shifted };

struct InjectivityRow {
    double eps;
    int depth;
    double estimate;
    Interval ci;
    std::size_t hits;
};

struct InjectivityReport {
    std::vector<InjectivityRow> rows;
    std::size_t trials = 0;
    int depth = 0;
    InjectivityPartner partner = InjectivityPartner::A1;
};

// B in d = 1 sampled exactly at the times of A0 and its partner set; the sets
// are truncated at depth min(depth, 2 log2(1/eps)) for each eps.
InjectivityReport injectivity_experiment(RngStream& rng, int depth, std::size_t trials,
                                         const std::vector<double>& eps = {0x1p-6, 0x1p-8, 0x1p-10},
                                         InjectivityPartner partner = InjectivityPartner::A1);

}  // namespace bmdrift
