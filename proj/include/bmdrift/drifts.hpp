#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bmdrift {

enum class CertificateKind { analytic, empirical };

struct HolderCertificate {
    double exponent = 1.0;
    double constant = 0.0;
    CertificateKind kind = CertificateKind::analytic;
    int levels = -1;  // dyadic resolution for empirical certificates
    double t_lo = 0.0;
    double t_hi = 1.0;
};

// Immutable description of a deterministic drift f : [t_min, t_max] -> R^d.
class DriftSpec {
public:
    enum class Kind { zero, linear, sqrt_cusp, weierstrass, fbm, tabulated, rescaled };

    static DriftSpec zero(int dim);
    static DriftSpec linear(std::vector<double> slope);
    // K * sqrt(t) * direction
    static DriftSpec sqrt_cusp(double scale, std::vector<double> direction);
    // sum_{j=0..terms} 2^{-j gamma} cos(2^j pi t + theta_j) * direction
    static DriftSpec weierstrass(double gamma, int terms, std::uint64_t phase_seed,
                                 std::vector<double> direction);
    // One fBM coordinate frozen on a dyadic grid of [0, t1]; other coordinates zero.
    static DriftSpec fbm_coordinate(double hurst, std::uint64_t seed, int dim, int coordinate,
                                    int levels = 20, double t1 = 1.0);
    // Independent fBM in every coordinate, frozen the same way.
    static DriftSpec fbm_full(double hurst, std::uint64_t seed, int dim, int levels = 20,
                              double t1 = 1.0);
    // values are row-major, times.size() rows of dim entries; linear interpolation
    static DriftSpec tabulated(std::vector<double> times, std::vector<double> values, int dim);
    // CSV with a header row: time, v_1, ..., v_d
    static DriftSpec from_csv(const std::string& path);

    // t -> (f(a^2 t + b) - f(b)) / a
    DriftSpec rescaled(double a, double b) const;

    Kind kind() const;
    int dim() const;
    double t_min() const;
    double t_max() const;  // +inf for drifts defined on [0, inf)
    bool contains(double t) const { return t >= t_min() && t <= t_max(); }

    void eval_into(double t, std::span<double> out) const;
    std::vector<double> eval(double t) const;

    // Built-in certificate (computed lazily for empirical kinds).
    std::optional<HolderCertificate> certificate() const;

    std::string describe() const;

    struct Impl;

private:
    explicit DriftSpec(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

std::vector<double> eval_drift(const DriftSpec& f, double t);

// Max of |f(b)-f(a)| / (b-a)^gamma over the dyadic intervals [a,b] of
// [t_lo, t_hi] at levels 0..levels. Default interval: [0,1] for drifts on
// [0, inf), the whole domain for finite ones.
HolderCertificate holder_constant(const DriftSpec& f, double gamma, int levels);
HolderCertificate holder_constant(const DriftSpec& f, double gamma, int levels, double t_lo,
                                  double t_hi);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace bmdrift
