#include "bmdrift/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bmdrift/errors.hpp"

namespace bmdrift {

namespace {

constexpr double kPi = std::numbers::pi;

double dist(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("kernels: point dimensions differ");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

void check_dim(std::span<const double> x, int d) {
    if (static_cast<int>(x.size()) != d) throw ValidationError("kernels: point has wrong dimension");
}

// Adaptive Gauss-Kronrod on [a,b] (b may be +inf), accumulated into acc.
template <class F>
void integrate_piece(F f, double a, double b, const QuadratureSettings& s, QuadratureResult& acc,
                     const char* what) {
    long evals = 0;
    auto counted = [&](double x) {
        ++evals;
        return f(x);
    };
    double err = 0.0, l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        counted, a, b, 20, s.rel_tol, &err, &l1);
    acc.evals += evals;
    if (!std::isfinite(v))
        throw NumericalError(std::string("kernels: ") + what + " quadrature produced a non-finite value");
    if (acc.evals > s.max_evals)
        throw NumericalError(std::string("kernels: ") + what + " quadrature exceeded " +
                             std::to_string(s.max_evals) + " evaluations");
    if (err > 2.0 * s.rel_tol * l1 + s.abs_tol)
        throw NumericalError(std::string("kernels: ") + what + " quadrature did not converge (error " +
                             std::to_string(err) + ", " + std::to_string(acc.evals) + " evaluations)");
    acc.value += v;
    acc.error += err;
}

// Upper bound on int_T^inf (2 pi t)^{-d/2} e^{-rate t} dt.
double tail_bound(int d, double rate, double T) {
    double b = kInf;
    if (d >= 3) b = std::pow(2.0 * kPi, -0.5 * d) * std::pow(T, 1.0 - 0.5 * d) / (0.5 * d - 1.0);
    if (rate > 0.0) b = std::min(b, std::pow(2.0 * kPi * T, -0.5 * d) * std::exp(-rate * T) / rate);
    return b;
}

double choose_t_max(int d, double rate, double t_split, double abs_tol) {
    if (d < 3 && !(rate > 0.0))
        throw NumericalError("kernels: tail not controllable (d = 2 needs a killing rate)");
    double T = std::max(t_split, 1.0);
    for (int i = 0; i < 400; ++i) {
        if (tail_bound(d, rate, T) < abs_tol / 10.0) return T;
        T *= 2.0;
    }
    throw NumericalError("kernels: could not find a truncation time for the tail bound");
}

}  // namespace

KernelSpec KernelSpec::transition(int d) {
    if (d < 1) throw ValidationError("kernels: dimension must be >= 1");
    KernelSpec k;
    k.kind = Kind::transition;
    k.dim = d;
    return k;
}

KernelSpec KernelSpec::green_free(int d) {
    if (d < 3) throw ValidationError("kernels: free Green kernel needs d >= 3");
    KernelSpec k;
    k.kind = Kind::green_free;
    k.dim = d;
    return k;
}

KernelSpec KernelSpec::green_killed(int d, double rate) {
    if (d < 2) throw ValidationError("kernels: killed Green kernel needs d >= 2");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("kernels: killing rate must be positive");
    KernelSpec k;
    k.kind = Kind::green_killed;
    k.dim = d;
    k.rate = rate;
    return k;
}

KernelSpec KernelSpec::green_drifted(const DriftSpec& f, std::optional<double> rate) {
    const int d = f.dim();
    if (d < 2) throw ValidationError("kernels: drifted Green kernel needs d >= 2");
    if (rate && (!(*rate > 0.0) || !std::isfinite(*rate)))
        throw ValidationError("kernels: killing rate must be positive");
    if (d == 2 && !rate) throw ValidationError("kernels: d = 2 drifted Green kernel needs a killing rate");
    KernelSpec k;
    k.kind = Kind::green_drifted;
    k.dim = d;
    k.rate = rate.value_or(0.0);
    k.drift = f;
    return k;
}

KernelSpec KernelSpec::martin(const KernelSpec& base, std::vector<double> x0) {
    if (base.kind == Kind::transition || base.kind == Kind::martin)
        throw ValidationError("kernels: Martin kernel needs a Green base kernel");
    check_dim(x0, base.dim);
    KernelSpec k;
    k.kind = Kind::martin;
    k.dim = base.dim;
    k.base = std::make_shared<const KernelSpec>(base);
    k.x0 = std::move(x0);
    return k;
}

bool KernelSpec::symmetric() const {
    return kind == Kind::transition || kind == Kind::green_free || kind == Kind::green_killed;
}

double transition_density(int d, double t, std::span<const double> x, std::span<const double> y) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("kernels: transition density needs t > 0");
    check_dim(x, d);
    check_dim(y, d);
    const double r = dist(x, y);
    return std::pow(2.0 * kPi * t, -0.5 * d) * std::exp(-r * r / (2.0 * t));
}

double green_free_radial(int d, double r) {
    if (d < 3) throw ValidationError("kernels: free Green kernel needs d >= 3");
    if (!(r > 0.0)) throw ValidationError("kernels: Green kernel is singular at x = y");
    const double c = std::tgamma(0.5 * d - 1.0) / (2.0 * std::pow(kPi, 0.5 * d));
    return c * std::pow(r, 2.0 - d);
}

double green_free(int d, std::span<const double> x, std::span<const double> y) {
    check_dim(x, d);
    check_dim(y, d);
    return green_free_radial(d, dist(x, y));
}

QuadratureResult green_integral(int d, double rate, double r, const QuadratureSettings& s) {
    if (d < 2) throw ValidationError("kernels: dimension must be >= 2");
    if (!(rate >= 0.0)) throw ValidationError("kernels: rate must be >= 0");
    if (d == 2 && !(rate > 0.0)) throw ValidationError("kernels: d = 2 needs a killing rate");
    if (!(r > 0.0)) throw ValidationError("kernels: Green kernel is singular at x = y");
    const double r2 = r * r;
    const double t_split = s.t_split > 0.0 ? s.t_split : r2;
    QuadratureResult acc;

    // small t: u = r^2 / (2t), u in [r^2/(2 t_split), inf)
    const double u0 = r2 / (2.0 * t_split);
    auto small = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double t = r2 / (2.0 * u);
        return std::pow(2.0 * kPi * t, -0.5 * d) * std::exp(-u - rate * t) * r2 / (2.0 * u * u);
    };
    integrate_piece(small, u0, kInf, s, acc, "green small-t");

    // large t: t = t_split e^v, integrated to infinity by the mapped rule
    auto large = [&](double v) {
        const double t = t_split * std::exp(v);
        if (!std::isfinite(t)) return 0.0;
        return std::pow(2.0 * kPi * t, -0.5 * d) * std::exp(-r2 / (2.0 * t) - rate * t) * t;
    };
    integrate_piece(large, 0.0, kInf, s, acc, "green large-t");
    return acc;
}

double green_killed(int d, double rate, std::span<const double> x, std::span<const double> y,
                    const QuadratureSettings& s) {
    if (!(rate > 0.0)) throw ValidationError("kernels: killing rate must be positive");
    check_dim(x, d);
    check_dim(y, d);
    return green_integral(d, rate, dist(x, y), s).value;
}

QuadratureResult green_drifted(const KernelSpec& spec, std::span<const double> x,
                               std::span<const double> y, const QuadratureSettings& s) {
    if (spec.kind != KernelSpec::Kind::green_drifted || !spec.drift)
        throw ValidationError("kernels: green_drifted needs a drifted kernel spec");
    const int d = spec.dim;
    check_dim(x, d);
    check_dim(y, d);
    const DriftSpec& f = *spec.drift;
    const double rate = spec.rate;
    std::vector<double> z(d), f0 = f.eval(0.0), ft(d);
    for (int i = 0; i < d; ++i) z[i] = y[i] - x[i];
    const double r = dist(x, y);
    if (!(r > 0.0)) throw ValidationError("kernels: drifted Green kernel is singular at x = y");
    const double r2 = r * r;
    const double t_split = s.t_split > 0.0 ? s.t_split : r2;
    const double T = choose_t_max(d, rate, t_split, s.abs_tol);
    if (T > f.t_max())
        throw NumericalError("kernels: tail not controllable, drift only defined up to t = " +
                             std::to_string(f.t_max()));

    auto ptilde = [&](double t) {
        f.eval_into(t, ft);
        double q = 0.0;
        for (int i = 0; i < d; ++i) {
            const double w = z[i] - (ft[i] - f0[i]);
            q += w * w;
        }
        return std::pow(2.0 * kPi * t, -0.5 * d) * std::exp(-q / (2.0 * t) - rate * t);
    };

    QuadratureResult acc;
    const double u0 = r2 / (2.0 * t_split);
    auto small = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double t = r2 / (2.0 * u);
        if (!(t > 0.0)) return 0.0;
        return ptilde(t) * r2 / (2.0 * u * u);
    };
    integrate_piece(small, u0, kInf, s, acc, "drifted small-t");
    const double vmax = std::log(T / t_split);
    if (vmax > 0.0) {
        auto large = [&](double v) {
            const double t = std::min(t_split * std::exp(v), T);
            return ptilde(t) * t;
        };
        integrate_piece(large, 0.0, vmax, s, acc, "drifted large-t");
    }
    acc.t_max = T;
    acc.tail_bound = tail_bound(d, rate, T);
    acc.error += acc.tail_bound;
    return acc;
}

double green_value(const KernelSpec& spec, std::span<const double> x, std::span<const double> y,
                   const QuadratureSettings& s) {
    switch (spec.kind) {
    case KernelSpec::Kind::green_free:
        return green_free(spec.dim, x, y);
    case KernelSpec::Kind::green_killed:
        return green_killed(spec.dim, spec.rate, x, y, s);
    case KernelSpec::Kind::green_drifted:
        return green_drifted(spec, x, y, s).value;
    default:
        throw ValidationError("kernels: green_value needs a Green kernel spec");
    }
}

double martin_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y,
                     const QuadratureSettings& s) {
    if (spec.kind != KernelSpec::Kind::martin || !spec.base)
        throw ValidationError("kernels: martin_kernel needs a Martin kernel spec");
    check_dim(x, spec.dim);
    check_dim(y, spec.dim);
    if (dist(y, spec.x0) == 0.0) throw ValidationError("kernels: Martin kernel singular at y = x0");
    if (dist(x, y) == 0.0) throw ValidationError("kernels: Martin kernel singular at x = y");
    if (spec.base->kind == KernelSpec::Kind::green_free) {
        // closed form ratio, exact homogeneity
        return std::pow(dist(spec.x0, y) / dist(x, y), spec.dim - 2.0);
    }
    return green_value(*spec.base, x, y, s) / green_value(*spec.base, spec.x0, y, s);
}

std::vector<std::vector<double>> standard_directions(int d) {
    std::vector<std::vector<double>> out;
    for (int i = 0; i < d; ++i)
        for (double sgn : {1.0, -1.0}) {
            std::vector<double> e(d, 0.0);
            e[i] = sgn;
            out.push_back(e);
        }
    if (d == 3) {
        const double c = 1.0 / std::sqrt(3.0);
        for (int m = 0; m < 8; ++m)
            out.push_back({(m & 1) ? -c : c, (m & 2) ? -c : c, (m & 4) ? -c : c});
    }
    return out;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ValidationError("kernels: bad log-spaced range");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * i / (count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

SandwichReport verify_green_sandwich(const DriftSpec& f, int d, std::optional<double> rate,
                                     const std::vector<double>& radii,
                                     const std::vector<std::vector<double>>& directions,
                                     const QuadratureSettings& s) {
    if (f.dim() != d) throw ValidationError("kernels: drift dimension differs from d");
    const auto cert = f.certificate();
    if (!cert || !(cert->constant == 0.0 || cert->exponent == 0.5))
        throw ValidationError("kernels: sandwich check needs a Hoelder(1/2) certificate");
    if (d >= 3 && rate) throw ValidationError("kernels: sandwich in d >= 3 is stated without killing");
    if (d == 2 && !rate) throw ValidationError("kernels: sandwich in d = 2 needs a killing rate");
    if (d < 2) throw ValidationError("kernels: sandwich needs d >= 2");
    if (radii.empty() || directions.empty()) throw ValidationError("kernels: empty sandwich grid");

    const KernelSpec drifted = KernelSpec::green_drifted(f, rate);
    SandwichReport rep;
    rep.c1 = kInf;
    rep.c2 = 0.0;
    const std::vector<double> x(d, 0.0);
    for (double r : radii) {
        const double g = rate ? green_integral(d, *rate, r, s).value : green_free_radial(d, r);
        // absolute tolerance scaled to the undrifted value so relative accuracy holds at every r
        QuadratureSettings sr = s;
        sr.abs_tol = std::min(s.abs_tol, g * s.rel_tol);
        for (const auto& u : directions) {
            check_dim(u, d);
            std::vector<double> y(d);
            for (int i = 0; i < d; ++i) y[i] = r * u[i];
            const double ratio = green_drifted(drifted, x, y, sr).value / g;
            rep.entries.push_back({r, u, ratio});
            rep.c1 = std::min(rep.c1, ratio);
            rep.c2 = std::max(rep.c2, ratio);
        }
    }
    return rep;
}

}  // namespace bmdrift
