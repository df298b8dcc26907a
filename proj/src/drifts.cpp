#include "bmdrift/drifts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include "bmdrift/errors.hpp"
#include "bmdrift/randpath.hpp"
#include "bmdrift/rng.hpp"

namespace bmdrift {

struct DriftSpec::Impl {
    Kind kind = Kind::zero;
    int dim = 1;
    double t_lo = 0.0;
    double t_hi = kInf;

    std::vector<double> vec;  // slope or unit direction
    double scale = 0.0;
    double gamma = 0.5;
    int terms = 0;
    std::uint64_t seed = 0;
    std::vector<double> phases;
    double hurst = 0.0;
    int coordinate = -1;
    int levels = 0;

    // tabulated / fbm
    std::vector<double> times;
    std::vector<double> values;
    bool uniform = false;
    double dt = 0.0;

    // rescaled
    std::shared_ptr<const Impl> base;
    double a = 1.0;
    double b = 0.0;
    std::vector<double> f_at_b;

    std::optional<HolderCertificate> fixed_cert;
    mutable std::once_flag cert_once;
    mutable std::optional<HolderCertificate> lazy_cert;
};

namespace {

using Impl = DriftSpec::Impl;

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void check_unit(const std::vector<double>& dir) {
    if (dir.empty()) throw ValidationError("drifts: direction must be nonempty");
    for (double x : dir)
        if (!std::isfinite(x)) throw ValidationError("drifts: direction must be finite");
    if (std::abs(norm(dir) - 1.0) > 1e-12) throw ValidationError("drifts: direction must have unit norm");
}

std::string vec_str(const std::vector<double>& v) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
    return os.str();
}

void eval_impl(const Impl& f, double t, std::span<double> out) {
    switch (f.kind) {
    case DriftSpec::Kind::zero:
        std::fill(out.begin(), out.end(), 0.0);
        return;
    case DriftSpec::Kind::linear:
        for (int j = 0; j < f.dim; ++j) out[j] = f.vec[j] * t;
        return;
    case DriftSpec::Kind::sqrt_cusp: {
        const double s = f.scale * std::sqrt(t);
        for (int j = 0; j < f.dim; ++j) out[j] = s * f.vec[j];
        return;
    }
    case DriftSpec::Kind::weierstrass: {
        double s = 0.0;
        double freq = std::numbers::pi;
        for (int j = 0; j <= f.terms; ++j) {
            s += std::exp2(-j * f.gamma) * std::cos(freq * t + f.phases[j]);
            freq *= 2.0;
        }
        for (int j = 0; j < f.dim; ++j) out[j] = s * f.vec[j];
        return;
    }
    case DriftSpec::Kind::fbm:
    case DriftSpec::Kind::tabulated: {
        const std::size_t n = f.times.size();
        std::size_t i;
        if (f.uniform) {
            const double x = (t - f.t_lo) / f.dt;
            i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(x))), n - 2);
        } else {
            const auto it = std::upper_bound(f.times.begin(), f.times.end(), t);
            i = std::min(static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - f.times.begin() - 1, 0)), n - 2);
        }
        const double w = (t - f.times[i]) / (f.times[i + 1] - f.times[i]);
        for (int j = 0; j < f.dim; ++j) {
            const double lo = f.values[i * f.dim + j];
            const double hi = f.values[(i + 1) * f.dim + j];
            out[j] = w == 0.0 ? lo : lo + w * (hi - lo);
        }
        return;
    }
    case DriftSpec::Kind::rescaled: {
        eval_impl(*f.base, f.a * f.a * t + f.b, out);
        for (int j = 0; j < f.dim; ++j) out[j] = (out[j] - f.f_at_b[j]) / f.a;
        return;
    }
    }
}

// Exact sup over knot pairs for small tables (for piecewise linear f and
// gamma <= 1 the sup over all pairs is attained at knots), dyadic index
// blocks otherwise.
HolderCertificate tabulated_certificate(const Impl& f, double gamma) {
    const std::size_t n = f.times.size();
    const int d = f.dim;
    auto ratio = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
            const double diff = f.values[j * d + k] - f.values[i * d + k];
            s += diff * diff;
        }
        return std::sqrt(s) / std::pow(f.times[j] - f.times[i], gamma);
    };
    double best = 0.0;
    int levels = -1;
    if (n <= 4097) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) best = std::max(best, ratio(i, j));
        levels = static_cast<int>(std::ceil(std::log2(static_cast<double>(n - 1))));
    } else {
        for (std::size_t stride = 1; stride < n; stride *= 2)
            for (std::size_t i = 0; i + stride < n; i += stride) best = std::max(best, ratio(i, i + stride));
        levels = static_cast<int>(std::floor(std::log2(static_cast<double>(n - 1))));
    }
    HolderCertificate c;
    c.exponent = gamma;
    c.constant = best;
    c.kind = CertificateKind::empirical;
    c.levels = levels;
    c.t_lo = f.t_lo;
    c.t_hi = f.t_hi;
    return c;
}

std::shared_ptr<Impl> make(DriftSpec::Kind k, int dim) {
    if (dim < 1) throw ValidationError("drifts: dim must be >= 1");
    auto p = std::make_shared<Impl>();
    p->kind = k;
    p->dim = dim;
    return p;
}

HolderCertificate analytic(double exponent, double constant) {
    HolderCertificate c;
    c.exponent = exponent;
    c.constant = constant;
    c.kind = CertificateKind::analytic;
    c.t_lo = 0.0;
    c.t_hi = kInf;
    return c;
}

}  // namespace

DriftSpec DriftSpec::zero(int dim) {
    auto p = make(Kind::zero, dim);
    p->fixed_cert = analytic(1.0, 0.0);
    return DriftSpec(p);
}

DriftSpec DriftSpec::linear(std::vector<double> slope) {
    auto p = make(Kind::linear, static_cast<int>(slope.size()));
    for (double x : slope)
        if (!std::isfinite(x)) throw ValidationError("drifts: slope must be finite");
    p->fixed_cert = analytic(1.0, norm(slope));
    p->vec = std::move(slope);
    return DriftSpec(p);
}

DriftSpec DriftSpec::sqrt_cusp(double scale, std::vector<double> direction) {
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw ValidationError("drifts: sqrt-cusp scale must be >= 0");
    check_unit(direction);
    auto p = make(Kind::sqrt_cusp, static_cast<int>(direction.size()));
    p->scale = scale;
    p->vec = std::move(direction);
    p->fixed_cert = analytic(0.5, scale);
    return DriftSpec(p);
}

DriftSpec DriftSpec::weierstrass(double gamma, int terms, std::uint64_t phase_seed,
                                 std::vector<double> direction) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("drifts: weierstrass exponent must lie in (0,1]");
    if (terms < 0 || terms > 40) throw ValidationError("drifts: weierstrass terms must lie in [0,40]");
    check_unit(direction);
    auto p = make(Kind::weierstrass, static_cast<int>(direction.size()));
    p->gamma = gamma;
    p->terms = terms;
    p->seed = phase_seed;
    p->vec = std::move(direction);
    RngStream rng(phase_seed, 0);
    for (int j = 0; j <= terms; ++j) p->phases.push_back(2.0 * std::numbers::pi * rng.uniform());
    return DriftSpec(p);
}

namespace {

std::shared_ptr<Impl> frozen_fbm(double hurst, std::uint64_t seed, int dim, int coordinate,
                                 int levels, double t1) {
    if (levels < 1 || levels > 24) throw ValidationError("drifts: fbm levels must lie in [1,24]");
    auto p = make(DriftSpec::Kind::fbm, dim);
    p->hurst = hurst;
    p->seed = seed;
    p->coordinate = coordinate;
    p->levels = levels;
    p->t_lo = 0.0;
    p->t_hi = t1;
    TimeGrid grid(0.0, t1, levels);
    RngStream rng(seed, 0);
    const int sampled = coordinate >= 0 ? 1 : dim;
    const PathSample x = fbm_sample(rng, grid, sampled, hurst);
    const std::size_t n = grid.size();
    p->times.resize(n);
    p->values.assign(n * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        p->times[i] = grid.time(i);
        for (int j = 0; j < sampled; ++j)
            p->values[i * dim + (coordinate >= 0 ? coordinate : j)] = x.at(i, j);
    }
    p->uniform = true;
    p->dt = grid.spacing();
    return p;
}

}  // namespace

DriftSpec DriftSpec::fbm_coordinate(double hurst, std::uint64_t seed, int dim, int coordinate,
                                    int levels, double t1) {
    if (coordinate < 0 || coordinate >= dim) throw ValidationError("drifts: fbm coordinate out of range");
    return DriftSpec(frozen_fbm(hurst, seed, dim, coordinate, levels, t1));
}

DriftSpec DriftSpec::fbm_full(double hurst, std::uint64_t seed, int dim, int levels, double t1) {
    return DriftSpec(frozen_fbm(hurst, seed, dim, -1, levels, t1));
}

DriftSpec DriftSpec::tabulated(std::vector<double> times, std::vector<double> values, int dim) {
    auto p = make(Kind::tabulated, dim);
    if (times.size() < 2) throw ValidationError("drifts: tabulated drift needs >= 2 rows");
    if (values.size() != times.size() * static_cast<std::size_t>(dim))
        throw ValidationError("drifts: tabulated values must have rows * dim entries");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) throw ValidationError("drifts: tabulated times must be finite");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw ValidationError("drifts: tabulated times must be strictly increasing");
    }
    for (double v : values)
        if (!std::isfinite(v)) throw ValidationError("drifts: tabulated values must be finite");
    if (times.front() < 0.0) throw ValidationError("drifts: tabulated times must be >= 0");
    p->t_lo = times.front();
    p->t_hi = times.back();
    p->times = std::move(times);
    p->values = std::move(values);
    return DriftSpec(p);
}

DriftSpec DriftSpec::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("drifts: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("drifts: " + path + " is empty");
    int dim = -1;
    std::vector<double> times, values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cols;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                cols.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ValidationError("drifts: " + path + " row " + std::to_string(row) + ": bad number '" + cell + "'");
            }
        }
        if (cols.size() < 2) throw ValidationError("drifts: " + path + " row " + std::to_string(row) + ": need time and >= 1 value");
        if (dim < 0) dim = static_cast<int>(cols.size()) - 1;
        if (static_cast<int>(cols.size()) - 1 != dim)
            throw ValidationError("drifts: " + path + " row " + std::to_string(row) + ": column count changed");
        times.push_back(cols[0]);
        values.insert(values.end(), cols.begin() + 1, cols.end());
    }
    if (dim < 0) throw ValidationError("drifts: " + path + " has a header but no data");
    return tabulated(std::move(times), std::move(values), dim);
}

DriftSpec DriftSpec::rescaled(double a, double b) const {
    if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("drifts: rescale factor must be positive");
    if (!std::isfinite(b) || !contains(b)) throw ValidationError("drifts: rescale shift outside the domain");
    auto p = make(Kind::rescaled, dim());
    p->base = impl_;
    p->a = a;
    p->b = b;
    p->f_at_b = eval(b);
    p->t_lo = 0.0;
    p->t_hi = std::isfinite(t_max()) ? (t_max() - b) / (a * a) : kInf;
    return DriftSpec(p);
}

DriftSpec::Kind DriftSpec::kind() const { return impl_->kind; }
int DriftSpec::dim() const { return impl_->dim; }
double DriftSpec::t_min() const { return impl_->t_lo; }
double DriftSpec::t_max() const { return impl_->t_hi; }

void DriftSpec::eval_into(double t, std::span<double> out) const {
    if (!(t >= impl_->t_lo && t <= impl_->t_hi))
        throw ValidationError("drifts: time " + std::to_string(t) + " outside the drift's interval");
    if (out.size() != static_cast<std::size_t>(impl_->dim))
        throw ValidationError("drifts: output span has the wrong dimension");
    eval_impl(*impl_, t, out);
}

std::vector<double> DriftSpec::eval(double t) const {
    std::vector<double> out(impl_->dim);
    eval_into(t, out);
    return out;
}

std::vector<double> eval_drift(const DriftSpec& f, double t) { return f.eval(t); }

std::optional<HolderCertificate> DriftSpec::certificate() const {
    const Impl& f = *impl_;
    if (f.fixed_cert) return f.fixed_cert;
    std::call_once(f.cert_once, [&] {
        switch (f.kind) {
        case Kind::weierstrass: {
            HolderCertificate c = holder_constant(*this, f.gamma, 20);
            c.constant *= 1.1;
            f.lazy_cert = c;
            break;
        }
        case Kind::fbm:
            f.lazy_cert = tabulated_certificate(f, f.hurst);
            break;
        case Kind::tabulated:
            f.lazy_cert = tabulated_certificate(f, 0.5);
            break;
        case Kind::rescaled: {
            const auto base = DriftSpec(f.base).certificate();
            if (base) {
                // |g(t)-g(s)| = |f(a^2 t+b) - f(a^2 s+b)|/a <= K a^{2 gamma - 1} |t-s|^gamma
                HolderCertificate c = *base;
                c.constant *= std::pow(f.a, 2.0 * c.exponent - 1.0);
                c.t_lo = std::max(0.0, (base->t_lo - f.b) / (f.a * f.a));
                c.t_hi = std::isfinite(base->t_hi) ? (base->t_hi - f.b) / (f.a * f.a) : kInf;
                f.lazy_cert = c;
            }
            break;
        }
        default:
            break;
        }
    });
    return f.lazy_cert;
}

std::string DriftSpec::describe() const {
    const Impl& f = *impl_;
    std::ostringstream os;
    switch (f.kind) {
    case Kind::zero: os << "zero(d=" << f.dim << ")"; break;
    case Kind::linear: os << "linear(slope=" << vec_str(f.vec) << ")"; break;
    case Kind::sqrt_cusp: os << "sqrt-cusp(K=" << f.scale << ",dir=" << vec_str(f.vec) << ")"; break;
    case Kind::weierstrass:
        os << "weierstrass(gamma=" << f.gamma << ",J=" << f.terms << ",seed=" << f.seed << ",dir=" << vec_str(f.vec) << ")";
        break;
    case Kind::fbm:
        os << "fbm(hurst=" << f.hurst << ",seed=" << f.seed << ",d=" << f.dim
           << ",coord=" << (f.coordinate >= 0 ? std::to_string(f.coordinate) : std::string("all"))
           << ",levels=" << f.levels << ")";
        break;
    case Kind::tabulated: os << "tabulated(rows=" << f.times.size() << ",d=" << f.dim << ")"; break;
    case Kind::rescaled: os << "rescaled(a=" << f.a << ",b=" << f.b << "," << DriftSpec(f.base).describe() << ")"; break;
    }
    return os.str();
}

HolderCertificate holder_constant(const DriftSpec& f, double gamma, int levels) {
    const double lo = std::max(0.0, f.t_min());
    const double hi = std::isfinite(f.t_max()) ? f.t_max() : std::max(lo + 1.0, 1.0);
    return holder_constant(f, gamma, levels, lo, hi);
}

HolderCertificate holder_constant(const DriftSpec& f, double gamma, int levels, double t_lo,
                                  double t_hi) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("drifts: holder exponent must lie in (0,1]");
    if (levels < 0 || levels > 26) throw ValidationError("drifts: holder levels must lie in [0,26]");
    if (!(t_hi > t_lo) || !f.contains(t_lo) || !f.contains(t_hi))
        throw ValidationError("drifts: holder interval must lie inside the drift's domain");
    const std::size_t n = (std::size_t{1} << levels) + 1;
    const int d = f.dim();
    const double h = (t_hi - t_lo) / static_cast<double>(n - 1);
    std::vector<double> vals(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (i + 1 == n) ? t_hi : t_lo + static_cast<double>(i) * h;
        f.eval_into(t, std::span<double>(vals.data() + i * d, d));
    }
    double best = 0.0;
    for (std::size_t stride = 1; stride < n; stride *= 2) {
        const double denom = std::pow(static_cast<double>(stride) * h, gamma);
        for (std::size_t i = 0; i + stride < n; i += stride) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                const double diff = vals[(i + stride) * d + k] - vals[i * d + k];
                s += diff * diff;
            }
            best = std::max(best, std::sqrt(s) / denom);
        }
    }
    HolderCertificate c;
    c.exponent = gamma;
    c.constant = best;
    c.kind = CertificateKind::empirical;
    c.levels = levels;
    c.t_lo = t_lo;
    c.t_hi = t_hi;
    return c;
}

}  // namespace bmdrift
