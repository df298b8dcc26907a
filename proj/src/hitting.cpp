#include "bmdrift/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bmdrift/errors.hpp"
#include "bmdrift/fracdim.hpp"

namespace bmdrift {

namespace {

constexpr double kPi = std::numbers::pi;

double norm_diff(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

void check_vec(const std::vector<double>& v, int d, const char* what) {
    if (static_cast<int>(v.size()) != d) throw ValidationError(std::string("hitting: ") + what + " has the wrong dimension");
    for (double x : v)
        if (!std::isfinite(x)) throw ValidationError(std::string("hitting: ") + what + " must be finite");
}

// Unit-ball volume in dimension k.
double unit_ball_volume(int k) { return std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k + 1.0); }

// Nearly uniform points on the unit sphere in R^d.
std::vector<double> sphere_points(int d, std::size_t n) {
    std::vector<double> out(n * d);
    if (d == 3) {
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < n; ++i) {
            const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * static_cast<double>(i);
            out[i * 3] = r * std::cos(phi);
            out[i * 3 + 1] = r * std::sin(phi);
            out[i * 3 + 2] = z;
        }
        return out;
    }
    RngStream rng(0x5151, n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
            out[i * d + k] = rng.normal();
            s += out[i * d + k] * out[i * d + k];
        }
        s = std::sqrt(s);
        for (int k = 0; k < d; ++k) out[i * d + k] /= s;
    }
    return out;
}

double sphere_area(int d, double r) { return d * unit_ball_volume(d) * std::pow(r, d - 1); }

// Cell cutoff h for surface patches of the given area: (h/2)^{-1} is the mean
// inverse distance on a flat disc of that area, 16 / (3 pi s).
double patch_cutoff(int d, double area) {
    const double s = std::pow(area / unit_ball_volume(d - 1), 1.0 / (d - 1));
    return 3.0 * kPi * s / 8.0;
}

}  // namespace

TargetSet::TargetSet(Variant v) : v_(std::move(v)) {
    std::visit(
        [this](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, BallTarget>) {
                dim_ = static_cast<int>(t.center.size());
                check_vec(t.center, dim_, "ball center");
                if (!(t.radius > 0.0)) throw ValidationError("hitting: ball radius must be positive");
                center_ = t.center;
                radius_ = t.radius;
                feature_ = t.radius;
            } else if constexpr (std::is_same_v<T, ShellTarget>) {
                dim_ = static_cast<int>(t.center.size());
                check_vec(t.center, dim_, "shell center");
                if (!(t.inner > 0.0) || !(t.outer > t.inner)) throw ValidationError("hitting: shell needs 0 < inner < outer");
                center_ = t.center;
                radius_ = t.outer;
                feature_ = std::min(t.inner, t.outer - t.inner);
            } else if constexpr (std::is_same_v<T, BallUnionTarget>) {
                if (t.balls.empty()) throw ValidationError("hitting: union of balls is empty");
                dim_ = static_cast<int>(t.balls[0].center.size());
                std::vector<double> lo(dim_, kInf), hi(dim_, -kInf);
                for (const auto& b : t.balls) {
                    check_vec(b.center, dim_, "ball center");
                    if (!(b.radius > 0.0)) throw ValidationError("hitting: ball radius must be positive");
                    for (int k = 0; k < dim_; ++k) {
                        lo[k] = std::min(lo[k], b.center[k] - b.radius);
                        hi[k] = std::max(hi[k], b.center[k] + b.radius);
                    }
                }
                center_.resize(dim_);
                for (int k = 0; k < dim_; ++k) center_[k] = 0.5 * (lo[k] + hi[k]);
                feature_ = kInf;
                for (const auto& b : t.balls) feature_ = std::min(feature_, b.radius);
                for (const auto& b : t.balls)
                    radius_ = std::max(radius_, norm_diff(b.center.data(), center_.data(), dim_) + b.radius);
            } else {
                dim_ = t.points.dim;
                if (t.points.size() == 0) throw ValidationError("hitting: dust target is empty");
                if (!(t.hit_radius > 0.0)) throw ValidationError("hitting: dust hit radius must be positive");
                feature_ = t.hit_radius;
                std::vector<double> lo(dim_, kInf), hi(dim_, -kInf);
                for (std::size_t i = 0; i < t.points.size(); ++i)
                    for (int k = 0; k < dim_; ++k) {
                        lo[k] = std::min(lo[k], t.points.point(i)[k]);
                        hi[k] = std::max(hi[k], t.points.point(i)[k]);
                    }
                center_.resize(dim_);
                for (int k = 0; k < dim_; ++k) center_[k] = 0.5 * (lo[k] + hi[k]);
                for (std::size_t i = 0; i < t.points.size(); ++i)
                    radius_ = std::max(radius_, norm_diff(t.points.point(i), center_.data(), dim_) + t.hit_radius);
            }
        },
        v_);
    if (dim_ < 1) throw ValidationError("hitting: target dimension must be >= 1");
}

double TargetSet::distance(const double* x) const {
    return std::visit(
        [&](const auto& t) -> double {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, BallTarget>) {
                return norm_diff(x, t.center.data(), dim_) - t.radius;
            } else if constexpr (std::is_same_v<T, ShellTarget>) {
                const double r = norm_diff(x, t.center.data(), dim_);
                return std::max(t.inner - r, r - t.outer);
            } else if constexpr (std::is_same_v<T, BallUnionTarget>) {
                double best = kInf;
                for (const auto& b : t.balls) best = std::min(best, norm_diff(x, b.center.data(), dim_) - b.radius);
                return best;
            } else {
                double best = kInf;
                for (std::size_t i = 0; i < t.points.size(); ++i)
                    best = std::min(best, norm_diff(x, t.points.point(i), dim_));
                return best - t.hit_radius;
            }
        },
        v_);
}

TargetSet::Discretization TargetSet::discretize(const std::vector<double>& x0, std::size_t n) const {
    check_vec(x0, dim_, "reference point");
    if (n < 1) throw ValidationError("hitting: discretization needs >= 1 point");
    const int d = dim_;
    if (d < 2) throw ValidationError("hitting: surface discretization needs d >= 2");
    auto sphere = [&](const std::vector<double>& c, double r, std::size_t m, std::vector<double>& out) {
        const std::vector<double> u = sphere_points(d, m);
        for (std::size_t i = 0; i < m; ++i)
            for (int k = 0; k < d; ++k) out.push_back(c[k] + r * u[i * d + k]);
    };
    return std::visit(
        [&](const auto& t) -> Discretization {
            using T = std::decay_t<decltype(t)>;
            std::vector<double> pts;
            if constexpr (std::is_same_v<T, BallTarget>) {
                sphere(t.center, t.radius, n, pts);
                return {PointSet(d, pts), patch_cutoff(d, sphere_area(d, t.radius) / n)};
            } else if constexpr (std::is_same_v<T, ShellTarget>) {
                // the sphere a path from x0 meets first
                const double r0 = norm_diff(x0.data(), t.center.data(), d);
                const double r = r0 >= t.outer ? t.outer : t.inner;
                sphere(t.center, r, n, pts);
                return {PointSet(d, pts), patch_cutoff(d, sphere_area(d, r) / n)};
            } else if constexpr (std::is_same_v<T, BallUnionTarget>) {
                double total = 0.0;
                for (const auto& b : t.balls) total += sphere_area(d, b.radius);
                for (std::size_t j = 0; j < t.balls.size(); ++j) {
                    const auto& b = t.balls[j];
                    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                                 static_cast<double>(n) * sphere_area(d, b.radius) / total)));
                    std::vector<double> sp;
                    sphere(b.center, b.radius, m, sp);
                    for (std::size_t i = 0; i < m; ++i) {
                        bool covered = false;
                        for (std::size_t o = 0; o < t.balls.size(); ++o)
                            if (o != j && norm_diff(sp.data() + i * d, t.balls[o].center.data(), d) < t.balls[o].radius)
                                covered = true;
                        if (!covered) pts.insert(pts.end(), sp.begin() + i * d, sp.begin() + (i + 1) * d);
                    }
                }
                return {PointSet(d, pts), patch_cutoff(d, total / n)};
            } else {
                return {t.points, 2.0 * t.hit_radius};
            }
        },
        v_);
}

HitResult hit_prob(RngStream& rng, const std::vector<double>& start, const DriftSpec& f, const TargetSet& target,
                   int d, std::optional<double> rate, std::size_t trials, int step_levels, const HitOptions& opts) {
    if (d < 2) throw ValidationError("hitting: d must be >= 2");
    if (target.dim() != d || f.dim() != d) throw ValidationError("hitting: dimensions of target, drift and d differ");
    check_vec(start, d, "start");
    if (rate && (!(*rate > 0.0) || !std::isfinite(*rate))) throw ValidationError("hitting: killing rate must be positive");
    if (d == 2 && !rate) throw ValidationError("hitting: d = 2 needs a killing rate (recurrent, no escape bound)");
    if (trials == 0) throw ValidationError("hitting: trials must be positive");
    if (step_levels < 1 || step_levels > 40) throw ValidationError("hitting: step_levels must lie in [1,40]");
    if (std::isfinite(f.t_max()) || f.t_min() > 0.0)
        throw ValidationError("hitting: drift must be defined on [0, inf)");
    if (!(opts.escape_factor > 1.0) || !(opts.step_scale > 0.0))
        throw ValidationError("hitting: escape factor must exceed 1 and step scale be positive");

    const double h_min = std::ldexp(1.0, -step_levels);
    const std::vector<double>& c = target.enclosing_center();
    const double start_dist = norm_diff(start.data(), c.data(), d);
    HitResult res;
    res.trials = trials;
    res.killed = rate;
    double R = kInf;
    if (d >= 3) {
        R = opts.escape_factor * (target.diameter() + start_dist);
        res.escape_radius = R;
        res.bias_bound = std::pow(target.enclosing_radius() / R, d - 2.0);
    }
    const std::vector<double> f0 = f.eval(0.0);
    const double feature = target.feature_size();
    std::vector<double> x(d), fa(d), fb(d), xn(d);
    double total_steps = 0.0;

    for (std::size_t trial = 0; trial < trials; ++trial) {
        x = start;
        double t = 0.0;
        fa = f0;
        const double kill = rate ? rng.exponential(*rate) : kInf;
        double dist = target.distance(x.data());
        bool hit = dist <= 0.0;
        long steps = 0;
        while (!hit) {
            double h = std::max(h_min, (dist / opts.step_scale) * (dist / opts.step_scale));
            h = std::min(h, kill - t);
            f.eval_into(t + h, fb);
            // keep the drift increment below half the distance
            while (h > h_min) {
                const double df = norm_diff(fb.data(), fa.data(), d);
                if (df <= 0.5 * dist) break;
                h = std::max(h_min, 0.5 * h);
                f.eval_into(t + h, fb);
            }
            const double sd = std::sqrt(h);
            for (int k = 0; k < d; ++k) xn[k] = x[k] + sd * rng.normal() + (fb[k] - fa[k]);
            t += h;
            const double dn = target.distance(xn.data());
            if (dn <= 0.0) {
                hit = true;
            } else if (sd <= feature && rng.uniform() < std::exp(-2.0 * dist * dn / h)) {
                hit = true;  // bridge crossed between the grid points; half-space formula, so only on flat-looking boundaries
            }
            if (hit || t >= kill) break;
            if (norm_diff(xn.data(), c.data(), d) >= R) break;
            x.swap(xn);
            fa.swap(fb);
            dist = dn;
            if (++steps > opts.max_steps)
                throw NumericalError("hitting: trial exceeded " + std::to_string(opts.max_steps) + " steps");
        }
        total_steps += static_cast<double>(steps);
        res.hits += hit ? 1 : 0;
    }
    res.estimate = static_cast<double>(res.hits) / static_cast<double>(trials);
    const Interval ci = wilson_interval(res.hits, trials);
    res.ci_low = std::min(ci.low, res.estimate);
    res.ci_high = std::max(ci.high, res.estimate);
    res.mean_steps = total_steps / static_cast<double>(trials);
    return res;
}

SandwichCheck capacity_sandwich_check(RngStream& rng, const TargetSet& target, const std::vector<double>& x0, int d,
                                      std::size_t trials, const SandwichOptions& opts) {
    if (d < 3) throw ValidationError("hitting: capacity sandwich needs d >= 3");
    if (target.dim() != d) throw ValidationError("hitting: target dimension differs from d");
    if (opts.support < 4 || opts.support > 4096) throw ValidationError("hitting: support size must lie in [4, 4096]");
    if (target.distance(x0.data()) <= 0.0) throw ValidationError("hitting: reference point lies in the target");
    const KernelSpec martin = KernelSpec::martin(KernelSpec::green_free(d), x0);
    auto cap_at = [&](std::size_t n, int* iters) {
        const auto disc = target.discretize(x0, n);
        SolverOptions so;
        so.tol = 1e-7;
        so.diagonal = CellCutoff{disc.cutoff};
        const CapacityResult r = min_energy(disc.points, martin, so);
        if (iters) *iters = r.iterations;
        return std::pair{r.capacity, disc.points.size()};
    };
    SandwichCheck out;
    const bool dust = std::holds_alternative<DustTarget>(target.variant());
    auto [cap, used] = cap_at(opts.support, &out.solver_iterations);
    out.cap = cap;
    out.support = used;
    out.cap_coarse = dust ? cap : cap_at(std::max<std::size_t>(4, opts.support / 4), nullptr).first;
    out.discretization = std::abs(out.cap - out.cap_coarse);
    out.mc = hit_prob(rng, x0, DriftSpec::zero(d), target, d, std::nullopt, trials, opts.step_levels, opts.hit);
    out.ci_width = out.mc.ci_high - out.mc.ci_low;
    out.slack = out.ci_width + out.mc.bias_bound + out.discretization;
    out.lower = out.cap / 2.0 - out.slack;
    out.upper = out.cap + out.slack;
    out.holds = out.mc.estimate >= out.lower && out.mc.estimate <= out.upper;
    return out;
}

RecurrenceReport recurrence_statistic(RngStream& rng, const DriftSpec& f, const std::vector<double>& w, double n,
                                      std::size_t trials, double dt) {
    if (f.dim() != 2) throw ValidationError("hitting: recurrence statistic is set in d = 2");
    check_vec(w, 2, "start");
    const double wn = std::hypot(w[0], w[1]);
    if (!(n >= std::max(2.0, wn * wn))) throw ValidationError("hitting: need n >= max(2, |w|^2)");
    if (trials == 0) throw ValidationError("hitting: trials must be positive");
    if (!(dt > 0.0)) throw ValidationError("hitting: dt must be positive");
    const auto cert = f.certificate();
    if (!cert || !(cert->constant == 0.0 || cert->exponent == 0.5))
        throw ValidationError("hitting: recurrence statistic needs a Hoelder(1/2) drift");
    if (std::isfinite(f.t_max())) throw ValidationError("hitting: drift must be defined on [0, inf)");

    const double t_end = n * n;
    RunningStats T1;
    double sum_sq = 0.0;
    std::size_t visits = 0;
    std::vector<double> fv(2), fn(2);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const double sn = std::sqrt(n);
        double b0 = w[0] + sn * rng.normal(), b1 = w[1] + sn * rng.normal();
        double t = n;
        f.eval_into(t, fv);
        double occ = 0.0;
        while (t < t_end) {
            const double r = std::hypot(b0 + fv[0], b1 + fv[1]);
            double h = dt;
            if (r > 2.0) h = std::max(dt, ((r - 1.0) / 4.0) * ((r - 1.0) / 4.0));
            h = std::min(h, t_end - t);
            if (r <= 1.0) occ += h;
            f.eval_into(t + h, fn);
            while (h > dt && std::hypot(fn[0] - fv[0], fn[1] - fv[1]) > 0.5 * std::max(r - 1.0, 0.0)) {
                h = std::max(dt, 0.5 * h);
                f.eval_into(t + h, fn);
            }
            const double sd = std::sqrt(h);
            b0 += sd * rng.normal();
            b1 += sd * rng.normal();
            t += h;
            fv.swap(fn);
        }
        T1.add(occ);
        sum_sq += occ * occ;
        visits += occ > 0.0 ? 1 : 0;
    }
    RecurrenceReport rep;
    rep.trials = trials;
    rep.p_visit = static_cast<double>(visits) / static_cast<double>(trials);
    rep.p_ci = wilson_interval(visits, trials);
    rep.mean_T = T1.mean();
    rep.mean_T_stderr = T1.stderr_mean();
    rep.second_moment = sum_sq / static_cast<double>(trials);
    rep.moment_ratio = rep.second_moment > 0.0 ? rep.mean_T * rep.mean_T / rep.second_moment : 0.0;
    return rep;
}

InjectivityReport injectivity_experiment(RngStream& rng, int depth, std::size_t trials, const std::vector<double>& eps,
                                         InjectivityPartner partner) {
    if (depth < 1 || depth > 16) throw ValidationError("hitting: injectivity depth must lie in [1,16]");
    if (trials == 0 || trials > 10'000'000) throw ValidationError("hitting: injectivity trials must lie in [1, 1e7]");
    if (eps.empty()) throw ValidationError("hitting: need at least one eps");
    for (double e : eps)
        if (!(e > 0.0)) throw ValidationError("hitting: eps must be positive");

    const DyadicSet a0 = build_dyadic_set(DyadicWhich::A0, depth);
    DyadicSet p = partner == InjectivityPartner::A1 ? build_dyadic_set(DyadicWhich::A1, depth) : a0;
    p.offset = 2.0;
    const std::vector<std::uint64_t> na = a0.numerators(), np = p.numerators();
    const double scale = std::ldexp(1.0, -depth);

    // per eps: truncation depth and the member masks
    struct Level {
        double eps;
        int depth;
        std::vector<std::size_t> ia, ip;
        std::size_t hits = 0;
    };
    std::vector<Level> levels;
    for (double e : eps) {
        Level L;
        L.eps = e;
        L.depth = std::clamp(static_cast<int>(std::lround(2.0 * std::log2(1.0 / e))), 1, depth);
        const std::uint64_t mask = (std::uint64_t{1} << (depth - L.depth)) - 1;
        for (std::size_t i = 0; i < na.size(); ++i)
            if ((na[i] & mask) == 0) L.ia.push_back(i);
        for (std::size_t i = 0; i < np.size(); ++i)
            if ((np[i] & mask) == 0) L.ip.push_back(i);
        levels.push_back(std::move(L));
    }

    std::vector<double> ba(na.size()), bp(np.size()), sorted;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        // sequential Gaussian increments on the ordered times, B(0) = 0
        double tprev = 0.0, b = 0.0;
        for (std::size_t i = 0; i < na.size(); ++i) {
            const double t = static_cast<double>(na[i]) * scale;
            b += std::sqrt(t - tprev) * rng.normal();
            ba[i] = b;
            tprev = t;
        }
        for (std::size_t i = 0; i < np.size(); ++i) {
            const double t = p.offset + static_cast<double>(np[i]) * scale;
            b += std::sqrt(t - tprev) * rng.normal();
            bp[i] = b;
            tprev = t;
        }
        for (Level& L : levels) {
            sorted.clear();
            for (std::size_t i : L.ip) sorted.push_back(bp[i]);
            std::sort(sorted.begin(), sorted.end());
            double best = kInf;
            for (std::size_t i : L.ia) {
                const auto it = std::lower_bound(sorted.begin(), sorted.end(), ba[i]);
                if (it != sorted.end()) best = std::min(best, *it - ba[i]);
                if (it != sorted.begin()) best = std::min(best, ba[i] - *(it - 1));
            }
            L.hits += best < L.eps ? 1 : 0;
        }
    }
    InjectivityReport rep;
    rep.trials = trials;
    rep.depth = depth;
    rep.partner = partner;
    for (const Level& L : levels)
        rep.rows.push_back({L.eps, L.depth, static_cast<double>(L.hits) / static_cast<double>(trials),
                            wilson_interval(L.hits, trials), L.hits});
    return rep;
}

}  // namespace bmdrift
