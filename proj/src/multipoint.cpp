#include "bmdrift/multipoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "bmdrift/errors.hpp"
#include "bmdrift/stats.hpp"

namespace bmdrift {

TimedCloud::TimedCloud(int d, std::vector<double> t, std::vector<double> c)
    : dim(d), times(std::move(t)), coords(std::move(c)) {
    if (d < 1) throw ValidationError("multipoint: dimension must be >= 1");
    if (coords.size() != times.size() * static_cast<std::size_t>(d))
        throw ValidationError("multipoint: coordinate count does not match times");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i])) throw ValidationError("multipoint: times must be finite");
        if (i > 0 && times[i] < times[i - 1]) throw ValidationError("multipoint: times must be nondecreasing");
    }
    for (double x : coords)
        if (!std::isfinite(x)) throw ValidationError("multipoint: coordinates must be finite");
}

TimedCloud timed_cloud(const PathSample& path, const DriftSpec* f, std::size_t first, std::size_t last) {
    last = std::min(last, path.size() - 1);
    if (first > last) throw ValidationError("multipoint: empty index range");
    if (f && f->dim() != path.dim) throw ValidationError("multipoint: drift dimension differs from path");
    const int d = path.dim;
    std::vector<double> t, c;
    t.reserve(last - first + 1);
    c.reserve((last - first + 1) * d);
    std::vector<double> fv(d, 0.0);
    for (std::size_t i = first; i <= last; ++i) {
        const double ti = path.grid.time(i);
        if (f) f->eval_into(ti, fv);
        t.push_back(ti);
        for (int k = 0; k < d; ++k) c.push_back(path.at(i, k) + fv[k]);
    }
    return TimedCloud(d, std::move(t), std::move(c));
}

namespace {

std::uint64_t mix(std::uint64_t h, std::int64_t v) {
    std::uint64_t z = h ^ (static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double dist2(const double* x, const double* y, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return s;
}

struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t i = 0, j = 0;
    std::size_t checks = 0;
    void offer(double v, std::size_t a, std::size_t b) {
        ++checks;
        if (v < d2) {
            d2 = v;
            i = a;
            j = b;
        }
    }
};

// One pass with cells of side c over all admissible pairs within
// neighbouring cells.
Best scan(const TimedCloud& a, const TimedCloud& b, bool self, double gap, double c) {
    const int d = a.dim;
    const std::size_t nb = b.size();
    std::vector<std::int64_t> cellb(nb * d);
    std::vector<std::uint64_t> key(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        std::uint64_t h = 0;
        for (int k = 0; k < d; ++k) {
            cellb[j * d + k] = static_cast<std::int64_t>(std::floor(b.point(j)[k] / c));
            h = mix(h, cellb[j * d + k]);
        }
        key[j] = h;
    }
    std::vector<std::size_t> order(nb);
    for (std::size_t j = 0; j < nb; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return key[x] < key[y]; });
    std::vector<double> btimes(nb);
    std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> buckets;
    buckets.reserve(nb);
    for (std::size_t p = 0; p < nb;) {
        std::size_t q = p;
        while (q < nb && key[order[q]] == key[order[p]]) ++q;
        buckets.emplace(key[order[p]], std::pair{p, q});
        p = q;
    }
    // stable sort keeps each bucket in index order, hence in time order
    for (std::size_t p = 0; p < nb; ++p) btimes[p] = b.times[order[p]];

    int nbr = 1;
    for (int k = 0; k < d; ++k) nbr *= 3;
    Best best;
    std::vector<std::int64_t> cell(d);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double* x = a.point(i);
        const double ti = a.times[i];
        for (int k = 0; k < d; ++k) cell[k] = static_cast<std::int64_t>(std::floor(x[k] / c));
        for (int m = 0; m < nbr; ++m) {
            std::uint64_t h = 0;
            int r = m;
            for (int k = 0; k < d; ++k) {
                h = mix(h, cell[k] + (r % 3) - 1);
                r /= 3;
            }
            const auto it = buckets.find(h);
            if (it == buckets.end()) continue;
            const auto [lo, hi] = it->second;
            const auto tb = btimes.begin();
            // later partners
            for (auto p = static_cast<std::size_t>(std::lower_bound(tb + lo, tb + hi, ti + gap) - tb); p < hi; ++p)
                best.offer(dist2(x, b.point(order[p]), d), i, order[p]);
            if (self) continue;
            if (gap == 0.0) {
                for (auto p = lo; p < hi && btimes[p] < ti; ++p) best.offer(dist2(x, b.point(order[p]), d), i, order[p]);
            } else {
                for (auto p = lo; p < hi && btimes[p] <= ti - gap; ++p)
                    best.offer(dist2(x, b.point(order[p]), d), i, order[p]);
            }
        }
    }
    return best;
}

Best brute(const TimedCloud& a, const TimedCloud& b, bool self, double gap) {
    Best best;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = self ? i + 1 : 0; j < b.size(); ++j)
            if (std::abs(a.times[i] - b.times[j]) >= gap) best.offer(dist2(a.point(i), b.point(j), a.dim), i, j);
    return best;
}

}  // namespace

ClosestApproach closest_approach(const TimedCloud& a, const TimedCloud* b, double gap, double cell,
                                 const ApproachOptions& opts) {
    const bool self = b == nullptr;
    const TimedCloud& other = self ? a : *b;
    if (other.dim != a.dim) throw ValidationError("multipoint: clouds differ in dimension");
    if (!(gap >= 0.0) || !std::isfinite(gap)) throw ValidationError("multipoint: gap must be finite and >= 0");
    if (self && !(gap > 0.0)) throw ValidationError("multipoint: self-comparison needs gap > 0");
    if (!(cell > 0.0) || !std::isfinite(cell)) throw ValidationError("multipoint: cell size must be positive");
    if (a.size() == 0 || other.size() == 0) throw ValidationError("multipoint: empty admissible pair set");
    const bool any = self ? a.times.back() - a.times.front() >= gap
                          : std::max(a.times.back() - other.times.front(), other.times.back() - a.times.front()) >= gap;
    if (!any) throw ValidationError("multipoint: empty admissible pair set");

    Best best;
    bool hashed = false;
    const std::size_t n = self ? a.size() : a.size() + other.size();
    if (opts.exhaustive_below_limit && n <= kBruteForceLimit) {
        best = brute(a, other, self, gap);
    } else {
        hashed = true;
        double maxabs = 0.0;
        for (double x : a.coords) maxabs = std::max(maxabs, std::abs(x));
        for (double x : other.coords) maxabs = std::max(maxabs, std::abs(x));
        double c = std::max(cell, maxabs * 1e-12);
        std::size_t checks = 0;
        for (;;) {
            best = scan(a, other, self, gap, c);
            checks += best.checks;
            if (best.d2 <= c * c) break;
            if (std::isfinite(best.d2)) {
                // every pair closer than the current best lies in adjacent cells
                c = std::sqrt(best.d2);
                best = scan(a, other, self, gap, c);
                checks += best.checks;
                break;
            }
            c *= 4.0;
        }
        best.checks = checks;
    }
    if (!std::isfinite(best.d2)) throw NumericalError("multipoint: no admissible pair found");
    ClosestApproach out;
    out.distance = std::sqrt(best.d2);
    out.i1 = best.i;
    out.i2 = best.j;
    out.t1 = a.times[best.i];
    out.t2 = other.times[best.j];
    out.gap = gap;
    out.pair_checks = best.checks;
    out.hashed = hashed;
    return out;
}

namespace {

void check_levels(int lo, int hi) {
    if (lo < 2 || hi > 22) throw ValidationError("multipoint: levels must lie in [2, 22]");
    if (hi - lo + 1 < 4) throw ValidationError("multipoint: level range must span >= 4 levels");
}

void check_drift(const DriftSpec& f, int d) {
    if (f.dim() != d) throw ValidationError("multipoint: drift dimension differs from d");
    if (f.t_min() > 0.0 || f.t_max() < 1.0) throw ValidationError("multipoint: drift must be defined on [0,1]");
}

double safe_log2(double x) { return std::log2(std::max(x, 1e-300)); }

void summarize(ScalingReport& rep) {
    const std::size_t nl = rep.levels.size();
    std::vector<double> lv(rep.levels.begin(), rep.levels.end());
    for (std::size_t l = 0; l < nl; ++l) {
        std::vector<double> col, thr;
        std::size_t close = 0;
        const double scale = std::ldexp(1.0, -rep.levels[l] / 2) * (rep.levels[l] % 2 ? std::sqrt(0.5) : 1.0);
        for (const auto& row : rep.distances) {
            col.push_back(row[l]);
            close += row[l] <= scale ? 1 : 0;
        }
        rep.median_distance.push_back(median(col));
        rep.hit_fraction.push_back(static_cast<double>(close) / static_cast<double>(rep.distances.size()));
    }
    for (const auto& row : rep.distances) {
        std::vector<double> y;
        for (double v : row) y.push_back(safe_log2(v));
        rep.seed_exponents.push_back(linear_fit(lv, y).slope);
    }
    std::vector<double> y;
    for (double v : rep.median_distance) y.push_back(safe_log2(v));
    const LinearFit fit = linear_fit(lv, y);
    rep.exponent = fit.slope;
    rep.exponent_stderr = fit.slope_stderr;
}

}  // namespace

ScalingReport doublepoint_scaling(std::uint64_t seed, int d, const DriftSpec& f, double delta, int level_min,
                                  int level_max, int seeds) {
    if (d < 1) throw ValidationError("multipoint: d must be >= 1");
    check_levels(level_min, level_max);
    check_drift(f, d);
    if (!(delta > 0.0) || !(delta < 1.0)) throw ValidationError("multipoint: delta must lie in (0,1)");
    if (seeds < 1) throw ValidationError("multipoint: seeds must be >= 1");
    ScalingReport rep;
    rep.dim = d;
    rep.gap = delta;
    for (int L = level_min; L <= level_max; ++L) rep.levels.push_back(L);
    for (int s = 0; s < seeds; ++s) {
        RngStream rng(seed, static_cast<std::uint64_t>(s));
        PathSample path = brownian_sample(rng, TimeGrid(0.0, 1.0, level_min), d);
        std::vector<double> row;
        for (int L = level_min; L <= level_max; ++L) {
            if (L > level_min) path = refine_bridge(rng, path);
            const std::size_t mid = std::size_t{1} << (L - 1);
            const TimedCloud lo = timed_cloud(path, &f, 0, mid);
            const TimedCloud hi = timed_cloud(path, &f, mid, path.size() - 1);
            ClosestApproach ca = closest_approach(lo, &hi, delta, std::sqrt(path.grid.spacing()));
            row.push_back(ca.distance);
        }
        rep.distances.push_back(std::move(row));
    }
    summarize(rep);
    return rep;
}

ScalingReport two_path_intersection(std::uint64_t seed, int d, const DriftSpec& f1, const DriftSpec& f2,
                                    const std::vector<double>& x1, const std::vector<double>& x2, int level_min,
                                    int level_max, int seeds) {
    if (d < 1) throw ValidationError("multipoint: d must be >= 1");
    check_levels(level_min, level_max);
    check_drift(f1, d);
    check_drift(f2, d);
    if (static_cast<int>(x1.size()) != d || static_cast<int>(x2.size()) != d)
        throw ValidationError("multipoint: start points must have dimension d");
    if (seeds < 1) throw ValidationError("multipoint: seeds must be >= 1");
    ScalingReport rep;
    rep.dim = d;
    for (int L = level_min; L <= level_max; ++L) rep.levels.push_back(L);
    auto shifted = [&](const PathSample& p, const DriftSpec& f, const std::vector<double>& x) {
        TimedCloud c = timed_cloud(p, &f);
        for (std::size_t i = 0; i < c.size(); ++i)
            for (int k = 0; k < d; ++k) c.coords[i * d + k] += x[k];
        return c;
    };
    for (int s = 0; s < seeds; ++s) {
        RngStream r1(seed, 2 * static_cast<std::uint64_t>(s));
        RngStream r2(seed, 2 * static_cast<std::uint64_t>(s) + 1);
        PathSample p1 = brownian_sample(r1, TimeGrid(0.0, 1.0, level_min), d);
        PathSample p2 = brownian_sample(r2, TimeGrid(0.0, 1.0, level_min), d);
        std::vector<double> row;
        for (int L = level_min; L <= level_max; ++L) {
            if (L > level_min) {
                p1 = refine_bridge(r1, p1);
                p2 = refine_bridge(r2, p2);
            }
            const TimedCloud c1 = shifted(p1, f1, x1), c2 = shifted(p2, f2, x2);
            row.push_back(closest_approach(c1, &c2, 0.0, std::sqrt(p1.grid.spacing())).distance);
        }
        rep.distances.push_back(std::move(row));
    }
    summarize(rep);
    return rep;
}

double r_prime(const RPrimeConfig& c) {
    const double a = c.alpha;
    if (!(a > 0.0 && a < 1.0)) throw ValidationError("multipoint: alpha must lie in (0,1)");
    for (double x : {c.s, c.t, c.u, c.v})
        if (!std::isfinite(x)) throw ValidationError("multipoint: times must be finite");
    if (c.s == c.t || c.u == c.v) throw ValidationError("multipoint: r' needs s != t and u != v");
    auto term = [a](double x) {
        const double ax = std::abs(x);
        return std::pow(ax, 2.0 * a) + ax;
    };
    auto norm = [a](double x) {
        const double ax = std::abs(x);
        return std::pow(ax, a) + std::sqrt(ax);
    };
    const double num = term(c.t - c.u) + term(c.s - c.v) - term(c.s - c.u) - term(c.t - c.v);
    const double den = 2.0 * norm(c.s - c.t) * norm(c.u - c.v);
    return num / den;
}

RPrimeReport verify_rprime_inequalities(double alpha, double a, double delta, const std::vector<double>& L,
                                        const RPrimeGrid& grid) {
    if (!(alpha > 0.0 && alpha < 0.5)) throw ValidationError("multipoint: alpha must lie in (0, 1/2)");
    if (!(a > 0.0) || !(delta > 0.0) || !std::isfinite(a) || !std::isfinite(delta))
        throw ValidationError("multipoint: a and delta must be positive");
    if (grid.steps < 2 || grid.steps > 200) throw ValidationError("multipoint: grid steps must lie in [2,200]");
    if (L.empty()) throw ValidationError("multipoint: need at least one L");
    for (double l : L)
        if (!(l > a + 4.0 * delta)) throw ValidationError("multipoint: each L must exceed a + 4 delta");

    RPrimeReport rep;
    rep.alpha = alpha;
    rep.a = a;
    rep.delta = delta;
    rep.L = L;
    const int n = grid.steps;
    auto lin = [n](double lo, double hi, int i) { return lo + (hi - lo) * i / (n - 1); };
    auto nrm = [alpha](double x) { return std::pow(x, alpha) + std::sqrt(x); };

    // separated configurations: s = 0, both increments in [a, a + 4 delta]
    for (double l : L) {
        double mx = 0.0;
        std::size_t pts = 0;
        for (int it = 0; it < n; ++it) {
            const double s = 0.0, t = lin(a, a + 4.0 * delta, it);
            for (int iu = 0; iu < n; ++iu) {
                const double len = lin(a, a + 4.0 * delta, iu);
                for (int iw = 0; iw < n; ++iw) {
                    const double off = t + l + lin(0.0, 4.0 * (a + 4.0 * delta), iw);
                    for (int orient = 0; orient < 2; ++orient) {
                        const double u = orient ? off + len : off;
                        const double v = orient ? off : off + len;
                        const double sep = std::min({std::abs(s - u), std::abs(s - v), std::abs(t - u), std::abs(t - v)});
                        if (sep < l) continue;
                        ++pts;
                        const double r = std::abs(r_prime({s, t, u, v, alpha}));
                        mx = std::max(mx, r);
                        const double bound = alpha * std::abs(1.0 - 2.0 * alpha) * (t - s) * len *
                                             std::pow(sep, 2.0 * alpha - 2.0) / (nrm(t - s) * nrm(len));
                        if (r > bound * (1.0 + 1e-9) + 1e-15) ++rep.separated_violations;
                    }
                }
            }
        }
        rep.max_abs.push_back(mx);
        rep.separated_points.push_back(pts);
    }
    rep.decreasing = true;
    for (std::size_t i = 1; i < rep.max_abs.size(); ++i)
        if (!(rep.max_abs[i] < rep.max_abs[i - 1])) rep.decreasing = false;

    // clustered configurations: s near u, t near v, all long gaps >= a
    std::vector<ClusteredPoint> pts = grid.clustered;
    if (pts.empty()) {
        for (int it = 0; it < n; ++it)
            for (int iu = 0; iu < n; ++iu)
                for (int iv = 0; iv < n; ++iv) {
                    const double t = lin(a, a + 2.0 * delta, it);
                    pts.push_back({0.0, t, lin(-2.0 * delta, 2.0 * delta, iu), t + lin(-2.0 * delta, 2.0 * delta, iv)});
                }
    }
    rep.clustered_min_ratio = std::numeric_limits<double>::infinity();
    const double tol = 1e-12 * (a + delta);
    for (const auto& p : pts) {
        const double sep = std::min({std::abs(p.s - p.t), std::abs(p.s - p.v), std::abs(p.t - p.u), std::abs(p.u - p.v)});
        const bool near = std::abs(p.s - p.u) <= 2.0 * delta + tol && std::abs(p.t - p.v) <= 2.0 * delta + tol;
        if (sep < a - tol || !near) {
            if (!grid.clustered.empty()) throw ValidationError("multipoint: clustered point violates the configuration constraints");
            continue;
        }
        const double rhs = std::pow(std::abs(p.s - p.u), 2.0 * alpha) + std::pow(std::abs(p.t - p.v), 2.0 * alpha);
        ++rep.clustered_points;
        const double lhs = 1.0 - r_prime({p.s, p.t, p.u, p.v, alpha});
        if (rhs == 0.0) {
            if (!(lhs >= 0.0)) ++rep.clustered_violations;
            continue;
        }
        const double ratio = lhs * std::pow(a, 2.0 * alpha) / rhs;
        if (!std::isfinite(ratio) || !(ratio > 0.0)) ++rep.clustered_violations;
        if (ratio < rep.clustered_min_ratio) {
            rep.clustered_min_ratio = ratio;
            rep.clustered_argmin = p;
        }
    }
    if (rep.clustered_points == 0) throw ValidationError("multipoint: clustered grid is empty");
    return rep;
}

}  // namespace bmdrift
