#include "bmdrift/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bmdrift/errors.hpp"
#include "bmdrift/stats.hpp"

namespace bmdrift {

namespace {

double dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

double riesz(double r, double alpha) { return std::pow(r, -alpha); }

}  // namespace

PointSet::PointSet(int d, std::vector<double> c) : dim(d), coords(std::move(c)) {
    if (d < 1) throw ValidationError("capacity: point dimension must be >= 1");
    if (coords.size() % static_cast<std::size_t>(d) != 0)
        throw ValidationError("capacity: coordinate count is not a multiple of the dimension");
    for (double x : coords)
        if (!std::isfinite(x)) throw ValidationError("capacity: points must be finite");
}

DiscreteMeasure::DiscreteMeasure(PointSet s, std::vector<double> w)
    : support(std::move(s)), weights(std::move(w)) {
    const std::size_t n = support.size();
    if (n == 0) throw ValidationError("capacity: measure needs at least one support point");
    if (weights.size() != n) throw ValidationError("capacity: weight count differs from support size");
    double total = 0.0;
    for (double x : weights) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("capacity: weights must be finite and >= 0");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("capacity: weights must sum to 1");
    // distinct support: sort indices lexicographically, compare neighbors
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const int d = support.dim;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(support.point(a), support.point(a) + d, support.point(b),
                                            support.point(b) + d);
    });
    for (std::size_t i = 1; i < n; ++i)
        if (std::equal(support.point(idx[i]), support.point(idx[i]) + d, support.point(idx[i - 1])))
            throw ValidationError("capacity: coincident support points");
}

DiscreteMeasure DiscreteMeasure::uniform(PointSet s) {
    const std::size_t n = s.size();
    return DiscreteMeasure(std::move(s), std::vector<double>(n, 1.0 / static_cast<double>(std::max<std::size_t>(n, 1))));
}

namespace {

double diagonal_term(const DiscreteMeasure& mu, double alpha, const Diagonal& diagonal) {
    if (const auto* c = std::get_if<CellCutoff>(&diagonal)) {
        if (!(c->h > 0.0)) throw ValidationError("capacity: cell cutoff h must be positive");
        double s = 0.0;
        for (double w : mu.weights) s += w * w;
        return s * riesz(c->h / 2.0, alpha);
    }
    return 0.0;
}

EnergyEstimate blocked_energy(const DiscreteMeasure& mu, double alpha) {
    const PointSet& P = mu.support;
    const int d = P.dim;
    const std::size_t n = P.size();
    std::vector<double> lo(d, kInf), hi(d, -kInf);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], P.point(i)[k]);
            hi[k] = std::max(hi[k], P.point(i)[k]);
        }
    double extent = 0.0;
    for (int k = 0; k < d; ++k) extent = std::max(extent, hi[k] - lo[k]);
    // about 64 points per occupied cell for a space-filling set
    const double target_cells = static_cast<double>(n) / 64.0;
    const int m = std::max(2, static_cast<int>(std::floor(std::pow(target_cells, 1.0 / d))));
    const double side = extent / m * (1.0 + 1e-12);

    struct Cell {
        std::vector<int> key;
        std::vector<std::size_t> members;
        double weight = 0.0;
        std::vector<double> centroid;
        double radius = 0.0;
    };
    std::vector<std::vector<int>> keys(n, std::vector<int>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k)
            keys[i][k] = std::min(m - 1, static_cast<int>(std::floor((P.point(i)[k] - lo[k]) / side)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    std::vector<Cell> cells;
    for (std::size_t i : order) {
        if (cells.empty() || cells.back().key != keys[i]) cells.push_back({keys[i], {}, 0.0, std::vector<double>(d, 0.0), 0.0});
        cells.back().members.push_back(i);
    }
    for (Cell& c : cells) {
        for (std::size_t i : c.members) {
            c.weight += mu.weights[i];
            for (int k = 0; k < d; ++k) c.centroid[k] += mu.weights[i] * P.point(i)[k];
        }
        if (c.weight > 0.0)
            for (double& x : c.centroid) x /= c.weight;
        else
            for (int k = 0; k < d; ++k) c.centroid[k] = P.point(c.members[0])[k];
        for (std::size_t i : c.members) c.radius = std::max(c.radius, dist(P.point(i), c.centroid.data(), d));
    }

    EnergyEstimate e;
    e.exact = false;
    for (std::size_t a = 0; a < cells.size(); ++a)
        for (std::size_t b = 0; b < cells.size(); ++b) {
            const Cell& A = cells[a];
            const Cell& B = cells[b];
            int cheb = 0;
            for (int k = 0; k < d; ++k) cheb = std::max(cheb, std::abs(A.key[k] - B.key[k]));
            if (cheb <= 1) {
                for (std::size_t i : A.members)
                    for (std::size_t j : B.members)
                        if (i != j) e.value += mu.weights[i] * mu.weights[j] * riesz(dist(P.point(i), P.point(j), d), alpha);
            } else {
                const double cc = dist(A.centroid.data(), B.centroid.data(), d);
                const double dmin = std::max(cc - A.radius - B.radius, side);
                const double dmax = cc + A.radius + B.radius;
                const double ww = A.weight * B.weight;
                e.value += ww * riesz(cc, alpha);
                e.error_bound += ww * (riesz(dmin, alpha) - riesz(dmax, alpha));
            }
        }
    return e;
}

}  // namespace

EnergyEstimate riesz_energy(const DiscreteMeasure& mu, double alpha, Diagonal diagonal) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("capacity: alpha must be >= 0");
    const std::size_t n = mu.size();
    const PointSet& P = mu.support;
    const int d = P.dim;
    EnergyEstimate e;
    if (n <= kExactEnergyLimit) {
        // full ordered double sum, same order as the textbook definition
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) e.value += mu.weights[i] * mu.weights[j] * riesz(dist(P.point(i), P.point(j), d), alpha);
    } else {
        e = blocked_energy(mu, alpha);
    }
    e.value += diagonal_term(mu, alpha, diagonal);
    return e;
}

namespace {

void check_martin_support(const PointSet& P, const KernelSpec& martin) {
    if (martin.kind != KernelSpec::Kind::martin) throw ValidationError("capacity: expected a Martin kernel");
    if (P.dim != martin.dim) throw ValidationError("capacity: support dimension differs from the kernel's");
    for (std::size_t i = 0; i < P.size(); ++i)
        if (dist(P.point(i), martin.x0.data(), P.dim) == 0.0)
            throw ValidationError("capacity: support contains the Martin reference point");
}

double martin_sym(const KernelSpec& martin, const double* x, const double* y, int d) {
    const std::span<const double> xs(x, d), ys(y, d);
    return 0.5 * (martin_kernel(martin, xs, ys) + martin_kernel(martin, ys, xs));
}

// averaged over the 2d axis displacements +-h/2 so the self term has no preferred side
double martin_self(const KernelSpec& martin, const double* x, int d, double h) {
    std::vector<double> y(x, x + d);
    double s = 0.0;
    for (int k = 0; k < d; ++k)
        for (double sgn : {-1.0, 1.0}) {
            y[k] = x[k] + sgn * h / 2.0;
            s += martin_sym(martin, x, y.data(), d);
            y[k] = x[k];
        }
    return s / (2.0 * d);
}

}  // namespace

double martin_energy(const DiscreteMeasure& mu, const KernelSpec& martin, Diagonal diagonal) {
    const PointSet& P = mu.support;
    check_martin_support(P, martin);
    const std::size_t n = mu.size();
    const int d = P.dim;
    const auto* cut = std::get_if<CellCutoff>(&diagonal);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) e += mu.weights[i] * mu.weights[j] * martin_sym(martin, P.point(i), P.point(j), d);
        if (mu.weights[i] > 0.0) {
            if (!cut && n == 1) return kInf;
            if (cut) e += mu.weights[i] * mu.weights[i] * martin_self(martin, P.point(i), d, cut->h);
        }
    }
    return e;
}

std::vector<double> project_simplex(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n == 0) throw ValidationError("capacity: cannot project an empty vector");
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        css += u[k];
        const double t = (css - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) theta = t;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(v[i] - theta, 0.0);
    // renormalize rounding drift
    const double s = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& x : out) x /= s;
    return out;
}

double min_nn_spacing(const PointSet& pts) {
    const std::size_t n = pts.size();
    if (n < 2) throw ValidationError("capacity: nearest-neighbor spacing needs >= 2 points");
    const int d = pts.dim;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pts.point(a)[0] < pts.point(b)[0]; });
    double best = kInf;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            if (pts.point(idx[b])[0] - pts.point(idx[a])[0] >= best) break;
            best = std::min(best, dist(pts.point(idx[a]), pts.point(idx[b]), d));
        }
    if (!(best > 0.0)) throw ValidationError("capacity: coincident support points");
    return best;
}

namespace {

// Symmetric kernel matrix, dense below the limit, rows on the fly above.
class QuadForm {
public:
    QuadForm(const PointSet& P, const EnergyKernel& k, double h) : P_(P), kernel_(k), h_(h), n_(P.size()) {
        if (const auto* m = std::get_if<KernelSpec>(&kernel_)) check_martin_support(P, *m);
        if (n_ <= kDense) {
            Q_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = i; j < n_; ++j) {
                    const double v = entry(i, j);
                    Q_[i * n_ + j] = v;
                    Q_[j * n_ + i] = v;
                }
        }
    }

    double entry(std::size_t i, std::size_t j) const {
        const int d = P_.dim;
        if (const auto* r = std::get_if<RieszKernel>(&kernel_)) {
            if (i == j) return riesz(h_ / 2.0, r->alpha);
            return riesz(dist(P_.point(i), P_.point(j), d), r->alpha);
        }
        const auto& m = std::get<KernelSpec>(kernel_);
        if (i == j) return martin_self(m, P_.point(i), d, h_);
        return martin_sym(m, P_.point(i), P_.point(j), d);
    }

    void apply(const std::vector<double>& x, std::vector<double>& out) const {
        out.assign(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            if (!Q_.empty()) {
                const double* row = Q_.data() + i * n_;
                for (std::size_t j = 0; j < n_; ++j) s += row[j] * x[j];
            } else {
                for (std::size_t j = 0; j < n_; ++j)
                    if (x[j] != 0.0) s += entry(i, j) * x[j];
            }
            out[i] = s;
        }
    }

    double max_abs_row_sum() const {
        double best = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) s += std::abs(Q_.empty() ? entry(i, j) : Q_[i * n_ + j]);
            best = std::max(best, s);
        }
        return best;
    }

private:
    static constexpr std::size_t kDense = 4096;
    const PointSet& P_;
    EnergyKernel kernel_;
    double h_;
    std::size_t n_;
    std::vector<double> Q_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

CapacityResult min_energy(const PointSet& support, const EnergyKernel& kernel, const SolverOptions& opts) {
    const std::size_t n = support.size();
    if (n == 0) throw ValidationError("capacity: min_energy needs at least one support point");
    if (!(opts.tol > 0.0)) throw ValidationError("capacity: tolerance must be positive");
    if (opts.max_iter < 1) throw ValidationError("capacity: max_iter must be >= 1");
    if (const auto* r = std::get_if<RieszKernel>(&kernel))
        if (!(r->alpha >= 0.0)) throw ValidationError("capacity: alpha must be >= 0");
    (void)DiscreteMeasure::uniform(support);  // distinctness check

    CapacityResult res;
    res.kernel_note = std::holds_alternative<RieszKernel>(kernel)
                          ? "riesz(alpha=" + std::to_string(std::get<RieszKernel>(kernel).alpha) + ")"
                          : "martin, symmetrized (M(x,y)+M(y,x))/2";

    if (n == 1 && !opts.diagonal) {
        // one atom and no length scale: infinite energy unless the kernel is constant
        const auto* r = std::get_if<RieszKernel>(&kernel);
        res.weights = {1.0};
        res.energy = (r && r->alpha == 0.0) ? 1.0 : kInf;
        res.capacity = std::isfinite(res.energy) ? 1.0 / res.energy : 0.0;
        res.converged = true;
        return res;
    }
    const double h = opts.diagonal ? opts.diagonal->h : min_nn_spacing(support);
    if (!(h > 0.0)) throw ValidationError("capacity: cell cutoff h must be positive");
    res.kernel_note += ", cell cutoff h=" + std::to_string(h);

    const QuadForm Q(support, kernel, h);
    std::vector<double> w(n, 1.0 / static_cast<double>(n)), Qw, Qd, d(n), g(n);
    Q.apply(w, Qw);
    const double lip = 2.0 * Q.max_abs_row_sum();
    double step = 1.0 / lip;
    std::vector<double> w_prev, g_prev;

    int it = 0;
    for (;; ++it) {
        for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * Qw[i];
        const double gw = dot(g, w);
        const double gmin = *std::min_element(g.begin(), g.end());
        res.gap = gw > 0.0 ? (gw - gmin) / gw : 0.0;
        if (res.gap <= opts.tol) {
            res.converged = true;
            break;
        }
        if (it >= opts.max_iter) break;
        // Barzilai-Borwein step, safeguarded
        if (!w_prev.empty()) {
            double ss = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double s = w[i] - w_prev[i];
                ss += s * s;
                sy += s * (g[i] - g_prev[i]);
            }
            step = sy > 0.0 ? std::clamp(ss / sy, 1e-3 / lip, 1e6 / lip) : 1.0 / lip;
        }
        std::vector<double> trial(n);
        for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] - step * g[i];
        trial = project_simplex(trial);
        for (std::size_t i = 0; i < n; ++i) d[i] = trial[i] - w[i];
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            // projected step stalled; fall back to the Frank-Wolfe vertex direction
            const std::size_t k = static_cast<std::size_t>(std::min_element(g.begin(), g.end()) - g.begin());
            for (std::size_t i = 0; i < n; ++i) d[i] = (i == k ? 1.0 : 0.0) - w[i];
            slope = dot(g, d);
            if (!(slope < 0.0)) break;
        }
        Q.apply(d, Qd);
        const double curv = dot(d, Qd);
        const double tau = curv > 0.0 ? std::min(1.0, -slope / (2.0 * curv)) : 1.0;
        w_prev = w;
        g_prev = g;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = std::max(0.0, w[i] + tau * d[i]);
            Qw[i] += tau * Qd[i];
        }
        if (it % 50 == 49) {
            // resync against accumulated rounding
            const double s = std::accumulate(w.begin(), w.end(), 0.0);
            for (double& x : w) x /= s;
            Q.apply(w, Qw);
        }
    }
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= s;
    Q.apply(w, Qw);
    res.weights = w;
    res.energy = dot(w, Qw);
    res.capacity = res.energy > 0.0 ? 1.0 / res.energy : kInf;
    res.iterations = it;
    return res;
}

FrostmanEstimate frostman_dim(const std::vector<PointSet>& family, const std::vector<double>& alphas,
                              double threshold, const SolverOptions& opts, int tail_levels) {
    if (family.size() < 3) throw ValidationError("capacity: frostman_dim needs >= 3 refinement levels");
    if (tail_levels < 2 || tail_levels > static_cast<int>(family.size()))
        throw ValidationError("capacity: tail_levels must lie in [2, number of levels]");
    if (alphas.empty()) throw ValidationError("capacity: empty alpha grid");
    if (!std::is_sorted(alphas.begin(), alphas.end())) throw ValidationError("capacity: alpha grid must be sorted");
    FrostmanEstimate est;
    est.alphas = alphas;
    est.threshold = threshold;
    est.tail_levels = tail_levels;
    const std::size_t first = family.size() - static_cast<std::size_t>(tail_levels);
    std::vector<double> levels(static_cast<std::size_t>(tail_levels));
    std::iota(levels.begin(), levels.end(), 0.0);
    SolverOptions o = opts;
    o.diagonal.reset();  // each level uses its own spacing
    bool prefix_bounded = true;
    est.value = 0.0;
    est.bracket_low = 0.0;
    est.bracket_high = alphas.front();
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        std::vector<double> e;
        bool finite = true;
        for (const PointSet& P : family) {
            const double v = min_energy(P, RieszKernel{alphas[a]}, o).energy;
            e.push_back(v);
            finite = finite && std::isfinite(v) && v > 0.0;
        }
        double slope = kInf;
        if (finite) {
            std::vector<double> le;
            for (std::size_t k = first; k < e.size(); ++k) le.push_back(std::log10(e[k]));
            slope = linear_fit(levels, le).slope;
        }
        est.energies.push_back(e);
        est.slopes.push_back(slope);
        if (prefix_bounded && slope < threshold) {
            est.value = alphas[a];
            est.bracket_low = alphas[a];
            est.bracket_high = a + 1 < alphas.size() ? alphas[a + 1] : alphas[a];
        } else {
            prefix_bounded = false;
        }
    }
    return est;
}

PointSet load_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("capacity: cannot open " + path);
    std::string line;
    int dim = -1;
    std::vector<double> coords;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cols;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                cols.push_back(std::stod(cell));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (row == 1) continue;  // header
            throw ValidationError("capacity: " + path + " row " + std::to_string(row) + " is not numeric");
        }
        if (dim < 0) dim = static_cast<int>(cols.size());
        if (static_cast<int>(cols.size()) != dim)
            throw ValidationError("capacity: " + path + " row " + std::to_string(row) + " has a different column count");
        coords.insert(coords.end(), cols.begin(), cols.end());
    }
    if (dim < 1) throw ValidationError("capacity: " + path + " has no points");
    return PointSet(dim, std::move(coords));
}

}  // namespace bmdrift

namespace bmdrift {

PointSet equispaced_points(std::size_t n) {
    if (n < 2) throw ValidationError("capacity: need at least 2 equispaced points");
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return PointSet(1, std::move(c));
}

PointSet cantor_points(int depth) {
    if (depth < 0 || depth > 20) throw ValidationError("capacity: Cantor depth must lie in [0,20]");
    const std::size_t n = std::size_t{1} << depth;
    std::vector<double> c(n);
    for (std::size_t m = 0; m < n; ++m) {
        double x = 0.0, s = 1.0;
        for (int k = depth - 1; k >= 0; --k) {
            s /= 3.0;
            if ((m >> k) & 1) x += 2.0 * s;
        }
        c[m] = x;
    }
    return PointSet(1, std::move(c));
}

}  // namespace bmdrift
