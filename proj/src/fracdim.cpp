#include "bmdrift/fracdim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bmdrift/errors.hpp"
#include "bmdrift/stats.hpp"

namespace bmdrift {

PointCloud::PointCloud(int d, std::vector<double> c, std::string prov)
    : dim(d), coords(std::move(c)), provenance(std::move(prov)) {
    if (d < 1) throw ValidationError("fracdim: cloud dimension must be >= 1");
    if (coords.empty() || coords.size() % static_cast<std::size_t>(d) != 0)
        throw ValidationError("fracdim: cloud must be nonempty with rows of dim entries");
    for (double x : coords)
        if (!std::isfinite(x)) throw ValidationError("fracdim: cloud coordinates must be finite");
}

namespace {

using u128 = unsigned __int128;

std::uint64_t count_unique(std::vector<u128>& keys) {
    std::sort(keys.begin(), keys.end());
    return static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

}  // namespace

std::uint64_t box_count(const PointCloud& cloud, int level) {
    if (level < 0 || level > 30) throw ValidationError("fracdim: box level must lie in [0,30]");
    const std::size_t n = cloud.size();
    const int d = cloud.dim;
    const double scale = std::ldexp(1.0, level);
    if (d <= 4) {
        std::vector<u128> keys(n);
        for (std::size_t i = 0; i < n; ++i) {
            u128 key = 0;
            for (int k = 0; k < d; ++k) {
                const double c = std::floor(cloud.point(i)[k] * scale);
                if (std::abs(c) >= 2147483647.0) throw ValidationError("fracdim: cloud too large for box level");
                const auto idx = static_cast<std::uint32_t>(static_cast<std::int64_t>(c) + (std::int64_t{1} << 31));
                key = (key << 32) | idx;
            }
            keys[i] = key;
        }
        return count_unique(keys);
    }
    std::vector<std::vector<std::int64_t>> keys(n, std::vector<std::int64_t>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) keys[i][k] = static_cast<std::int64_t>(std::floor(cloud.point(i)[k] * scale));
    std::sort(keys.begin(), keys.end());
    return static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

DimEstimate boxcount_dim(const PointCloud& cloud, std::optional<LevelRange> range) {
    const LevelRange r = range.value_or(LevelRange{});
    if (r.min < 0 || r.max > 30 || r.max < r.min) throw ValidationError("fracdim: bad level range");
    DimEstimate est;
    const std::size_t n = cloud.size();
    est.points = n;
    if (n < (std::size_t{1} << 10)) est.warnings.push_back("fewer than 2^10 points");
    const double limit = static_cast<double>(n) / 10.0;

    std::vector<double> xs, ys;
    for (int k = r.min; k <= r.max; ++k) {
        const std::uint64_t c = box_count(cloud, k);
        est.levels.push_back(k);
        est.counts.push_back(c);
        if (static_cast<double>(c) >= limit) break;  // saturated, and so is every finer level
        xs.push_back(k);
        ys.push_back(std::log2(static_cast<double>(c)));
    }
    if (!range && xs.size() > static_cast<std::size_t>(kDefaultWindow)) {
        xs.erase(xs.begin(), xs.end() - kDefaultWindow);
        ys.erase(ys.begin(), ys.end() - kDefaultWindow);
    }
    if (xs.size() < 4)
        throw NumericalError("fracdim: fewer than 4 unsaturated levels in the window (" +
                             std::to_string(xs.size()) + ")");
    const LinearFit fit = linear_fit(xs, ys);
    est.value = std::max(0.0, fit.slope);
    est.stderr_ = fit.slope_stderr;
    est.r2 = fit.r2;
    est.level_min = static_cast<int>(xs.front());
    est.level_max = static_cast<int>(xs.back());
    return est;
}

std::vector<int> DyadicSet::free_positions() const {
    std::vector<int> out;
    for (int p = 1; p <= depth; ++p) {
        bool forced = false;
        for (const auto& [lo, hi] : forced_zero) forced = forced || (p >= lo && p <= hi);
        if (!forced) out.push_back(p);
    }
    return out;
}

std::vector<std::uint64_t> DyadicSet::numerators() const {
    const std::vector<int> freep = free_positions();
    const std::size_t count = std::size_t{1} << freep.size();
    std::vector<std::uint64_t> out(count);
    for (std::size_t m = 0; m < count; ++m) {
        std::uint64_t v = 0;
        // bit b of m drives free position freep[b]; most significant first keeps ascending order
        for (std::size_t b = 0; b < freep.size(); ++b)
            if ((m >> (freep.size() - 1 - b)) & 1u) v |= std::uint64_t{1} << (depth - freep[b]);
        out[m] = v;
    }
    return out;
}

std::vector<double> DyadicSet::members() const {
    std::vector<double> out;
    for (std::uint64_t m : numerators()) out.push_back(offset + std::ldexp(static_cast<double>(m), -depth));
    return out;
}

bool DyadicSet::contains(double t) const {
    const double x = std::ldexp(t - offset, depth);
    if (!(x >= 0.0) || x >= std::ldexp(1.0, depth) || std::floor(x) != x) return false;
    const auto m = static_cast<std::uint64_t>(x);
    for (const auto& [lo, hi] : forced_zero)
        for (int p = lo; p <= hi; ++p)
            if ((m >> (depth - p)) & 1u) return false;
    return true;
}

std::uint64_t DyadicSet::covering_count(int level) const {
    if (level < 0 || level > depth) throw ValidationError("fracdim: covering level must lie in [0, depth]");
    int free_upto = 0;
    for (int p : free_positions()) free_upto += (p <= level);
    return std::uint64_t{1} << free_upto;
}

DyadicSet build_dyadic_set(DyadicWhich which, int depth) {
    if (depth < 1) throw ValidationError("fracdim: dyadic depth must be >= 1");
    if (depth > kMaxDyadicDepth) throw ValidationError("fracdim: dyadic depth above enumeration bound 24");
    DyadicSet s;
    s.depth = depth;
    s.offset = which == DyadicWhich::A0 ? 0.0 : 2.0;
    auto fact = [](int m) {
        long long f = 1;
        for (int i = 2; i <= m; ++i) f *= i;
        return f;
    };
    // A0 forces ((2k)!, (2k+1)!], A1 forces ((2k-1)!, (2k)!]
    for (int k = (which == DyadicWhich::A0 ? 0 : 1);; ++k) {
        const long long lo = which == DyadicWhich::A0 ? fact(2 * k) : fact(2 * k - 1);
        const long long hi = which == DyadicWhich::A0 ? fact(2 * k + 1) : fact(2 * k);
        if (lo + 1 > depth) break;
        if (hi > lo) s.forced_zero.emplace_back(static_cast<int>(lo + 1), static_cast<int>(std::min<long long>(hi, depth)));
    }
    return s;
}

CoverReport sumset_cover_check(const DyadicSet& a, const DyadicSet& b, int depth) {
    if (a.depth != depth || b.depth != depth) throw ValidationError("fracdim: sumset sets must share the depth");
    const std::size_t na = a.size(), nb = b.size();
    if (static_cast<double>(na) * static_cast<double>(nb) > std::ldexp(1.0, 26))
        throw NumericalError("fracdim: sumset enumeration budget (2^26 pairs) exceeded");
    const std::vector<std::uint64_t> ma = a.numerators(), mb = b.numerators();
    const std::uint64_t total = std::uint64_t{1} << depth;
    std::vector<char> hit(total, 0);
    for (std::uint64_t x : ma)
        for (std::uint64_t y : mb)
            if (x + y < total) hit[x + y] = 1;
    CoverReport rep;
    rep.total = total;
    rep.offset = a.offset + b.offset;
    rep.missing = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 0));
    rep.covered = rep.missing == 0;
    return rep;
}

IntervalUnion cantor_intervals(int depth) {
    if (depth < 0 || depth > 20) throw ValidationError("fracdim: cantor depth must lie in [0,20]");
    IntervalUnion u;
    const double len = std::pow(3.0, -depth);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << depth); ++m) {
        // ternary digits 0 or 2, leading digit from the high bit
        double a = 0.0, s = 1.0;
        for (int k = depth - 1; k >= 0; --k) {
            s /= 3.0;
            if ((m >> k) & 1u) a += 2.0 * s;
        }
        u.intervals.emplace_back(a, a + len);
    }
    return u;
}

IntervalUnion whole_interval(double a, double b) {
    if (!(b >= a)) throw ValidationError("fracdim: interval needs a <= b");
    return IntervalUnion{{{a, b}}};
}

std::vector<std::size_t> subset_indices(const TimeGrid& grid, const TimeSubset& A) {
    std::vector<std::size_t> idx;
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    if (const auto* u = std::get_if<IntervalUnion>(&A)) {
        for (const auto& [a, b] : u->intervals) {
            if (!(b >= a)) throw ValidationError("fracdim: interval needs a <= b");
            if (a < grid.t0() || b > grid.t1()) throw ValidationError("fracdim: time subset leaves the grid interval");
            auto i = static_cast<std::size_t>(std::max(0.0, std::ceil((a - grid.t0()) / h) - 1.0));
            while (i < n && grid.time(i) < a) ++i;
            for (; i < n && grid.time(i) <= b; ++i) idx.push_back(i);
        }
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    } else {
        const auto& s = std::get<DyadicSet>(A);
        if (s.offset < grid.t0() || s.offset + 1.0 - std::ldexp(1.0, -s.depth) > grid.t1())
            throw ValidationError("fracdim: dyadic set leaves the grid interval");
        for (double t : s.members()) {
            const double x = (t - grid.t0()) / h;
            if (std::floor(x) == x && x >= 0.0 && x < static_cast<double>(n)) idx.push_back(static_cast<std::size_t>(x));
        }
    }
    if (idx.empty()) throw ValidationError("fracdim: time subset has no grid points");
    return idx;
}

namespace {

void check_path_drift(const PathSample& path, const DriftSpec& f) {
    if (f.dim() != path.dim) throw ValidationError("fracdim: drift dimension differs from the path's");
}

std::string provenance(const char* kind, const PathSample& path, const DriftSpec& f) {
    std::ostringstream os;
    os << kind << "(d=" << path.dim << ",levels=" << path.grid.levels() << ",t=[" << path.grid.t0() << ","
       << path.grid.t1() << "],drift=" << f.describe() << ")";
    return os.str();
}

}  // namespace

PointCloud image_cloud(const PathSample& path, const DriftSpec& f, const TimeSubset& A) {
    check_path_drift(path, f);
    const auto idx = subset_indices(path.grid, A);
    const int d = path.dim;
    std::vector<double> pts(idx.size() * d), ft(d);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        f.eval_into(path.grid.time(idx[r]), ft);
        for (int j = 0; j < d; ++j) pts[r * d + j] = path.at(idx[r], j) + ft[j];
    }
    return PointCloud(d, std::move(pts), provenance("image", path, f));
}

PointCloud graph_cloud(const PathSample& path, const DriftSpec& f, const TimeSubset& A) {
    check_path_drift(path, f);
    const auto idx = subset_indices(path.grid, A);
    const int d = path.dim;
    std::vector<double> pts(idx.size() * (d + 1)), ft(d);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const double t = path.grid.time(idx[r]);
        f.eval_into(t, ft);
        pts[r * (d + 1)] = t;
        for (int j = 0; j < d; ++j) pts[r * (d + 1) + 1 + j] = path.at(idx[r], j) + ft[j];
    }
    return PointCloud(d + 1, std::move(pts), provenance("graph", path, f));
}

DimEstimate cuzick_experiment(double alpha, int d, std::size_t samples, RngStream& rng, bool with_drift) {
    if (d != 3) throw ValidationError("fracdim: the Cuzick construction is set in d = 3");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("fracdim: hurst must lie in (0,1)");
    if (samples < 2 || !std::has_single_bit(samples))
        throw ValidationError("fracdim: samples must be a power of two");
    const int levels = std::countr_zero(samples);
    if (levels > 24) throw ValidationError("fracdim: at most 2^24 samples");
    const TimeGrid grid(0.0, 1.0, levels);
    const PathSample b = brownian_sample(rng, grid, d);
    const std::uint64_t drift_seed = rng.next_u64();
    const DriftSpec f = with_drift ? DriftSpec::fbm_coordinate(alpha, drift_seed, d, 0, levels) : DriftSpec::zero(d);
    DimEstimate est = boxcount_dim(image_cloud(b, f, whole_interval(0.0, 1.0)));
    if (samples < (std::size_t{1} << 20)) est.warnings.push_back("fewer than 2^20 samples");
    if (with_drift && alpha > 0.25) est.warnings.push_back("3 - 2 alpha target stated for alpha <= 1/4 only");
    return est;
}

void write_cloud_csv(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("fracdim: cannot write " + path);
    out << "# " << cloud.provenance << '\n';
    for (int k = 0; k < cloud.dim; ++k) out << (k ? "," : "") << "x" << (k + 1);
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int k = 0; k < cloud.dim; ++k) out << (k ? "," : "") << cloud.point(i)[k];
        out << '\n';
    }
}

PointCloud read_cloud_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("fracdim: cannot open " + path);
    std::string line, prov = "csv:" + path;
    int dim = -1;
    std::vector<double> coords;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            prov = line.substr(line.find_first_not_of("# "));
            continue;
        }
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
            if (header_seen || dim >= 0) throw ValidationError("fracdim: non-numeric row in " + path);
            header_seen = true;
            continue;
        }
        if (dim < 0) dim = static_cast<int>(cols.size());
        if (static_cast<int>(cols.size()) != dim) throw ValidationError("fracdim: ragged rows in " + path);
        coords.insert(coords.end(), cols.begin(), cols.end());
    }
    if (dim < 1) throw ValidationError("fracdim: no points in " + path);
    return PointCloud(dim, std::move(coords), prov);
}

}  // namespace bmdrift
