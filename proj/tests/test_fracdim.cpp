#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "doctest.h"

#include "bmdrift/drifts.hpp"
#include "bmdrift/errors.hpp"
#include "bmdrift/fracdim.hpp"
#include "bmdrift/randpath.hpp"
#include "bmdrift/rng.hpp"

using namespace bmdrift;

namespace {

using Vec = std::vector<double>;

double image_dim(std::uint64_t seed, int d, const DriftSpec& f, int levels, bool brownian = true) {
    RngStream rng(seed, 0);
    const TimeGrid g(0.0, 1.0, levels);
    PathSample p = brownian ? brownian_sample(rng, g, d) : PathSample(g, d, PathSource::composite);
    return boxcount_dim(image_cloud(p, f, whole_interval(0.0, 1.0))).value;
}

double fbm_image_dim(std::uint64_t seed, int d, double hurst, int levels) {
    RngStream rng(seed, 0);
    PathSample p = fbm_sample(rng, TimeGrid(0.0, 1.0, levels), d, hurst);
    return boxcount_dim(image_cloud(p, DriftSpec::zero(d), whole_interval(0.0, 1.0))).value;
}

double graph_dim(std::uint64_t seed, int d, int levels) {
    RngStream rng(seed, 0);
    PathSample p = brownian_sample(rng, TimeGrid(0.0, 1.0, levels), d);
    return boxcount_dim(graph_cloud(p, DriftSpec::zero(d), whole_interval(0.0, 1.0))).value;
}

}  // namespace

TEST_SUITE("fracdim") {

TEST_CASE("box counts of hand-made clouds") {
    PointCloud c(2, {0.1, 0.1, 0.2, 0.2, 0.6, 0.1, 0.9, 0.9, -0.1, 0.1}, "hand");
    CHECK(box_count(c, 0) == 2);  // [-1,0) and [0,1) in x
    CHECK(box_count(c, 1) == 4);
    CHECK(box_count(c, 3) == 5);
    CHECK_THROWS_AS(PointCloud(2, {0.0, NAN}, "bad"), ValidationError);
    CHECK_THROWS_AS(PointCloud(2, {}, "empty"), ValidationError);
}

TEST_CASE("straight segment has dimension one") {
    const std::size_t n = std::size_t{1} << 16;
    Vec c;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        c.push_back(0.3 + 0.6 * t);
        c.push_back(0.1 + 0.8 * t);
    }
    DimEstimate e = boxcount_dim(PointCloud(2, c, "segment"));
    CHECK(e.value >= 0.95);
    CHECK(e.value <= 1.05);
    CHECK(e.method == "minkowski-proxy");
    CHECK(e.level_max - e.level_min + 1 >= 4);
    CHECK(e.warnings.empty());
}

TEST_CASE("saturation leaves too few levels") {
    CHECK_THROWS_AS(boxcount_dim(PointCloud(1, {0.0, 0.5, 0.25}, "tiny")), NumericalError);
    Vec c(2048);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<double>(i) / c.size();
    CHECK_THROWS_AS(boxcount_dim(PointCloud(1, c, "line"), LevelRange{9, 12}), NumericalError);
    CHECK_THROWS_AS(boxcount_dim(PointCloud(1, c, "line"), LevelRange{5, 3}), ValidationError);
}

TEST_CASE("Brownian graph in d = 1") {
    const double v = graph_dim(7, 1, 20);
    CHECK(v >= 1.4);
    CHECK(v <= 1.6);
}

TEST_CASE("image and graph clouds") {
    RngStream rng(3, 0);
    PathSample p = brownian_sample(rng, TimeGrid(0.0, 1.0, 10), 2);
    PointCloud all = image_cloud(p, DriftSpec::zero(2), whole_interval(0.0, 1.0));
    CHECK(all.coords == p.coords);
    PointCloud one = image_cloud(p, DriftSpec::zero(2), IntervalUnion{{{0.5, 0.5}}});
    REQUIRE(one.size() == 1);
    CHECK(one.point(0)[0] == p.at(512, 0));
    PointCloud g = graph_cloud(p, DriftSpec::sqrt_cusp(1.0, {1.0, 0.0}), IntervalUnion{{{0.25, 0.25}}});
    REQUIRE(g.dim == 3);
    CHECK(g.point(0)[0] == 0.25);
    CHECK(g.point(0)[1] == doctest::Approx(p.at(256, 0) + 0.5));
    CHECK(g.point(0)[2] == p.at(256, 1));
    CHECK_THROWS_AS(image_cloud(p, DriftSpec::zero(2), IntervalUnion{{{0.3, 0.3}}}), ValidationError);
    CHECK_THROWS_AS(image_cloud(p, DriftSpec::zero(3), whole_interval(0.0, 1.0)), ValidationError);
    CHECK_THROWS_AS(image_cloud(p, DriftSpec::zero(2), whole_interval(0.5, 1.5)), ValidationError);
    CHECK_THROWS_AS(TimeGrid(0.0, 0.0, 0), ValidationError);
}

TEST_CASE("Cantor subset point count") {
    const int L = 14, depth = 8;
    RngStream rng(1, 0);
    PathSample p = brownian_sample(rng, TimeGrid(0.0, 1.0, L), 1);
    PointCloud c = image_cloud(p, DriftSpec::zero(1), cantor_intervals(depth));
    // independent count: left ends sum 2 * digit * 3^-k, interval length 3^-depth
    const double scale = std::ldexp(1.0, L);
    std::size_t expected = 0;
    for (unsigned m = 0; m < (1u << depth); ++m) {
        double a = 0.0, s = 1.0;
        for (int k = depth - 1; k >= 0; --k) {
            s /= 3.0;
            if ((m >> k) & 1u) a += 2.0 * s;
        }
        const double b = a + std::pow(3.0, -depth);
        const long lo = static_cast<long>(std::ceil(a * scale - 1e-9));
        const long hi = static_cast<long>(std::floor(b * scale + 1e-9));
        if (hi >= lo) expected += static_cast<std::size_t>(hi - lo + 1);
    }
    CHECK(c.size() == expected);
    CHECK(cantor_intervals(depth).intervals.size() == 256);
}

TEST_CASE("dyadic set enumeration") {
    DyadicSet a0 = build_dyadic_set(DyadicWhich::A0, 6);
    CHECK(a0.free_positions() == std::vector<int>{1, 2});
    CHECK(a0.members() == Vec{0.0, 0.25, 0.5, 0.75});
    DyadicSet a1 = build_dyadic_set(DyadicWhich::A1, 6);
    CHECK(a1.free_positions() == std::vector<int>{1, 3, 4, 5, 6});
    const Vec m1 = a1.members();
    CHECK(m1.size() == 32);
    for (double x : m1) {
        CHECK(x >= 2.0);
        CHECK(x < 3.0);
        CHECK(a1.contains(x));
    }
    CHECK_FALSE(a1.contains(2.25));  // digit 2 forced to zero
    CHECK(std::is_sorted(m1.begin(), m1.end()));
    DyadicSet a24 = build_dyadic_set(DyadicWhich::A0, 24);
    CHECK(a24.size() == (std::size_t{1} << 20));
    CHECK_THROWS_AS(build_dyadic_set(DyadicWhich::A0, 25), ValidationError);
    CHECK_THROWS_AS(build_dyadic_set(DyadicWhich::A1, 0), ValidationError);
}

TEST_CASE("covering counts against the factorial-block bounds") {
    // A0 at k = 1: 2^{2!} intervals of length 2^{-3!}
    CHECK(build_dyadic_set(DyadicWhich::A0, 6).covering_count(6) == 4);
    CHECK(build_dyadic_set(DyadicWhich::A0, 24).covering_count(6) == 4);
    // A1 at k = 1: 2^{1!} intervals of length 2^{-2!}
    CHECK(build_dyadic_set(DyadicWhich::A1, 24).covering_count(2) == 2);
    // A1 at k = 2: at most 2^{3!} intervals of length 2^{-4!}; digit 2 is also forced
    const std::uint64_t c = build_dyadic_set(DyadicWhich::A1, 24).covering_count(24);
    CHECK(c <= 64);
    CHECK(c == 32);
}

TEST_CASE("sumset coverage") {
    const DyadicSet a0 = build_dyadic_set(DyadicWhich::A0, 12);
    const DyadicSet a1 = build_dyadic_set(DyadicWhich::A1, 12);
    CoverReport r = sumset_cover_check(a0, a1, 12);
    CHECK(r.covered);
    CHECK(r.total == 4096);
    CHECK(r.missing == 0);
    CoverReport s = sumset_cover_check(a0, a0, 12);
    CHECK_FALSE(s.covered);
    CHECK(s.missing > 0);
    CHECK(sumset_cover_check(build_dyadic_set(DyadicWhich::A0, 1), build_dyadic_set(DyadicWhich::A1, 1), 1).covered);
    CHECK_THROWS_AS(sumset_cover_check(a0, build_dyadic_set(DyadicWhich::A1, 10), 12), ValidationError);
    const DyadicSet big = build_dyadic_set(DyadicWhich::A0, 24);
    CHECK_THROWS_AS(sumset_cover_check(big, big, 24), NumericalError);
}

TEST_CASE("sumset coverage agrees with a direct set of sums") {
    for (int depth : {4, 7, 10}) {
        const DyadicSet a0 = build_dyadic_set(DyadicWhich::A0, depth);
        const DyadicSet a1 = build_dyadic_set(DyadicWhich::A1, depth);
        std::set<std::uint64_t> sums;
        for (auto x : a0.numerators())
            for (auto y : a1.numerators()) sums.insert(x + y);
        std::uint64_t missing = 0;
        for (std::uint64_t m = 0; m < (std::uint64_t{1} << depth); ++m) missing += sums.count(m) ? 0 : 1;
        CHECK(sumset_cover_check(a0, a1, depth).missing == missing);
    }
}

TEST_CASE("cloud CSV round trip") {
    const auto path = (std::filesystem::temp_directory_path() / "bmdrift_cloud.csv").string();
    PointCloud c(3, {0.1, 0.2, 0.3, -1.0, 1e-17, 123456.789}, "test");
    write_cloud_csv(c, path);
    PointCloud r = read_cloud_csv(path);
    CHECK(r.dim == 3);
    CHECK(r.coords == c.coords);
    std::filesystem::remove(path);
}

TEST_CASE("cuzick experiment validation and controls") {
    RngStream rng(1, 0);
    CHECK_THROWS_AS(cuzick_experiment(0.2, 2, 1 << 20, rng), ValidationError);
    CHECK_THROWS_AS(cuzick_experiment(0.2, 3, 1000, rng), ValidationError);
    CHECK_THROWS_AS(cuzick_experiment(1.2, 3, 1 << 20, rng), ValidationError);
    RngStream a(12, 0), b(12, 1);
    const DimEstimate half = cuzick_experiment(0.5, 3, 1 << 20, a);
    CHECK(half.value >= 1.8);
    CHECK(half.value <= 2.2);
    const DimEstimate none = cuzick_experiment(0.5, 3, 1 << 20, b, false);
    CHECK(none.value >= 1.8);
    CHECK(none.value <= 2.1);
}

TEST_CASE("drift cannot lower the image dimension") {
    // lower and upper laws on [0,1] in d = 2 for every built-in drift kind
    const int d = 2, levels = 16;
    const std::vector<DriftSpec> drifts = {
        DriftSpec::zero(d),
        DriftSpec::linear({1.0, -0.5}),
        DriftSpec::sqrt_cusp(1.0, {1.0, 0.0}),
        DriftSpec::weierstrass(0.5, 16, 3, {0.6, 0.8}),
        DriftSpec::fbm_full(0.4, 5, d, 16),
    };
    for (std::size_t k = 0; k < drifts.size(); ++k)
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            CAPTURE(drifts[k].describe());
            CAPTURE(seed);
            const double both = image_dim(seed, d, drifts[k], levels);
            const double bm = image_dim(seed, d, DriftSpec::zero(d), levels);
            const double fonly = image_dim(seed, d, drifts[k], levels, false);
            CHECK(both >= std::max(bm, fonly) - 0.2);
            CHECK(both <= std::min<double>(d, 2.0 + fonly) + 0.2);
        }
}

TEST_CASE("fractional Brownian image law in d = 3") {
    for (double h : {0.4, 0.6}) {
        CAPTURE(h);
        const double v = fbm_image_dim(21, 3, h, 20);
        CHECK(std::abs(v - std::min(1.0 / h, 3.0)) <= 0.2);
    }
}

TEST_CASE("doubling the sample count moves each estimate by less than 0.1") {
    for (int levels : {20}) {
        CHECK(std::abs(image_dim(4, 2, DriftSpec::zero(2), levels) -
                       image_dim(4, 2, DriftSpec::zero(2), levels + 1)) < 0.1);
        CHECK(std::abs(graph_dim(4, 1, levels) - graph_dim(4, 1, levels + 1)) < 0.1);
        CHECK(std::abs(graph_dim(4, 2, levels) - graph_dim(4, 2, levels + 1)) < 0.1);
        CHECK(std::abs(fbm_image_dim(4, 3, 0.4, levels) - fbm_image_dim(4, 3, 0.4, levels + 1)) < 0.1);
        RngStream a(4, 0), b(4, 0);
        CHECK(std::abs(cuzick_experiment(0.2, 3, std::size_t{1} << levels, a).value -
                       cuzick_experiment(0.2, 3, std::size_t{1} << (levels + 1), b).value) < 0.1);
    }
}

}  // TEST_SUITE
