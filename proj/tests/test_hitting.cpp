#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "bmdrift/capacity.hpp"
#include "bmdrift/drifts.hpp"
#include "bmdrift/errors.hpp"
#include "bmdrift/hitting.hpp"
#include "bmdrift/kernels.hpp"
#include "bmdrift/rng.hpp"

using namespace bmdrift;

namespace {

using Vec = std::vector<double>;

TargetSet ball(Vec c, double r) { return TargetSet(BallTarget{std::move(c), r}); }

HitOptions far_escape() {
    HitOptions o;
    o.escape_factor = 1000.0;
    return o;
}

}  // namespace

TEST_SUITE("hitting") {

TEST_CASE("target geometry") {
    TargetSet b = ball({0, 0, 0}, 0.5);
    const Vec p{2, 0, 0};
    CHECK(b.distance(p.data()) == doctest::Approx(1.5));
    TargetSet s(ShellTarget{{0, 0, 0}, 1.0, 2.0});
    const Vec q{0.5, 0, 0}, r{1.5, 0, 0};
    CHECK(s.distance(q.data()) == doctest::Approx(0.5));
    CHECK(s.distance(r.data()) <= 0.0);
    TargetSet u(BallUnionTarget{{{{2, 0, 0}, 0.5}, {{-2, 0, 0}, 0.5}}});
    CHECK(u.distance(Vec{0, 0, 0}.data()) == doctest::Approx(1.5));
    TargetSet dust(DustTarget{PointSet(3, {1, 1, 1}), 0.1});
    CHECK(dust.distance(Vec{1, 1, 0}.data()) == doctest::Approx(0.9));
    CHECK_THROWS_AS(ball({0, 0}, 0.0), ValidationError);
    CHECK_THROWS_AS(TargetSet(ShellTarget{{0, 0}, 2.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(TargetSet(DustTarget{PointSet(2, {0, 0}), -1.0}), ValidationError);
}

TEST_CASE("surface discretization sizes and cutoffs") {
    TargetSet b = ball({0, 0, 0}, 0.5);
    auto disc = b.discretize({2, 0, 0}, 256);
    CHECK(disc.points.size() == 256);
    CHECK(disc.cutoff > 0.0);
    for (std::size_t i = 0; i < disc.points.size(); ++i) {
        const double* x = disc.points.point(i);
        CHECK(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) == doctest::Approx(0.5));
    }
    TargetSet dust(DustTarget{PointSet(3, {1, 0, 0, 0, 1, 0}), 0.01});
    auto dd = dust.discretize({0, 0, 0}, 256);
    CHECK(dd.points.size() == 2);
    CHECK(dd.cutoff == doctest::Approx(0.02));
}

TEST_CASE("ball from distance 1 in d = 3") {
    RngStream rng(1, 0);
    HitResult r = hit_prob(rng, {1, 0, 0}, DriftSpec::zero(3), ball({0, 0, 0}, 0.5), 3, std::nullopt, 40000, 14,
                           far_escape());
    CHECK(r.ci_low <= r.estimate);
    CHECK(r.estimate <= r.ci_high);
    CHECK(r.bias_bound > 0.0);
    CHECK(r.ci_low - r.bias_bound <= 0.5);
    CHECK(0.5 <= r.ci_high + r.bias_bound);
}

TEST_CASE("start inside the target") {
    RngStream rng(2, 0);
    HitResult r = hit_prob(rng, {0.1, 0, 0}, DriftSpec::zero(3), ball({0, 0, 0}, 0.5), 3, std::nullopt, 100, 14);
    CHECK(r.estimate == 1.0);
    CHECK(r.hits == 100);
}

TEST_CASE("hit_prob preconditions") {
    RngStream rng(3, 0);
    TargetSet b2 = ball({0, 0}, 0.5);
    CHECK_THROWS_AS(hit_prob(rng, {1, 0}, DriftSpec::zero(2), b2, 2, std::nullopt, 10, 10), ValidationError);
    const DriftSpec shortf = DriftSpec::tabulated({0.0, 1.0}, {0, 0, 1, 0}, 2);
    CHECK_THROWS_AS(hit_prob(rng, {1, 0}, shortf, b2, 2, 1.0, 10, 10), ValidationError);
    CHECK_THROWS_AS(hit_prob(rng, {1, 0}, DriftSpec::zero(2), b2, 2, 1.0, 0, 10), ValidationError);
    CHECK_THROWS_AS(hit_prob(rng, {1, 0, 0}, DriftSpec::zero(3), b2, 3, std::nullopt, 10, 10), ValidationError);
}

TEST_CASE("Wilson interval coverage on the analytic ball") {
    int covered = 0;
    for (int run = 0; run < 50; ++run) {
        RngStream rng(77, static_cast<std::uint64_t>(run));
        HitResult r = hit_prob(rng, {1, 0, 0}, DriftSpec::zero(3), ball({0, 0, 0}, 0.5), 3, std::nullopt, 2000,
                               14, far_escape());
        if (r.ci_low <= 0.5 && 0.5 <= r.ci_high + r.bias_bound) ++covered;
    }
    CAPTURE(covered);
    CHECK(covered >= 45);
}

TEST_CASE("refining the step floor moves the estimate by less than the CI width") {
    for (double dist : {1.0, 2.0}) {
        RngStream a(10, 0), b(10, 1);
        HitResult coarse = hit_prob(a, {dist, 0, 0}, DriftSpec::zero(3), ball({0, 0, 0}, 0.5), 3, std::nullopt,
                                    20000, 10, far_escape());
        HitResult fine = hit_prob(b, {dist, 0, 0}, DriftSpec::zero(3), ball({0, 0, 0}, 0.5), 3, std::nullopt,
                                  20000, 20, far_escape());
        const double width = std::max(coarse.ci_high - coarse.ci_low, fine.ci_high - fine.ci_low);
        CHECK(std::abs(coarse.estimate - fine.estimate) < width);
    }
}

TEST_CASE("killed d = 2 hits of a dust target with and without drift") {
    const DriftSpec f = DriftSpec::sqrt_cusp(1.0, {1.0, 0.0});
    RngStream pr(4, 0);
    Vec pts;
    for (int i = 0; i < 16; ++i) {
        pts.push_back(0.5 + pr.uniform());
        pts.push_back(-0.5 + pr.uniform());
    }
    TargetSet dust(DustTarget{PointSet(2, pts), 0.02});
    RngStream a(4, 1), b(4, 2);
    HitResult plain = hit_prob(a, {0, 0}, DriftSpec::zero(2), dust, 2, 1.0, 20000, 14);
    HitResult drifted = hit_prob(b, {0, 0}, f, dust, 2, 1.0, 20000, 14);
    REQUIRE(plain.hits > 0);
    const double ratio = drifted.estimate / plain.estimate;
    SandwichReport s = verify_green_sandwich(f, 2, 1.0, log_spaced(0.01, 10.0, 13), standard_directions(2));
    CAPTURE(ratio);
    CAPTURE(s.c1);
    CAPTURE(s.c2);
    CHECK(ratio >= s.c1);
    CHECK(ratio <= s.c2);
}

TEST_CASE("point targets stay comparable under the drift as the radius shrinks") {
    const DriftSpec f = DriftSpec::sqrt_cusp(1.0, {1.0, 0.0, 0.0});
    std::vector<double> ratios, plain_est;
    for (int k : {4, 6, 8}) {
        const double eps = std::ldexp(1.0, -k);
        TargetSet pt(DustTarget{PointSet(3, {1.0, 0.0, 0.0}), eps});
        RngStream a(5, static_cast<std::uint64_t>(2 * k)), b(5, static_cast<std::uint64_t>(2 * k + 1));
        HitResult plain = hit_prob(a, {0, 0, 0}, DriftSpec::zero(3), pt, 3, std::nullopt, 60000, 20);
        HitResult drifted = hit_prob(b, {0, 0, 0}, f, pt, 3, std::nullopt, 60000, 20);
        REQUIRE(plain.hits > 0);
        REQUIRE(drifted.hits > 0);
        ratios.push_back(drifted.estimate / plain.estimate);
        plain_est.push_back(plain.estimate);
    }
    CAPTURE(ratios[0]);
    CAPTURE(ratios[1]);
    CAPTURE(ratios[2]);
    CHECK(plain_est[1] < plain_est[0]);
    CHECK(plain_est[2] < plain_est[1]);
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*lo > 0.0);
    CHECK(*hi / *lo <= 4.0);
}

TEST_CASE("capacity sandwich on a ball, a shell and a union") {
    SandwichOptions o;
    o.hit = far_escape();
    o.support = 512;
    {
        RngStream rng(6, 0);
        SandwichCheck c = capacity_sandwich_check(rng, ball({0, 0, 0}, 0.5), {2, 0, 0}, 3, 20000, o);
        CAPTURE(c.cap);
        CAPTURE(c.mc.estimate);
        CHECK(c.holds);
        CHECK(c.mc.estimate >= c.lower);
        CHECK(c.mc.estimate <= c.upper);
        CHECK(c.slack == doctest::Approx(c.ci_width + c.mc.bias_bound + c.discretization));
    }
    {
        RngStream rng(6, 1);
        CHECK(capacity_sandwich_check(rng, TargetSet(ShellTarget{{0, 0, 0}, 0.25, 0.5}), {2, 0, 0}, 3, 20000, o)
                  .holds);
    }
    {
        RngStream rng(6, 2);
        TargetSet u(BallUnionTarget{{{{1.5, 0, 0}, 0.3}, {{0, 1.5, 0}, 0.3}}});
        CHECK(capacity_sandwich_check(rng, u, {0, 0, 0}, 3, 20000, o).holds);
    }
}

TEST_CASE("single point target has vanishing capacity and estimate") {
    RngStream rng(7, 0);
    SandwichOptions o;
    TargetSet pt(DustTarget{PointSet(3, {1.0, 0.0, 0.0}), 1e-6});
    SandwichCheck c = capacity_sandwich_check(rng, pt, {0, 0, 0}, 3, 5000, o);
    CHECK(c.cap < 1e-4);
    CHECK(c.mc.estimate < 1e-3);
    CHECK_THROWS_AS(capacity_sandwich_check(rng, ball({0, 0, 0}, 1.0), {0.5, 0, 0}, 3, 10, o), ValidationError);
}

TEST_CASE("two disjoint balls are hit more often than either one") {
    TargetSet a = ball({2, 0, 0}, 0.5), b = ball({-2, 0, 0}, 0.5);
    TargetSet u(BallUnionTarget{{{{2, 0, 0}, 0.5}, {{-2, 0, 0}, 0.5}}});
    RngStream r1(8, 0), r2(8, 1), r3(8, 2);
    const Vec x{0, 0, 0};
    HitResult ha = hit_prob(r1, x, DriftSpec::zero(3), a, 3, std::nullopt, 20000, 14, far_escape());
    HitResult hb = hit_prob(r2, x, DriftSpec::zero(3), b, 3, std::nullopt, 20000, 14, far_escape());
    HitResult hu = hit_prob(r3, x, DriftSpec::zero(3), u, 3, std::nullopt, 20000, 14, far_escape());
    CHECK(hu.ci_low > ha.ci_high);
    CHECK(hu.ci_low > hb.ci_high);
}

TEST_CASE("recurrence statistic") {
    RngStream rng(9, 0);
    RecurrenceReport r2 = recurrence_statistic(rng, DriftSpec::zero(2), {0, 0}, 2.0, 4000);
    CHECK(r2.p_visit > 0.5);
    CHECK(r2.moment_ratio > 0.0);
    CHECK(r2.moment_ratio <= 1.0);
    RngStream a(9, 1), b(9, 2);
    RecurrenceReport r4 = recurrence_statistic(a, DriftSpec::zero(2), {0, 0}, 4.0, 4000);
    RecurrenceReport r16 = recurrence_statistic(b, DriftSpec::zero(2), {0, 0}, 16.0, 4000);
    const double ratio = r16.mean_T / r4.mean_T;
    CAPTURE(ratio);
    CHECK(ratio >= 1.4);
    CHECK(ratio <= 2.6);
    RngStream c(9, 3);
    RecurrenceReport rf = recurrence_statistic(c, DriftSpec::sqrt_cusp(1.0, {1, 0}), {0, 0}, 4.0, 2000);
    CHECK(rf.moment_ratio > 0.0);
    CHECK(rf.moment_ratio <= 1.0);
    CHECK_THROWS_AS(recurrence_statistic(c, DriftSpec::zero(2), {3, 0}, 4.0, 10), ValidationError);
    CHECK_THROWS_AS(recurrence_statistic(c, DriftSpec::zero(3), {0, 0, 0}, 4.0, 10), ValidationError);
    CHECK_THROWS_AS(recurrence_statistic(c, DriftSpec::weierstrass(0.3, 10, 1, {1, 0}), {0, 0}, 4.0, 10),
                    ValidationError);
}

TEST_CASE("injectivity on A0 and A1") {
    RngStream rng(10, 0);
    InjectivityReport r = injectivity_experiment(rng, 14, 20000);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
        CAPTURE(row.eps);
        CHECK(row.estimate > 0.02);
        CHECK(row.estimate < 0.98);
        CHECK(row.ci.low > 0.0);
        CHECK(row.ci.high < 1.0);
    }
    CHECK(r.rows[0].depth == 12);
    CHECK(r.rows[2].depth == 14);
}

TEST_CASE("injectivity with a shifted copy of A0 decreases with eps") {
    RngStream rng(11, 0);
    InjectivityReport r = injectivity_experiment(rng, 14, 20000, {0x1p-6, 0x1p-8, 0x1p-10},
                                                 InjectivityPartner::A0_shifted);
    CAPTURE(r.rows[0].estimate);
    CAPTURE(r.rows[2].estimate);
    CHECK(r.rows[2].estimate < r.rows[0].estimate);
}

TEST_CASE("injectivity with a huge eps") {
    RngStream rng(12, 0);
    InjectivityReport r = injectivity_experiment(rng, 8, 2000, {100.0});
    CHECK(r.rows[0].estimate == 1.0);
    CHECK_THROWS_AS(injectivity_experiment(rng, 17, 10), ValidationError);
    CHECK_THROWS_AS(injectivity_experiment(rng, 8, 10, {0.0}), ValidationError);
}

}  // TEST_SUITE
