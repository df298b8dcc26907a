#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "doctest.h"

#include "bmdrift/drifts.hpp"
#include "bmdrift/errors.hpp"
#include "bmdrift/kernels.hpp"
#include "bmdrift/rng.hpp"
#include "bmdrift/stats.hpp"

using namespace bmdrift;
using std::numbers::pi;

namespace {

using Vec = std::vector<double>;

// int_a^b g(t) dt on a log grid, composite Simpson in s = log t
template <class G>
double log_simpson(G g, double a, double b, int n) {
    const double la = std::log(a), lb = std::log(b), h = (lb - la) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = std::exp(la + i * h);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * g(t) * t;
    }
    return s * h / 3.0;
}

double ptilde3(const DriftSpec& f, const Vec& y, double t) {
    Vec ft = f.eval(t), f0 = f.eval(0.0);
    double q = 0.0;
    for (int i = 0; i < 3; ++i) q += std::pow(y[i] - (ft[i] - f0[i]), 2);
    return std::pow(2.0 * pi * t, -1.5) * std::exp(-q / (2.0 * t));
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("transition density values") {
    CHECK(transition_density(1, 1.0, Vec{0.0}, Vec{0.0}) == doctest::Approx(0.398942).epsilon(1e-6));
    CHECK(transition_density(2, 1.0, Vec{0.0, 0.0}, Vec{1.0, 0.0}) == doctest::Approx(0.096532).epsilon(1e-5));
    CHECK_THROWS_AS(transition_density(1, 0.0, Vec{0.0}, Vec{0.0}), ValidationError);
    CHECK_THROWS_AS(transition_density(2, 1.0, Vec{0.0}, Vec{0.0, 0.0}), ValidationError);
}

TEST_CASE("transition density integrates to one") {
    // d = 1 on [-12, 12] and d = 2 radially, trapezoid
    double s1 = 0.0, s2 = 0.0;
    const int n = 24000;
    const double h = 24.0 / n;
    for (int i = 0; i <= n; ++i) {
        const double y = -12.0 + i * h;
        s1 += (i == 0 || i == n ? 0.5 : 1.0) * transition_density(1, 0.7, Vec{0.0}, Vec{y});
    }
    const double hr = 12.0 / n;
    for (int i = 0; i <= n; ++i) {
        const double r = i * hr;
        s2 += (i == n ? 0.5 : 1.0) * 2.0 * pi * r * transition_density(2, 1.3, Vec{0.0, 0.0}, Vec{r, 0.0});
    }
    CHECK(s1 * h == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s2 * hr == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("free Green kernel closed form") {
    CHECK(green_free(3, Vec{0, 0, 0}, Vec{1, 0, 0}) == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-14));
    CHECK(green_free(3, Vec{0, 0, 0}, Vec{0, 2, 0}) == doctest::Approx(1.0 / (4.0 * pi)).epsilon(1e-14));
    CHECK(green_free(4, Vec{0, 0, 0, 0}, Vec{0, 0, 0, 1}) == doctest::Approx(1.0 / (2.0 * pi * pi)).epsilon(1e-14));
    CHECK_THROWS_AS(green_free(3, Vec{1, 1, 1}, Vec{1, 1, 1}), ValidationError);
    CHECK_THROWS_AS(green_free(2, Vec{0, 0}, Vec{1, 0}), ValidationError);
}

TEST_CASE("closed form agrees with quadrature") {
    for (int d : {3, 4, 5})
        for (double r : {0.1, 1.0, 10.0}) {
            CAPTURE(d);
            CAPTURE(r);
            const double q = green_integral(d, 0.0, r).value;
            CHECK(std::abs(q / green_free_radial(d, r) - 1.0) < 1e-8);
        }
}

TEST_CASE("killed kernel in d = 2 against Bessel K0 and a trapezoid oracle") {
    // G_lambda(r) = K0(r sqrt(2 lambda)) / pi
    for (double r : {0.1, 1.0, 3.0}) {
        const double bessel = boost::math::cyl_bessel_k(0, r * std::sqrt(2.0)) / pi;
        const double lib = green_killed(2, 1.0, Vec{0.0, 0.0}, Vec{r, 0.0});
        CHECK(std::abs(lib / bessel - 1.0) < 1e-8);
    }
    // int_0^inf e^{-t} (2 pi t)^{-1} e^{-1/(2t)} dt, trapezoid in log t
    double s = 0.0;
    const double lo = -30.0, hi = 6.0;
    const int n = 40000;
    const double h = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
        const double t = std::exp(lo + i * h);
        s += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(-t) / (2.0 * pi * t) * std::exp(-0.5 / t) * t;
    }
    CHECK(std::abs(green_killed(2, 1.0, Vec{0.0, 0.0}, Vec{0.0, 1.0}) / (s * h) - 1.0) < 1e-8);
}

TEST_CASE("killed kernel decreases in lambda and tends to the free kernel") {
    const Vec x{0, 0, 0}, y{0.5, 0.5, 0};
    double prev = INFINITY;
    for (double lam : {1e-3, 0.1, 1.0, 10.0}) {
        const double g = green_killed(3, lam, x, y);
        CHECK(g < prev);
        prev = g;
    }
    CHECK(std::abs(green_killed(3, 1e-8, x, y) / green_free(3, x, y) - 1.0) < 1e-3);
    CHECK_THROWS_AS(green_killed(2, 0.0, Vec{0, 0}, Vec{1, 0}), ValidationError);
}

TEST_CASE("martin kernel") {
    const KernelSpec m = KernelSpec::martin(KernelSpec::green_free(3), Vec{0, 0, 0});
    CHECK(martin_kernel(m, Vec{0, 0, 0}, Vec{1, 1, 0}) == doctest::Approx(1.0));
    CHECK(martin_kernel(m, Vec{1, 0, 0}, Vec{2, 0, 0}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(martin_kernel(m, Vec{1, 0, 0}, Vec{0, 0, 0}), ValidationError);
    CHECK_THROWS_AS(martin_kernel(m, Vec{1, 0, 0}, Vec{1, 0, 0}), ValidationError);
    // dilation about the reference point
    const Vec x{0.3, -0.2, 0.7}, y{1.1, 0.4, -0.5};
    const double base = martin_kernel(m, x, y);
    for (double a : {0.01, 7.0, 300.0}) {
        Vec xa = x, ya = y;
        for (auto& v : xa) v *= a;
        for (auto& v : ya) v *= a;
        CHECK(martin_kernel(m, xa, ya) == doctest::Approx(base).epsilon(1e-12));
    }
    CHECK_THROWS_AS(KernelSpec::martin(KernelSpec::transition(3), Vec{0, 0, 0}), ValidationError);
}

TEST_CASE("undrifted kernels are symmetric") {
    const Vec x{0.1, 0.2, 0.3}, y{-1.0, 0.5, 2.0};
    CHECK(green_free(3, x, y) == green_free(3, y, x));
    CHECK(green_killed(3, 0.5, x, y) == doctest::Approx(green_killed(3, 0.5, y, x)).epsilon(1e-12));
    CHECK(KernelSpec::green_free(3).symmetric());
    CHECK_FALSE(KernelSpec::green_drifted(DriftSpec::sqrt_cusp(1.0, {1, 0, 0})).symmetric());
}

TEST_CASE("drifted kernel with zero or constant drift equals the free kernel") {
    const Vec x{0, 0, 0}, y{0.3, 1.2, -0.4};
    const double g = green_free(3, x, y);
    const KernelSpec z = KernelSpec::green_drifted(DriftSpec::zero(3));
    CHECK(std::abs(green_drifted(z, x, y).value / g - 1.0) < 1e-8);
    const DriftSpec cst = DriftSpec::tabulated({0.0, 1e30}, {2.0, -1.0, 0.5, 2.0, -1.0, 0.5}, 3);
    CHECK(std::abs(green_drifted(KernelSpec::green_drifted(cst), x, y).value / g - 1.0) < 1e-8);
    // drift defined only on a finite interval leaves the tail uncontrolled
    const DriftSpec shortf = DriftSpec::tabulated({0.0, 10.0}, {0, 0, 0, 1, 0, 0}, 3);
    CHECK_THROWS_AS(green_drifted(KernelSpec::green_drifted(shortf), x, y), NumericalError);
    CHECK_THROWS_AS(KernelSpec::green_drifted(DriftSpec::sqrt_cusp(1.0, {1, 0})), ValidationError);
}

TEST_CASE("drifted kernel against a Monte Carlo occupation oracle") {
    // E int_0^T 1{B_t + f(t) in ball(y, eps)} dt / |ball| on an exact Gaussian time
    // grid, plus the t > T tail by quadrature, vs the ball average of the kernel.
    const DriftSpec f = DriftSpec::sqrt_cusp(1.0, {1.0, 0.0, 0.0});
    const Vec y{0.6, 0.8, 0.0};
    const double eps = 0.1, T = 16.0, dt = 1.0 / 256.0;
    const int steps = static_cast<int>(T / dt);
    const double vol = 4.0 / 3.0 * pi * eps * eps * eps;
    RngStream rng(2024, 0);
    RunningStats occ;
    const double sd = std::sqrt(dt);
    for (int p = 0; p < 20000; ++p) {
        double b[3] = {0, 0, 0};
        double o = 0.0;
        for (int k = 1; k <= steps; ++k) {
            for (double& c : b) c += sd * rng.normal();
            const double t = k * dt;
            const double fx = std::sqrt(t);
            const double d2 = std::pow(b[0] + fx - y[0], 2) + std::pow(b[1] - y[1], 2) + std::pow(b[2] - y[2], 2);
            // trapezoid weight at the right end
            if (d2 < eps * eps) o += (k == steps ? 0.5 : 1.0) * dt;
        }
        occ.add(o / vol);
    }
    const double tail = log_simpson([&](double t) { return ptilde3(f, y, t); }, T, 1e12, 20000) +
                        2.0 * std::pow(2.0 * pi, -1.5) * std::exp(-0.5) / std::sqrt(1e12);
    const double mc = occ.mean() + tail;

    // ball average of the kernel, midpoint rule in (r^3, cos theta, phi)
    const KernelSpec g = KernelSpec::green_drifted(f);
    const Vec x{0, 0, 0};
    double avg = 0.0;
    const int nr = 6, nc = 10, np = 12;
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j)
            for (int k = 0; k < np; ++k) {
                const double r = eps * std::cbrt((i + 0.5) / nr);
                const double c = -1.0 + 2.0 * (j + 0.5) / nc, s = std::sqrt(1.0 - c * c);
                const double ph = 2.0 * pi * (k + 0.5) / np;
                const Vec z{y[0] + r * s * std::cos(ph), y[1] + r * s * std::sin(ph), y[2] + r * c};
                avg += green_drifted(g, x, z).value;
            }
    avg /= nr * nc * np;
    CAPTURE(mc);
    CAPTURE(avg);
    CAPTURE(occ.stderr_mean());
    CHECK(std::abs(mc - avg) < 3.0 * occ.stderr_mean());
}

TEST_CASE("sandwich with zero drift is exactly one") {
    const auto radii = log_spaced(0.01, 100.0, 9);
    SandwichReport r3 = verify_green_sandwich(DriftSpec::zero(3), 3, std::nullopt, radii, standard_directions(3));
    CHECK(std::abs(r3.c1 - 1.0) < 1e-6);
    CHECK(std::abs(r3.c2 - 1.0) < 1e-6);
    SandwichReport r2 = verify_green_sandwich(DriftSpec::zero(2), 2, 1.0, log_spaced(0.01, 10.0, 7),
                                              standard_directions(2));
    CHECK(std::abs(r2.c1 - 1.0) < 1e-6);
    CHECK(std::abs(r2.c2 - 1.0) < 1e-6);
}

TEST_CASE("sandwich constants are finite and positive") {
    const DriftSpec f = DriftSpec::sqrt_cusp(1.0, {1.0, 0.0});
    SandwichReport r = verify_green_sandwich(f, 2, 1.0, log_spaced(0.01, 10.0, 9), standard_directions(2));
    CHECK(r.c1 > 0.0);
    CHECK(r.c1 <= 1.0 + 1e-9);
    CHECK(std::isfinite(r.c2));
    CHECK(r.c2 >= 1.0);
    CHECK(r.entries.size() == 9 * 4);
}

TEST_CASE("sandwich is invariant under rotating the drift direction") {
    const auto radii = log_spaced(0.05, 20.0, 5);
    const auto dirs = standard_directions(3);
    SandwichReport a = verify_green_sandwich(DriftSpec::sqrt_cusp(1.0, {1, 0, 0}), 3, std::nullopt, radii, dirs);
    SandwichReport b = verify_green_sandwich(DriftSpec::sqrt_cusp(1.0, {0, 1, 0}), 3, std::nullopt, radii, dirs);
    CHECK(std::abs(a.c1 / b.c1 - 1.0) < 0.1);
    CHECK(std::abs(a.c2 / b.c2 - 1.0) < 0.1);
}

TEST_CASE("sandwich constants agree on [0.01, 1] and [1, 100] for the sqrt cusp") {
    const DriftSpec f = DriftSpec::sqrt_cusp(1.0, {1, 0, 0});
    const auto dirs = standard_directions(3);
    SandwichReport lo = verify_green_sandwich(f, 3, std::nullopt, log_spaced(0.01, 1.0, 5), dirs);
    SandwichReport hi = verify_green_sandwich(f, 3, std::nullopt, log_spaced(1.0, 100.0, 5), dirs);
    CHECK(std::abs(lo.c1 / hi.c1 - 1.0) < 0.1);
    CHECK(std::abs(lo.c2 / hi.c2 - 1.0) < 0.1);
}

TEST_CASE("drifted killed kernel decreases in lambda") {
    const KernelSpec a = KernelSpec::green_drifted(DriftSpec::sqrt_cusp(1.0, {1, 0}), 0.5);
    const KernelSpec b = KernelSpec::green_drifted(DriftSpec::sqrt_cusp(1.0, {1, 0}), 1.0);
    const KernelSpec c = KernelSpec::green_drifted(DriftSpec::sqrt_cusp(1.0, {1, 0}), 2.0);
    const Vec x{0, 0}, y{0.7, -0.3};
    const double ga = green_drifted(a, x, y).value, gb = green_drifted(b, x, y).value,
                 gc = green_drifted(c, x, y).value;
    CHECK(ga > gb);
    CHECK(gb > gc);
}

TEST_CASE("sandwich preconditions") {
    const auto radii = log_spaced(0.1, 1.0, 3);
    CHECK_THROWS_AS(verify_green_sandwich(DriftSpec::weierstrass(0.3, 12, 1, {1, 0, 0}), 3, std::nullopt, radii,
                                          standard_directions(3)),
                    ValidationError);
    CHECK_THROWS_AS(verify_green_sandwich(DriftSpec::zero(2), 2, std::nullopt, radii, standard_directions(2)),
                    ValidationError);
    CHECK_THROWS_AS(verify_green_sandwich(DriftSpec::zero(3), 2, 1.0, radii, standard_directions(2)),
                    ValidationError);
    CHECK_THROWS_AS(log_spaced(0.0, 1.0, 3), ValidationError);
}

}  // TEST_SUITE
