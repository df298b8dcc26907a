#include "bmdrift/randpath.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>
#include <fftw3.h>

#include "bmdrift/errors.hpp"

namespace bmdrift {

TimeGrid::TimeGrid(double t0, double t1, int levels) : t0_(t0), t1_(t1), levels_(levels) {
    if (!std::isfinite(t0) || !std::isfinite(t1))
        throw ValidationError("randpath: grid bounds must be finite");
    if (t0 < 0.0) throw ValidationError("randpath: grid must start at t0 >= 0");
    if (!(t1 > t0)) throw ValidationError("randpath: grid needs t1 > t0");
    if (levels < 0 || levels > 30) throw ValidationError("randpath: levels must be in [0, 30]");
}

double TimeGrid::time(std::size_t i) const {
    // endpoint exact, interior via spacing
    if (i + 1 == size()) return t1_;
    return t0_ + static_cast<double>(i) * spacing();
}

PathSample::PathSample(TimeGrid g, int d, PathSource src)
    : grid(g), dim(d), coords(g.size() * static_cast<std::size_t>(d), 0.0), source(src) {
    if (d < 1) throw ValidationError("randpath: dim must be >= 1");
}

PathSample brownian_sample(RngStream& rng, const TimeGrid& grid, int dim) {
    PathSample out(grid, dim, PathSource::brownian);
    const double sd = std::sqrt(grid.spacing());
    const std::size_t n = grid.size();
    for (std::size_t i = 1; i < n; ++i)
        for (int j = 0; j < dim; ++j) out.at(i, j) = out.at(i - 1, j) + sd * rng.normal();
    return out;
}

PathSample refine_bridge(RngStream& rng, const PathSample& path) {
    if (path.source != PathSource::brownian)
        throw ValidationError("randpath: refine_bridge needs a Brownian path");
    PathSample out(path.grid.refined(), path.dim, PathSource::brownian);
    const double sd = std::sqrt(path.grid.spacing() / 4.0);
    const std::size_t n = path.size();
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < path.dim; ++j) out.at(2 * i, j) = path.at(i, j);
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (int j = 0; j < path.dim; ++j)
            out.at(2 * i + 1, j) = 0.5 * (path.at(i, j) + path.at(i + 1, j)) + sd * rng.normal();
    return out;
}

double fbm_covariance(double s, double t, double hurst) {
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

namespace {

// autocovariance of unit-step fractional Gaussian noise
double fgn_acov(std::size_t k, double hurst) {
    const double h2 = 2.0 * hurst;
    const double kk = static_cast<double>(k);
    if (k == 0) return 1.0;
    return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(kk - 1.0, h2));
}

struct FftwPlan {
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;
    explicit FftwPlan(std::size_t m) {
        buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
        if (!buf) throw NumericalError("randpath: fftw allocation failed");
        plan = fftw_plan_dft_1d(static_cast<int>(m), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~FftwPlan() {
        if (plan) fftw_destroy_plan(plan);
        if (buf) fftw_free(buf);
    }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
};

// Returns the circulant eigenvalues, or an empty vector if the embedding is
// not nonnegative definite.
std::vector<double> circulant_eigenvalues(std::size_t n, double hurst, FftwPlan& fft) {
    const std::size_t m = 2 * n;
    for (std::size_t j = 0; j <= n; ++j) {
        fft.buf[j][0] = fgn_acov(j, hurst);
        fft.buf[j][1] = 0.0;
    }
    for (std::size_t j = n + 1; j < m; ++j) {
        fft.buf[j][0] = fgn_acov(m - j, hurst);
        fft.buf[j][1] = 0.0;
    }
    fftw_execute(fft.plan);
    std::vector<double> lam(m);
    double lmax = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        lam[j] = fft.buf[j][0];
        lmax = std::max(lmax, lam[j]);
    }
    for (double& l : lam) {
        if (l < -1e-10 * lmax) return {};
        l = std::max(l, 0.0);
    }
    return lam;
}

void fill_circulant(RngStream& rng, const TimeGrid& grid, double hurst,
                    const std::vector<double>& lam, FftwPlan& fft, PathSample& out) {
    const std::size_t n = grid.size() - 1;
    const std::size_t m = 2 * n;
    const double scale = std::pow(grid.spacing(), hurst);
    std::vector<double> lam_sd(m);
    for (std::size_t k = 0; k < m; ++k) lam_sd[k] = std::sqrt(lam[k] / static_cast<double>(m));

    // real and imaginary parts of one transform are independent copies
    for (int j = 0; j < out.dim; j += 2) {
        for (std::size_t k = 0; k < m; ++k) {
            fft.buf[k][0] = lam_sd[k] * rng.normal();
            fft.buf[k][1] = lam_sd[k] * rng.normal();
        }
        fftw_execute(fft.plan);
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            re += scale * fft.buf[i][0];
            im += scale * fft.buf[i][1];
            out.at(i + 1, j) = re;
            if (j + 1 < out.dim) out.at(i + 1, j + 1) = im;
        }
    }
}

void fill_cholesky(RngStream& rng, const TimeGrid& grid, double hurst, PathSample& out) {
    const std::size_t n = grid.size() - 1;
    Eigen::MatrixXd cov(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
            const double v = fbm_covariance(grid.time(a + 1), grid.time(b + 1), hurst);
            cov(a, b) = v;
            cov(b, a) = v;
        }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw NumericalError("randpath: fBM covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    Eigen::VectorXd z(n);
    for (int j = 0; j < out.dim; ++j) {
        for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
        const Eigen::VectorXd x = L * z;
        for (std::size_t i = 0; i < n; ++i) out.at(i + 1, j) = x[i];
    }
}

}  // namespace

PathSample fbm_sample(RngStream& rng, const TimeGrid& grid, int dim, double hurst,
                      FbmMethod method) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw ValidationError("randpath: hurst must lie in (0,1)");
    if (grid.t0() != 0.0) throw ValidationError("randpath: fBM grid must start at 0");
    PathSample out(grid, dim, PathSource::fractional);
    const std::size_t n = grid.size() - 1;

    if (method == FbmMethod::cholesky) {
        if (grid.size() > kCholeskyLimit)
            throw ValidationError("randpath: grid too large for Cholesky (" +
                                  std::to_string(grid.size()) + " points)");
        fill_cholesky(rng, grid, hurst, out);
        return out;
    }

    FftwPlan fft(2 * n);
    const std::vector<double> lam = circulant_eigenvalues(n, hurst, fft);
    if (!lam.empty()) {
        fill_circulant(rng, grid, hurst, lam, fft, out);
        return out;
    }
    if (method == FbmMethod::circulant || grid.size() > kCholeskyLimit)
        throw NumericalError("randpath: circulant embedding not nonnegative definite and grid of " +
                             std::to_string(grid.size()) + " points too large for Cholesky");
    fill_cholesky(rng, grid, hurst, out);
    return out;
}

}  // namespace bmdrift
