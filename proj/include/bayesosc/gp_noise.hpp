#pragma once

// Gaussian-process signal sampler and a classically driven oscillator.
//
// A noise signal f(t) is modeled by a stationary Gaussian process with mean
// function f_bar(t) and an autocorrelation kernel A(t, t'). On a uniform time
// grid the process density becomes an ordinary multivariate normal with
// covariance A(t_i, t_j); paths are drawn as mean + L z with L a
// lower-triangular (Cholesky) factor of that covariance and z independent
// standard normals. The white kernel carries a 1/dt variance scaling so that
// integrated impulse statistics do not depend on the grid resolution.
//
// drive_oscillator feeds sampled signals into x'' = -omega0^2 x + f(t)/m as a
// piecewise-constant force, integrating each path with classic fourth-order
// Runge-Kutta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bayesosc/errors.hpp"
#include "bayesosc/rng.hpp"

namespace bayesosc::gp {

inline constexpr const char* kModuleName = "gp_noise";

enum class KernelKind { white, ornstein_uhlenbeck, squared_exponential };

// Stationary Gaussian-process description: mean function, kernel family,
// marginal variance, and correlation time (unused by the white kernel).
struct GPKernel {
    KernelKind kind = KernelKind::white;
    double variance = 1.0;
    double correlation_time = 1.0;
    std::function<double(double)> mean;  // empty means identically zero

    double mean_at(double t) const { return mean ? mean(t) : 0.0; }

    void validate() const {
        if (!(variance > 0.0) || !std::isfinite(variance))
            throw ValidationError(kModuleName, "variance must be positive and finite");
        if (kind != KernelKind::white &&
            (!(correlation_time > 0.0) || !std::isfinite(correlation_time)))
            throw ValidationError(kModuleName,
                                  "correlation_time must be positive and finite");
    }
};

// Uniform sampling grid t_i = t0 + i*dt, i = 0..n-1.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t n = 1;

    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }

    void validate() const {
        if (!std::isfinite(t0)) throw ValidationError(kModuleName, "t0 must be finite");
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw ValidationError(kModuleName, "dt must be positive and finite");
        if (n < 1) throw ValidationError(kModuleName, "grid needs at least one point");
    }
};

// One realization of the signal on the grid.
using SamplePath = std::vector<double>;

inline double kernel_value(const GPKernel& kernel, double dt, double t_i, double t_j) {
    switch (kernel.kind) {
        case KernelKind::white:
            return t_i == t_j ? kernel.variance / dt : 0.0;
        case KernelKind::ornstein_uhlenbeck:
            return kernel.variance *
                   std::exp(-std::abs(t_i - t_j) / kernel.correlation_time);
        case KernelKind::squared_exponential: {
            const double lag = t_i - t_j;
            return kernel.variance *
                   std::exp(-lag * lag /
                            (2.0 * kernel.correlation_time * kernel.correlation_time));
        }
    }
    throw InternalError(kModuleName, "unhandled kernel kind");
}

// Discretized autocorrelation A(t_i, t_j); symmetric by construction.
inline Eigen::MatrixXd covariance_matrix(const GPKernel& kernel, const TimeGrid& grid) {
    kernel.validate();
    grid.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(grid.n);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double value = kernel_value(kernel, grid.dt,
                                              grid.time(static_cast<std::size_t>(i)),
                                              grid.time(static_cast<std::size_t>(j)));
            cov(i, j) = value;
            cov(j, i) = value;
        }
    }
    return cov;
}

namespace detail {

// Lower-triangular factor of the jittered covariance. The squared-exponential
// kernel is numerically rank-deficient on fine grids, so a diagonal jitter of
// 1e-10 * variance is added before factorization.
inline Eigen::MatrixXd cholesky_factor(const GPKernel& kernel, const TimeGrid& grid) {
    Eigen::MatrixXd cov = covariance_matrix(kernel, grid);
    cov.diagonal().array() += 1e-10 * kernel.variance;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw ConditioningError(kModuleName,
                                "covariance factorization failed even after jitter");
    return llt.matrixL();
}

inline Eigen::VectorXd mean_vector(const GPKernel& kernel, const TimeGrid& grid) {
    Eigen::VectorXd mean(static_cast<Eigen::Index>(grid.n));
    for (std::size_t i = 0; i < grid.n; ++i)
        mean(static_cast<Eigen::Index>(i)) = kernel.mean_at(grid.time(i));
    return mean;
}

// Draw the standard-normal coordinates for one path. Stream index = path
// index, so results do not depend on how paths are distributed over threads.
inline Eigen::VectorXd path_normals(std::uint64_t seed, std::size_t path_index,
                                    std::size_t n) {
    Rng rng = Rng::for_stream(seed, static_cast<std::uint64_t>(path_index));
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i)) = rng.normal();
    return z;
}

// Run fn(path_index) for every index in [0, count) across a fixed-size thread
// pool; fn writes results into preallocated slots, keeping order deterministic.
template <typename Fn>
inline void parallel_over_paths(std::size_t count, Fn&& fn) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>({hw, 16, std::max<std::size_t>(count, 1)});
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::future<void>> futures;
    futures.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        futures.push_back(std::async(std::launch::async, [begin, end, &fn] {
            for (std::size_t i = begin; i < end; ++i) fn(i);
        }));
    }
    for (auto& f : futures) f.get();
}

}  // namespace detail

// Draw `count` independent signal realizations; deterministic in `seed`
// (path i uses the derived stream mix_seed(seed, i), independent of thread
// scheduling).
inline std::vector<SamplePath> sample_paths(const GPKernel& kernel, const TimeGrid& grid,
                                            std::size_t count, std::uint64_t seed) {
    const Eigen::MatrixXd l = detail::cholesky_factor(kernel, grid);
    const Eigen::VectorXd mean = detail::mean_vector(kernel, grid);
    std::vector<SamplePath> paths(count);
    detail::parallel_over_paths(count, [&](std::size_t p) {
        const Eigen::VectorXd z = detail::path_normals(seed, p, grid.n);
        const Eigen::VectorXd x = mean + l.triangularView<Eigen::Lower>() * z;
        paths[p].assign(x.data(), x.data() + x.size());
    });
    return paths;
}

struct EmpiricalStats {
    Eigen::VectorXd mean;        // per grid point, across paths
    Eigen::MatrixXd covariance;  // unbiased (count - 1 divisor)
};

// Sample mean and unbiased sample covariance across paths.
inline EmpiricalStats empirical_stats(const std::vector<SamplePath>& paths) {
    if (paths.size() < 2)
        throw ValidationError(kModuleName, "empirical_stats needs at least 2 paths");
    const Eigen::Index n = static_cast<Eigen::Index>(paths.front().size());
    for (const SamplePath& path : paths)
        if (static_cast<Eigen::Index>(path.size()) != n)
            throw ValidationError(kModuleName, "paths must share one grid length");
    const Eigen::Index count = static_cast<Eigen::Index>(paths.size());
    Eigen::MatrixXd data(count, n);
    for (Eigen::Index p = 0; p < count; ++p)
        data.row(p) = Eigen::Map<const Eigen::VectorXd>(
            paths[static_cast<std::size_t>(p)].data(), n);
    EmpiricalStats stats;
    stats.mean = data.colwise().mean();
    data.rowwise() -= stats.mean.transpose();
    stats.covariance = (data.transpose() * data) / static_cast<double>(count - 1);
    return stats;
}

// Pooled stationary autocorrelation estimate: products of mean-removed values
// at each lag, averaged over paths and grid positions, normalized by lag 0.
inline std::vector<double> lag_autocorrelation(const std::vector<SamplePath>& paths,
                                               std::size_t max_lag) {
    if (paths.empty()) throw ValidationError(kModuleName, "no paths given");
    const std::size_t n = paths.front().size();
    if (max_lag >= n)
        throw ValidationError(kModuleName, "max_lag must be below the grid length");
    double grand_mean = 0.0;
    for (const SamplePath& path : paths) {
        if (path.size() != n)
            throw ValidationError(kModuleName, "paths must share one grid length");
        for (double value : path) grand_mean += value;
    }
    grand_mean /= static_cast<double>(paths.size() * n);
    std::vector<double> moments(max_lag + 1, 0.0);
    for (const SamplePath& path : paths)
        for (std::size_t lag = 0; lag <= max_lag; ++lag)
            for (std::size_t i = 0; i + lag < n; ++i)
                moments[lag] += (path[i] - grand_mean) * (path[i + lag] - grand_mean);
    for (std::size_t lag = 0; lag <= max_lag; ++lag)
        moments[lag] /= static_cast<double>(paths.size() * (n - lag));
    std::vector<double> autocorr(max_lag + 1);
    for (std::size_t lag = 0; lag <= max_lag; ++lag)
        autocorr[lag] = moments[lag] / moments[0];
    return autocorr;
}

// Position and velocity series for every driven-oscillator path; row p is the
// trajectory driven by signal path p.
struct OscillatorEnsemble {
    std::vector<SamplePath> positions;
    std::vector<SamplePath> velocities;
};

// Integrate x'' = -omega0^2 x + f(t)/m for `count` sampled signals with
// classic RK4, holding the force constant across each step (its grid value at
// the left endpoint). Initial conditions are shared by all paths.
inline OscillatorEnsemble drive_oscillator(double omega0, double mass,
                                           const GPKernel& kernel, const TimeGrid& grid,
                                           std::size_t count, std::uint64_t seed,
                                           double x0 = 0.0, double v0 = 0.0) {
    kernel.validate();
    grid.validate();
    if (!std::isfinite(omega0) || omega0 < 0.0)
        throw ValidationError(kModuleName, "omega0 must be finite and non-negative");
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw ValidationError(kModuleName, "mass must be positive and finite");
    if (omega0 * grid.dt > 0.1)
        throw ConfigError(kModuleName,
                          {"omega0*dt = " + std::to_string(omega0 * grid.dt) +
                           " exceeds the accuracy guard 0.1; shrink dt"});

    const Eigen::MatrixXd l = detail::cholesky_factor(kernel, grid);
    const Eigen::VectorXd mean = detail::mean_vector(kernel, grid);
    const double w2 = omega0 * omega0;
    const double dt = grid.dt;

    OscillatorEnsemble ensemble;
    ensemble.positions.assign(count, SamplePath(grid.n));
    ensemble.velocities.assign(count, SamplePath(grid.n));
    detail::parallel_over_paths(count, [&](std::size_t p) {
        const Eigen::VectorXd z = detail::path_normals(seed, p, grid.n);
        const Eigen::VectorXd f = mean + l.triangularView<Eigen::Lower>() * z;
        SamplePath& xs = ensemble.positions[p];
        SamplePath& vs = ensemble.velocities[p];
        double x = x0;
        double v = v0;
        xs[0] = x;
        vs[0] = v;
        for (std::size_t i = 0; i + 1 < grid.n; ++i) {
            const double a = f(static_cast<Eigen::Index>(i)) / mass;
            const double k1x = v;
            const double k1v = -w2 * x + a;
            const double k2x = v + 0.5 * dt * k1v;
            const double k2v = -w2 * (x + 0.5 * dt * k1x) + a;
            const double k3x = v + 0.5 * dt * k2v;
            const double k3v = -w2 * (x + 0.5 * dt * k2x) + a;
            const double k4x = v + dt * k3v;
            const double k4v = -w2 * (x + dt * k3x) + a;
            x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            xs[i + 1] = x;
            vs[i + 1] = v;
        }
    });
    return ensemble;
}

}  // namespace bayesosc::gp
