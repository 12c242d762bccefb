#pragma once

// Dense density-matrix simulator for a d-level cavity mode coupled to
// two-level qubits:
//
//   H = hbar w_r (a'a + 1/2) + sum_j [ (hbar/2) Delta_j sigma_j^z
//                                      + i g_j sigma_j^y (a' - a) ]
//
// Unitary steps use a propagator built once by eigendecomposition. A
// measurement channel sporadically resets chosen qubits to their ground
// state (trace out the qubit, reinstall |0><0|); the same channel enters the
// deterministic mean evolution as rate * (reset(rho) - rho). Observables are
// recorded as time series, including reduced-qudit purity and l1-coherence,
// which diagnose decoherence.
//
// Conventions: tensor order (cavity, qubit_1, ..., qubit_k) with the last
// factor fastest; qubit level 0 is the ground state; sigma^z has diagonal
// (-1, +1) in (ground, excited) order so that (Delta/2) sigma^z gives
// splitting Delta.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <future>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "bayesosc/errors.hpp"
#include "bayesosc/rng.hpp"

namespace bayesosc::cavity {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct QubitSpec {
    double delta = 1.0;  // splitting, angular frequency
    double g = 0.0;      // coupling strength, energy units

    void validate() const {
        if (!std::isfinite(delta) || !std::isfinite(g))
            throw ValidationError("cavity_sim", "qubit parameters must be finite");
        if (g < 0.0) throw ValidationError("cavity_sim", "coupling g must be >= 0");
    }
};

struct CavityModel {
    int d = 2;            // cavity truncation (lowest d levels)
    double omega_r = 1.0; // cavity angular frequency
    std::vector<QubitSpec> qubits;
    double hbar = 1.0;
    int dim_cap = 4096;   // guard on the joint Hilbert dimension

    int qubit_count() const { return static_cast<int>(qubits.size()); }

    Eigen::Index dim() const {
        return static_cast<Eigen::Index>(d) << qubit_count();
    }

    // Tensor factor dimensions in slot order: cavity first, then qubits.
    std::vector<Eigen::Index> factor_dims() const {
        std::vector<Eigen::Index> dims(1 + qubits.size(), 2);
        dims[0] = d;
        return dims;
    }

    void validate() const {
        if (d < 2) throw ValidationError("cavity_sim", "cavity truncation d must be >= 2");
        if (!std::isfinite(omega_r) || !(hbar > 0.0))
            throw ValidationError("cavity_sim", "omega_r must be finite and hbar > 0");
        for (const QubitSpec& q : qubits) q.validate();
        if (qubit_count() >= 62 || dim() > dim_cap)
            throw SizeError("cavity_sim", "joint Hilbert dimension exceeds cap of " +
                                              std::to_string(dim_cap));
    }
};

struct DensityMatrix {
    Matrix entries;

    Eigen::Index dim() const { return entries.rows(); }

    static DensityMatrix from_ket(const Vector& ket) {
        const double norm = ket.norm();
        if (!(norm > 0.0) || !ket.allFinite())
            throw ValidationError("cavity_sim", "state vector must be finite and nonzero");
        DensityMatrix rho;
        rho.entries = (ket / norm) * (ket / norm).adjoint();
        return rho;
    }

    double trace_error() const { return std::abs(entries.trace().real() - 1.0) +
                                        std::abs(entries.trace().imag()); }

    double hermiticity_error() const {
        return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
    }

    double min_eigenvalue() const {
        const Matrix sym = 0.5 * (entries + entries.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().minCoeff();
    }

    void validate() const {
        if (entries.rows() != entries.cols() || entries.rows() < 2)
            throw ValidationError("cavity_sim", "density matrix must be square, dim >= 2");
        if (hermiticity_error() > 1e-10)
            throw ValidationError("cavity_sim", "density matrix is not Hermitian within 1e-10");
        if (trace_error() > 1e-10)
            throw ValidationError("cavity_sim", "density matrix trace differs from 1 beyond 1e-10");
        if (min_eigenvalue() < -1e-9)
            throw ValidationError("cavity_sim", "density matrix has eigenvalue below -1e-9");
    }
};

// Joint basis index for cavity level n and per-qubit levels (0 = ground).
inline Eigen::Index basis_index(const CavityModel& model, int cavity_level,
                                const std::vector<int>& qubit_levels) {
    if (cavity_level < 0 || cavity_level >= model.d)
        throw ValidationError("cavity_sim", "cavity level out of range");
    if (qubit_levels.size() != model.qubits.size())
        throw ValidationError("cavity_sim", "one level per qubit required");
    Eigen::Index idx = cavity_level;
    for (int b : qubit_levels) {
        if (b != 0 && b != 1) throw ValidationError("cavity_sim", "qubit level must be 0 or 1");
        idx = idx * 2 + b;
    }
    return idx;
}

inline Vector basis_ket(const CavityModel& model, int cavity_level,
                        const std::vector<int>& qubit_levels) {
    Vector ket = Vector::Zero(model.dim());
    ket(basis_index(model, cavity_level, qubit_levels)) = 1.0;
    return ket;
}

namespace detail {

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Embed a single-factor operator at the given tensor slot.
inline Matrix embed(const Matrix& op, size_t slot, const std::vector<Eigen::Index>& dims) {
    Matrix out = Matrix::Identity(1, 1);
    for (size_t s = 0; s < dims.size(); ++s)
        out = kron(out, s == slot ? op : Matrix::Identity(dims[s], dims[s]));
    return out;
}

}  // namespace detail

// Joint-space operators for the model: truncated ladder operators on the
// cavity slot and Pauli operators on each qubit slot.
struct OperatorSet {
    Matrix a;
    Matrix a_dagger;
    Matrix identity;
    std::vector<Matrix> sigma_z;
    std::vector<Matrix> sigma_y;
    std::vector<Matrix> sigma_plus;
    std::vector<Matrix> sigma_minus;
};

inline OperatorSet build_operators(const CavityModel& model) {
    model.validate();
    const auto dims = model.factor_dims();
    const Complex i_unit(0.0, 1.0);

    Matrix ladder = Matrix::Zero(model.d, model.d);
    for (int n = 1; n < model.d; ++n) ladder(n - 1, n) = std::sqrt(static_cast<double>(n));

    // (ground, excited) basis order.
    Matrix sz = Matrix::Zero(2, 2), sy = Matrix::Zero(2, 2);
    Matrix sp = Matrix::Zero(2, 2), sm = Matrix::Zero(2, 2);
    sz(0, 0) = -1.0;
    sz(1, 1) = 1.0;
    sy(0, 1) = i_unit;
    sy(1, 0) = -i_unit;
    sp(1, 0) = 1.0;  // |excited><ground|
    sm(0, 1) = 1.0;

    OperatorSet ops;
    ops.a = detail::embed(ladder, 0, dims);
    ops.a_dagger = ops.a.adjoint();
    ops.identity = Matrix::Identity(model.dim(), model.dim());
    for (int q = 0; q < model.qubit_count(); ++q) {
        ops.sigma_z.push_back(detail::embed(sz, 1 + q, dims));
        ops.sigma_y.push_back(detail::embed(sy, 1 + q, dims));
        ops.sigma_plus.push_back(detail::embed(sp, 1 + q, dims));
        ops.sigma_minus.push_back(detail::embed(sm, 1 + q, dims));
    }
    return ops;
}

// H = hbar w_r (a'a + 1/2) + sum_j [(hbar/2) Delta_j sigma_j^z
//                                   + i g_j sigma_j^y (a' - a)].
inline Matrix build_hamiltonian(const CavityModel& model) {
    const OperatorSet ops = build_operators(model);
    const Complex i_unit(0.0, 1.0);
    Matrix h = model.hbar * model.omega_r *
               (ops.a_dagger * ops.a + 0.5 * ops.identity);
    const Matrix field = ops.a_dagger - ops.a;
    for (int q = 0; q < model.qubit_count(); ++q) {
        h += 0.5 * model.hbar * model.qubits[q].delta * ops.sigma_z[q];
        h += i_unit * model.qubits[q].g * ops.sigma_y[q] * field;
    }
    const double asym = (h - h.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12)
        throw InternalError("cavity_sim", "assembled Hamiltonian is not Hermitian");
    return h;
}

// U = exp(-i H dt / hbar), built once per (H, dt) by eigendecomposition.
struct Propagator {
    Matrix u;
    double dt = 0.0;
    double h_spectral_norm = 0.0;  // max |eigenvalue| of H / hbar
};

inline Propagator make_propagator(const Matrix& h, double dt, double hbar = 1.0) {
    if (!(dt > 0.0) || !(hbar > 0.0))
        throw ValidationError("cavity_sim", "dt and hbar must be > 0");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw InternalError("cavity_sim", "eigendecomposition of H failed");
    const auto& evals = solver.eigenvalues();
    const Matrix& v = solver.eigenvectors();
    Vector phases(evals.size());
    for (Eigen::Index i = 0; i < evals.size(); ++i)
        phases(i) = std::exp(Complex(0.0, -evals(i) * dt / hbar));
    Propagator prop;
    prop.u = v * phases.asDiagonal() * v.adjoint();
    prop.dt = dt;
    prop.h_spectral_norm = std::max(std::abs(evals.minCoeff()), std::abs(evals.maxCoeff())) / hbar;
    const double unitarity =
        (prop.u * prop.u.adjoint() - Matrix::Identity(h.rows(), h.cols())).cwiseAbs().maxCoeff();
    if (unitarity > 1e-12)
        throw InternalError("cavity_sim", "propagator is not unitary within 1e-12");
    return prop;
}

inline DensityMatrix evolve_step(const DensityMatrix& rho, const Propagator& prop) {
    DensityMatrix out;
    out.entries = prop.u * rho.entries * prop.u.adjoint();
    return out;
}

// Reduced density matrix of one tensor factor (all others traced out).
inline DensityMatrix partial_trace(const DensityMatrix& rho,
                                   const std::vector<Eigen::Index>& dims, size_t keep) {
    if (keep >= dims.size())
        throw ValidationError("cavity_sim", "partial_trace selector out of range");
    Eigen::Index total = 1;
    for (Eigen::Index d : dims) total *= d;
    if (total != rho.dim())
        throw ValidationError("cavity_sim", "factor dimensions do not match the matrix");

    Eigen::Index inner = 1;
    for (size_t s = keep + 1; s < dims.size(); ++s) inner *= dims[s];
    const Eigen::Index dk = dims[keep];
    const Eigen::Index outer = total / (dk * inner);

    DensityMatrix out;
    out.entries = Matrix::Zero(dk, dk);
    for (Eigen::Index o = 0; o < outer; ++o)
        for (Eigen::Index r = 0; r < dk; ++r)
            for (Eigen::Index c = 0; c < dk; ++c)
                for (Eigen::Index i = 0; i < inner; ++i)
                    out.entries(r, c) +=
                        rho.entries((o * dk + r) * inner + i, (o * dk + c) * inner + i);
    return out;
}

// Measurement back-action on one qubit: trace it out, reinstall |0><0| in
// the same slot. Trace is preserved exactly.
inline DensityMatrix apply_reset(const DensityMatrix& rho, const CavityModel& model,
                                 int qubit_index) {
    if (qubit_index < 0 || qubit_index >= model.qubit_count())
        throw ValidationError("cavity_sim", "reset qubit index out of range");
    const Eigen::Index total = rho.dim();
    Eigen::Index inner = 1;
    for (int s = qubit_index + 1; s < model.qubit_count(); ++s) inner *= 2;
    const Eigen::Index outer = total / (2 * inner);

    DensityMatrix out;
    out.entries = Matrix::Zero(total, total);
    for (Eigen::Index o = 0; o < outer; ++o)
        for (Eigen::Index i = 0; i < inner; ++i)
            for (Eigen::Index o2 = 0; o2 < outer; ++o2)
                for (Eigen::Index i2 = 0; i2 < inner; ++i2) {
                    Complex sum = 0.0;
                    for (Eigen::Index b = 0; b < 2; ++b)
                        sum += rho.entries((o * 2 + b) * inner + i, (o2 * 2 + b) * inner + i2);
                    out.entries(o * 2 * inner + i, o2 * 2 * inner + i2) = sum;
                }
    return out;
}

struct ResetProcess {
    double rate = 0.0;         // resets per unit time
    std::vector<int> targets;  // qubit indices

    void validate(const CavityModel& model) const {
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw ValidationError("cavity_sim", "reset rate must be finite and >= 0");
        for (int t : targets)
            if (t < 0 || t >= model.qubit_count())
                throw ValidationError("cavity_sim", "reset target out of range");
    }
};

struct SimConfig {
    double dt = 0.01;
    double t_max = 1.0;
    std::uint64_t seed = 0;
    int n_trajectories = 1;
    int record_stride = 1;
    bool guard_truncation = true;         // refuse runs that leak into the top level
    double truncation_threshold = 1e-3;   // top-level population limit

    void validate() const {
        if (!(dt > 0.0)) throw ValidationError("cavity_sim", "dt must be > 0");
        if (!(t_max >= dt)) throw ValidationError("cavity_sim", "t_max must be >= dt");
        if (n_trajectories < 1)
            throw ValidationError("cavity_sim", "n_trajectories must be >= 1");
        if (record_stride < 1)
            throw ValidationError("cavity_sim", "record_stride must be >= 1");
        if (!(truncation_threshold > 0.0))
            throw ValidationError("cavity_sim", "truncation_threshold must be > 0");
    }

    Eigen::Index step_count() const {
        return static_cast<Eigen::Index>(std::llround(t_max / dt));
    }
};

struct ObservableSeries {
    std::vector<double> times;
    Eigen::MatrixXd qudit_populations;   // rows = times, cols = d
    Eigen::MatrixXd qubit_excitations;   // rows = times, cols = #qubits
    std::vector<double> photon_number;   // <a'a>
    std::vector<double> purity;          // Tr(rho_c^2) of the reduced qudit
    std::vector<double> coherence_l1;    // sum of off-diagonal |rho_c| entries
    // Numerical diagnostics of the joint state at each recorded time.
    std::vector<double> trace_error;
    std::vector<double> hermiticity_error;
    std::vector<double> min_eigenvalue;
    std::vector<std::string> warnings;

    size_t size() const { return times.size(); }
};

namespace detail {

struct Recorder {
    const CavityModel& model;
    SimConfig config;
    ObservableSeries series;

    Recorder(const CavityModel& m, const SimConfig& c, Eigen::Index n_records)
        : model(m), config(c) {
        series.times.reserve(n_records);
        series.qudit_populations.resize(n_records, m.d);
        series.qubit_excitations.resize(n_records, m.qubit_count());
        series.photon_number.reserve(n_records);
        series.purity.reserve(n_records);
        series.coherence_l1.reserve(n_records);
        series.trace_error.reserve(n_records);
        series.hermiticity_error.reserve(n_records);
        series.min_eigenvalue.reserve(n_records);
    }

    void record(double t, const DensityMatrix& rho) {
        const auto dims = model.factor_dims();
        const DensityMatrix qudit = partial_trace(rho, dims, 0);
        const Eigen::Index row = static_cast<Eigen::Index>(series.times.size());

        double photon = 0.0;
        for (int n = 0; n < model.d; ++n) {
            const double p = qudit.entries(n, n).real();
            series.qudit_populations(row, n) = p;
            photon += n * p;
        }
        for (int q = 0; q < model.qubit_count(); ++q) {
            const DensityMatrix rq = partial_trace(rho, dims, 1 + q);
            series.qubit_excitations(row, q) = rq.entries(1, 1).real();
        }
        double coherence = 0.0;
        for (int r = 0; r < model.d; ++r)
            for (int c = 0; c < model.d; ++c)
                if (r != c) coherence += std::abs(qudit.entries(r, c));

        series.times.push_back(t);
        series.photon_number.push_back(photon);
        series.purity.push_back((qudit.entries * qudit.entries).trace().real());
        series.coherence_l1.push_back(coherence);
        series.trace_error.push_back(rho.trace_error());
        series.hermiticity_error.push_back(rho.hermiticity_error());
        series.min_eigenvalue.push_back(rho.min_eigenvalue());

        if (config.guard_truncation &&
            series.qudit_populations(row, model.d - 1) > config.truncation_threshold)
            throw TruncationError(
                "cavity_sim",
                "top cavity level population " +
                    std::to_string(series.qudit_populations(row, model.d - 1)) + " at t=" +
                    std::to_string(t) + " exceeds " +
                    std::to_string(config.truncation_threshold) +
                    "; raise d or disable the guard");
    }
};

inline Eigen::Index record_count(const SimConfig& config) {
    return config.step_count() / config.record_stride + 1;
}

}  // namespace detail

// One stochastic trajectory: per step, unitary evolve then for each target
// qubit independently reset with probability rate*dt. Deterministic in the
// seed. Records observables every record_stride steps, t = 0 included.
inline ObservableSeries run_trajectory(const CavityModel& model, const ResetProcess& reset,
                                       const DensityMatrix& rho0, const SimConfig& config) {
    model.validate();
    reset.validate(model);
    config.validate();
    rho0.validate();
    if (rho0.dim() != model.dim())
        throw ValidationError("cavity_sim", "initial state dimension does not match the model");
    const double p_reset = reset.rate * config.dt;
    if (p_reset > 1.0)
        throw ConfigError("cavity_sim", {"rate*dt exceeds 1; reduce dt or the reset rate"});

    const Matrix h = build_hamiltonian(model);
    const Propagator prop = make_propagator(h, config.dt, model.hbar);

    detail::Recorder recorder(model, config, detail::record_count(config));
    if (prop.h_spectral_norm * config.dt > 0.1)
        recorder.series.warnings.push_back(
            "step size dt exceeds 0.1/|H| — results may be under-resolved");

    Rng rng(config.seed);
    DensityMatrix rho = rho0;
    recorder.record(0.0, rho);
    const Eigen::Index steps = config.step_count();
    for (Eigen::Index s = 1; s <= steps; ++s) {
        rho = evolve_step(rho, prop);
        for (int target : reset.targets)
            if (rng.bernoulli(p_reset)) rho = apply_reset(rho, model, target);
        if (s % config.record_stride == 0) recorder.record(s * config.dt, rho);
    }
    return std::move(recorder.series);
}

// Deterministic mean of the reset process:
//   drho/dt = -(i/hbar)[H, rho] + rate * sum_targets (reset_q(rho) - rho),
// integrated with classical fourth-order Runge-Kutta at step dt.
inline ObservableSeries run_mean_evolution(const CavityModel& model, const ResetProcess& reset,
                                           const DensityMatrix& rho0, const SimConfig& config) {
    model.validate();
    reset.validate(model);
    config.validate();
    rho0.validate();
    if (rho0.dim() != model.dim())
        throw ValidationError("cavity_sim", "initial state dimension does not match the model");

    const Matrix h = build_hamiltonian(model);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    const double h_norm =
        std::max(std::abs(solver.eigenvalues().minCoeff()), std::abs(solver.eigenvalues().maxCoeff())) /
        model.hbar;

    detail::Recorder recorder(model, config, detail::record_count(config));
    if (h_norm * config.dt > 0.1)
        recorder.series.warnings.push_back(
            "step size dt exceeds 0.1/|H| — results may be under-resolved");

    const Complex i_unit(0.0, 1.0);
    auto derivative = [&](const Matrix& rho) {
        Matrix drho = -(i_unit / model.hbar) * (h * rho - rho * h);
        if (reset.rate > 0.0) {
            DensityMatrix tmp;
            tmp.entries = rho;
            for (int target : reset.targets)
                drho += reset.rate * (apply_reset(tmp, model, target).entries - rho);
        }
        return drho;
    };

    DensityMatrix rho = rho0;
    recorder.record(0.0, rho);
    const Eigen::Index steps = config.step_count();
    const double dt = config.dt;
    for (Eigen::Index s = 1; s <= steps; ++s) {
        const Matrix k1 = derivative(rho.entries);
        const Matrix k2 = derivative(rho.entries + 0.5 * dt * k1);
        const Matrix k3 = derivative(rho.entries + 0.5 * dt * k2);
        const Matrix k4 = derivative(rho.entries + dt * k3);
        rho.entries += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (s % config.record_stride == 0) recorder.record(s * dt, rho);
    }
    return std::move(recorder.series);
}

// Trajectory ensemble: mean and standard error of every observable across
// n_trajectories independent seeded runs (stream i uses mix_seed(seed, i)).
// Deterministic regardless of thread count: results reduce in stream order.
struct EnsembleSeries {
    ObservableSeries mean;
    Eigen::MatrixXd populations_se;
    Eigen::MatrixXd excitations_se;
    std::vector<double> photon_se;
    std::vector<double> purity_se;
    std::vector<double> coherence_se;
    int n_trajectories = 0;
};

inline EnsembleSeries run_trajectory_ensemble(const CavityModel& model,
                                              const ResetProcess& reset,
                                              const DensityMatrix& rho0,
                                              const SimConfig& config) {
    config.validate();
    if (config.n_trajectories < 2)
        throw ValidationError("cavity_sim", "ensemble needs n_trajectories >= 2");
    const int n = config.n_trajectories;

    std::vector<ObservableSeries> runs(n);
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int n_chunks = static_cast<int>(std::min<unsigned>(hw, 16));
    std::vector<std::future<void>> futures;
    futures.reserve(n_chunks);
    for (int chunk = 0; chunk < n_chunks; ++chunk) {
        futures.push_back(std::async(std::launch::async, [&, chunk]() {
            for (int i = chunk; i < n; i += n_chunks) {
                SimConfig local = config;
                local.seed = mix_seed(config.seed, static_cast<std::uint64_t>(i));
                runs[i] = run_trajectory(model, reset, rho0, local);
            }
        }));
    }
    for (auto& f : futures) f.get();

    // Welford accumulation in stream order over every recorded scalar.
    const size_t rows = runs[0].size();
    const int d = model.d;
    const int k = model.qubit_count();
    const int cols = d + k + 3;  // populations, excitations, photon, purity, coherence
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(rows, cols);
    for (int i = 0; i < n; ++i) {
        const ObservableSeries& run = runs[i];
        if (run.size() != rows)
            throw InternalError("cavity_sim", "ensemble runs recorded different lengths");
        for (size_t r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                double x;
                if (c < d) x = run.qudit_populations(r, c);
                else if (c < d + k) x = run.qubit_excitations(r, c - d);
                else if (c == d + k) x = run.photon_number[r];
                else if (c == d + k + 1) x = run.purity[r];
                else x = run.coherence_l1[r];
                const double delta = x - mean(r, c);
                mean(r, c) += delta / (i + 1);
                m2(r, c) += delta * (x - mean(r, c));
            }
        }
    }

    EnsembleSeries out;
    out.n_trajectories = n;
    out.mean = runs[0];  // copies times/shapes; values overwritten below
    out.mean.warnings = runs[0].warnings;
    out.populations_se.resize(rows, d);
    out.excitations_se.resize(rows, k);
    out.photon_se.resize(rows);
    out.purity_se.resize(rows);
    out.coherence_se.resize(rows);
    for (size_t r = 0; r < rows; ++r) {
        for (int c = 0; c < d; ++c) {
            out.mean.qudit_populations(r, c) = mean(r, c);
            out.populations_se(r, c) = std::sqrt(m2(r, c) / (n - 1.0) / n);
        }
        for (int c = 0; c < k; ++c) {
            out.mean.qubit_excitations(r, c) = mean(r, d + c);
            out.excitations_se(r, c) = std::sqrt(m2(r, d + c) / (n - 1.0) / n);
        }
        out.mean.photon_number[r] = mean(r, d + k);
        out.photon_se[r] = std::sqrt(m2(r, d + k) / (n - 1.0) / n);
        out.mean.purity[r] = mean(r, d + k + 1);
        out.purity_se[r] = std::sqrt(m2(r, d + k + 1) / (n - 1.0) / n);
        out.mean.coherence_l1[r] = mean(r, d + k + 2);
        out.coherence_se[r] = std::sqrt(m2(r, d + k + 2) / (n - 1.0) / n);
        // Diagnostics: worst case across the ensemble.
        double te = 0.0, he = 0.0;
        double me = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            te = std::max(te, runs[i].trace_error[r]);
            he = std::max(he, runs[i].hermiticity_error[r]);
            me = std::min(me, runs[i].min_eigenvalue[r]);
        }
        out.mean.trace_error[r] = te;
        out.mean.hermiticity_error[r] = he;
        out.mean.min_eigenvalue[r] = me;
    }
    return out;
}

}  // namespace bayesosc::cavity
