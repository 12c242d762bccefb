#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "bayesosc/cavity.hpp"
#include "bayesosc/rng.hpp"
#include "cavity_fixtures.hpp"

using namespace bayesosc;
using namespace bayesosc::cavity;

namespace {

Matrix kron2(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

DensityMatrix random_density(Rng& rng, Eigen::Index dim) {
    Matrix m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = Complex(rng.normal(), rng.normal());
    DensityMatrix rho;
    rho.entries = m * m.adjoint();
    rho.entries /= rho.entries.trace();
    return rho;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("ladder operators carry the truncated number spectrum") {
    CavityModel two;
    two.d = 2;
    const auto ops2 = build_operators(two);
    const Matrix n2 = ops2.a_dagger * ops2.a;
    REQUIRE(n2(0, 0).real() == 0.0);
    REQUIRE(n2(1, 1).real() == 1.0);

    CavityModel four;
    four.d = 4;
    const auto ops4 = build_operators(four);
    const Matrix n4 = ops4.a_dagger * ops4.a;
    for (int k = 0; k < 4; ++k) REQUIRE(n4(k, k).real() == Catch::Approx(k).margin(1e-14));

    // Truncation artifact: [a, a'] is the identity except the top corner.
    const Matrix comm = ops4.a * ops4.a_dagger - ops4.a_dagger * ops4.a;
    for (int k = 0; k < 3; ++k) REQUIRE(comm(k, k).real() == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(comm(3, 3).real() == Catch::Approx(1.0 - 4.0).margin(1e-14));
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (r != c) REQUIRE(std::abs(comm(r, c)) < 1e-14);
}

TEST_CASE("qubit operators follow the ground-first convention") {
    CavityModel model;
    model.d = 2;
    model.qubits = {QubitSpec{1.0, 0.0}};
    const auto ops = build_operators(model);

    // sigma^z = diag(-1, +1) on the qubit slot: ground gets -1.
    Matrix sz_expected = Matrix::Zero(2, 2);
    sz_expected(0, 0) = -1.0;
    sz_expected(1, 1) = 1.0;
    REQUIRE(max_abs_diff(ops.sigma_z[0], kron2(Matrix::Identity(2, 2), sz_expected)) < 1e-15);

    // sigma^y = -i (sigma^+ - sigma^-), sigma^- = (sigma^+)^dagger.
    const Complex i_unit(0.0, 1.0);
    REQUIRE(max_abs_diff(ops.sigma_y[0],
                         -i_unit * (ops.sigma_plus[0] - ops.sigma_minus[0])) < 1e-15);
    REQUIRE(max_abs_diff(ops.sigma_minus[0], ops.sigma_plus[0].adjoint()) < 1e-15);
    // [sigma^+, sigma^-] = sigma^z.
    REQUIRE(max_abs_diff(ops.sigma_plus[0] * ops.sigma_minus[0] -
                             ops.sigma_minus[0] * ops.sigma_plus[0],
                         ops.sigma_z[0]) < 1e-15);
}

TEST_CASE("model validation enforces the dimension cap") {
    CavityModel model;
    model.d = 4;
    model.qubits = {QubitSpec{1.0, 0.1}, QubitSpec{1.0, 0.1}};
    model.dim_cap = 8;
    REQUIRE_THROWS_AS(build_operators(model), SizeError);

    CavityModel tiny;
    tiny.d = 1;
    REQUIRE_THROWS_AS(tiny.validate(), ValidationError);

    CavityModel bad_g;
    bad_g.qubits = {QubitSpec{1.0, -0.5}};
    REQUIRE_THROWS_AS(bad_g.validate(), ValidationError);
}

TEST_CASE("basis indexing orders the cavity slowest") {
    CavityModel model;
    model.d = 3;
    model.qubits = {QubitSpec{}, QubitSpec{}};
    REQUIRE(basis_index(model, 2, {1, 0}) == 10);
    REQUIRE(basis_index(model, 0, {0, 1}) == 1);
    const Vector ket = basis_ket(model, 1, {0, 1});
    REQUIRE(ket(5) == Complex(1.0, 0.0));
    REQUIRE(ket.norm() == 1.0);
    REQUIRE_THROWS_AS(basis_index(model, 3, {0, 0}), ValidationError);
    REQUIRE_THROWS_AS(basis_index(model, 0, {0}), ValidationError);
}

TEST_CASE("uncoupled Hamiltonian is diagonal with the split spectrum") {
    CavityModel model;
    model.d = 3;
    model.omega_r = 1.3;
    model.hbar = 2.0;
    model.qubits = {QubitSpec{0.7, 0.0}};
    const Matrix h = build_hamiltonian(model);
    for (int n = 0; n < 3; ++n) {
        for (int b = 0; b < 2; ++b) {
            const Eigen::Index idx = basis_index(model, n, {b});
            const double expected =
                model.hbar * model.omega_r * (n + 0.5) +
                0.5 * model.hbar * model.qubits[0].delta * (b == 1 ? 1.0 : -1.0);
            REQUIRE(h(idx, idx).real() == Catch::Approx(expected).epsilon(1e-14));
            for (Eigen::Index c = 0; c < h.cols(); ++c)
                if (c != idx) REQUIRE(std::abs(h(idx, c)) < 1e-15);
        }
    }
}

TEST_CASE("Hamiltonian is Hermitian for random parameters") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        CavityModel model;
        model.d = 2 + static_cast<int>(rng.uniform_index(4));
        model.omega_r = rng.uniform(0.1, 3.0);
        const int n_qubits = 1 + static_cast<int>(rng.uniform_index(2));
        for (int q = 0; q < n_qubits; ++q)
            model.qubits.push_back(QubitSpec{rng.uniform(-2.0, 2.0), rng.uniform(0.0, 0.5)});
        const Matrix h = build_hamiltonian(model);
        REQUIRE(max_abs_diff(h, h.adjoint()) < 1e-12);
    }
}

TEST_CASE("resonant doublet splits by twice the coupling") {
    CavityModel model;
    model.d = 2;
    model.omega_r = 1.0;
    const double g = 0.01;
    model.qubits = {QubitSpec{1.0, g}};
    const Matrix h = build_hamiltonian(model);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    const auto& evals = solver.eigenvalues();
    // Sorted spectrum: ground, then the split singly-excited doublet.
    const double split = evals(2) - evals(1);
    REQUIRE(std::abs(split - 2.0 * g) < 5e-4);
}

TEST_CASE("propagator is unitary and fixes commuting diagonal states") {
    CavityModel model;
    model.d = 3;
    model.omega_r = 0.9;
    model.qubits = {QubitSpec{1.1, 0.0}};
    const Matrix h = build_hamiltonian(model);
    const Propagator prop = make_propagator(h, 0.07, model.hbar);
    REQUIRE(max_abs_diff(prop.u * prop.u.adjoint(), Matrix::Identity(6, 6)) < 1e-12);

    DensityMatrix rho;
    rho.entries = Matrix::Zero(6, 6);
    rho.entries(0, 0) = 0.2;
    rho.entries(2, 2) = 0.5;
    rho.entries(5, 5) = 0.3;
    const DensityMatrix after = evolve_step(rho, prop);
    REQUIRE(max_abs_diff(after.entries, rho.entries) < 1e-14);
}

TEST_CASE("uncoupled populations are constant under evolution") {
    CavityModel model;
    model.d = 3;
    model.qubits = {QubitSpec{1.3, 0.0}};
    Vector ket = basis_ket(model, 1, {1}) + 0.5 * basis_ket(model, 2, {0});
    const DensityMatrix rho0 = DensityMatrix::from_ket(ket);
    SimConfig config;
    config.dt = 0.05;
    config.t_max = 25.0;
    config.record_stride = 100;
    config.guard_truncation = false;
    const ResetProcess off{0.0, {}};
    const auto series = run_trajectory(model, off, rho0, config);
    for (size_t i = 0; i < series.size(); ++i)
        for (int n = 0; n < 3; ++n)
            REQUIRE(series.qudit_populations(i, n) ==
                    Catch::Approx(series.qudit_populations(0, n)).margin(1e-12));
}

TEST_CASE("resonant excitation swap matches the two-level oscillation period") {
    CavityModel model;
    model.d = 2;
    model.omega_r = 1.0;
    const double g = 0.01;
    model.qubits = {QubitSpec{1.0, g}};
    const DensityMatrix rho0 = DensityMatrix::from_ket(basis_ket(model, 1, {0}));
    SimConfig config;
    config.dt = 0.05;
    config.t_max = 400.0;
    config.guard_truncation = false;  // d=2 is the physics here, not a truncation
    const auto series = run_trajectory(model, ResetProcess{}, rho0, config);

    // The excitation swaps cavity -> qubit -> cavity with period pi/g; the
    // first qubit maximum sits at half that.
    size_t argmax = 0;
    for (size_t i = 0; i < series.size(); ++i)
        if (series.qubit_excitations(i, 0) > series.qubit_excitations(argmax, 0)) argmax = i;
    const double period = 2.0 * series.times[argmax];
    const double expected = M_PI / g;
    REQUIRE(std::abs(period - expected) < 0.02 * expected);
    REQUIRE(series.qubit_excitations(argmax, 0) > 0.98);
}

TEST_CASE("reset channel replaces the qubit with its ground state") {
    CavityModel model;
    model.d = 2;
    model.qubits = {QubitSpec{1.0, 0.1}};

    Matrix sigma_cav = Matrix::Zero(2, 2);
    sigma_cav(0, 0) = 0.3;
    sigma_cav(1, 1) = 0.7;
    Matrix excited = Matrix::Zero(2, 2), ground = Matrix::Zero(2, 2);
    excited(1, 1) = 1.0;
    ground(0, 0) = 1.0;

    DensityMatrix rho;
    rho.entries = kron2(sigma_cav, excited);
    const DensityMatrix reset_once = apply_reset(rho, model, 0);
    REQUIRE(max_abs_diff(reset_once.entries, kron2(sigma_cav, ground)) < 1e-15);
    REQUIRE(reset_once.entries.trace().real() == Catch::Approx(1.0).margin(1e-15));

    // Idempotence.
    const DensityMatrix reset_twice = apply_reset(reset_once, model, 0);
    REQUIRE(max_abs_diff(reset_twice.entries, reset_once.entries) < 1e-15);
}

TEST_CASE("resetting an entangled pair mixes the cavity") {
    CavityModel model;
    model.d = 2;
    model.qubits = {QubitSpec{1.0, 0.1}};
    const Vector bell = basis_ket(model, 1, {0}) + basis_ket(model, 0, {1});
    const DensityMatrix rho = DensityMatrix::from_ket(bell);
    REQUIRE((rho.entries * rho.entries).trace().real() == Catch::Approx(1.0).margin(1e-14));

    const DensityMatrix after = apply_reset(rho, model, 0);
    Matrix mixed = Matrix::Zero(2, 2);
    mixed(0, 0) = 0.5;
    mixed(1, 1) = 0.5;
    Matrix ground = Matrix::Zero(2, 2);
    ground(0, 0) = 1.0;
    REQUIRE(max_abs_diff(after.entries, kron2(mixed, ground)) < 1e-14);
    REQUIRE((after.entries * after.entries).trace().real() ==
            Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("partial trace recovers product factors and mixes entangled ones") {
    Rng rng(11);
    const DensityMatrix a = random_density(rng, 3);
    const DensityMatrix b = random_density(rng, 2);
    DensityMatrix joint;
    joint.entries = kron2(a.entries, b.entries);
    const std::vector<Eigen::Index> dims = {3, 2};
    REQUIRE(max_abs_diff(partial_trace(joint, dims, 0).entries, a.entries) < 1e-14);
    REQUIRE(max_abs_diff(partial_trace(joint, dims, 1).entries, b.entries) < 1e-14);

    // Maximally entangled two-qubit state reduces to the maximally mixed qubit.
    Vector bell = Vector::Zero(4);
    bell(0) = 1.0 / std::sqrt(2.0);
    bell(3) = 1.0 / std::sqrt(2.0);
    const DensityMatrix bell_rho = DensityMatrix::from_ket(bell);
    const DensityMatrix reduced = partial_trace(bell_rho, {2, 2}, 0);
    REQUIRE(max_abs_diff(reduced.entries, 0.5 * Matrix::Identity(2, 2)) < 1e-15);

    REQUIRE_THROWS_AS(partial_trace(joint, dims, 2), ValidationError);
    REQUIRE_THROWS_AS(partial_trace(joint, {4, 2}, 0), ValidationError);
}

TEST_CASE("partial trace preserves the trace and matches direct index summation") {
    Rng rng(12);
    const std::vector<Eigen::Index> dims = {3, 2, 2};
    for (int trial = 0; trial < 10; ++trial) {
        const DensityMatrix rho = random_density(rng, 12);
        for (size_t keep = 0; keep < dims.size(); ++keep) {
            const DensityMatrix reduced = partial_trace(rho, dims, keep);
            REQUIRE(std::abs(reduced.entries.trace() - rho.entries.trace()) < 1e-12);

            // Independent oracle: decode every joint index pair explicitly.
            Matrix expected = Matrix::Zero(dims[keep], dims[keep]);
            for (Eigen::Index x = 0; x < 12; ++x)
                for (Eigen::Index y = 0; y < 12; ++y) {
                    Eigen::Index fx[3], fy[3];
                    Eigen::Index rx = x, ry = y;
                    for (int s = 2; s >= 0; --s) {
                        fx[s] = rx % dims[s];
                        rx /= dims[s];
                        fy[s] = ry % dims[s];
                        ry /= dims[s];
                    }
                    bool rest_equal = true;
                    for (size_t s = 0; s < 3; ++s)
                        if (s != keep && fx[s] != fy[s]) rest_equal = false;
                    if (rest_equal) expected(fx[keep], fy[keep]) += rho.entries(x, y);
                }
            REQUIRE(max_abs_diff(reduced.entries, expected) < 1e-13);
        }
    }
}

TEST_CASE("density matrix validation rejects malformed states") {
    DensityMatrix lopsided;
    lopsided.entries = Matrix::Zero(2, 2);
    lopsided.entries(0, 1) = 0.5;  // not Hermitian
    lopsided.entries(0, 0) = 1.0;
    REQUIRE_THROWS_AS(lopsided.validate(), ValidationError);

    DensityMatrix off_trace;
    off_trace.entries = 0.7 * Matrix::Identity(2, 2);
    REQUIRE_THROWS_AS(off_trace.validate(), ValidationError);

    DensityMatrix negative;
    negative.entries = Matrix::Zero(2, 2);
    negative.entries(0, 0) = 1.5;
    negative.entries(1, 1) = -0.5;
    REQUIRE_THROWS_AS(negative.validate(), ValidationError);

    const Vector ket = 3.0 * basis_ket(fixtures::decay_model(), 1, {0});
    const DensityMatrix normalized = DensityMatrix::from_ket(ket);
    REQUIRE(normalized.entries.trace().real() == Catch::Approx(1.0).margin(1e-15));
    normalized.validate();
}

TEST_CASE("simulation config validation") {
    SimConfig config;
    config.dt = 0.0;
    REQUIRE_THROWS_AS(config.validate(), ValidationError);
    config.dt = 2.0;
    config.t_max = 1.0;
    REQUIRE_THROWS_AS(config.validate(), ValidationError);
    config.t_max = 4.0;
    config.record_stride = 0;
    REQUIRE_THROWS_AS(config.validate(), ValidationError);

    // rate*dt above 1 cannot be interpreted as a probability.
    const CavityModel model = fixtures::decay_model();
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    SimConfig coarse;
    coarse.dt = 0.5;
    coarse.t_max = 1.0;
    REQUIRE_THROWS_AS(run_trajectory(model, ResetProcess{3.0, {0}}, rho0, coarse),
                      ConfigError);

    // Mismatched initial state dimension.
    CavityModel other = fixtures::decay_model();
    other.d = 4;
    REQUIRE_THROWS_AS(run_trajectory(other, ResetProcess{}, rho0, coarse), ValidationError);
}

TEST_CASE("trajectory with zero rate equals pure unitary propagation") {
    const CavityModel model = fixtures::decay_model();
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    SimConfig config;
    config.dt = 0.01;
    config.t_max = 10.0;
    config.record_stride = 50;
    config.truncation_threshold = fixtures::kDecayTruncationThreshold;
    const auto series = run_trajectory(model, ResetProcess{0.0, {0}}, rho0, config);

    const Matrix h = build_hamiltonian(model);
    const Propagator prop = make_propagator(h, config.dt, model.hbar);
    DensityMatrix rho = rho0;
    size_t row = 1;
    for (int step = 1; step <= 1000; ++step) {
        rho = evolve_step(rho, prop);
        if (step % 50 == 0) {
            const DensityMatrix qudit = partial_trace(rho, model.factor_dims(), 0);
            for (int n = 0; n < model.d; ++n)
                REQUIRE(series.qudit_populations(row, n) ==
                        Catch::Approx(qudit.entries(n, n).real()).margin(1e-13));
            ++row;
        }
    }
    REQUIRE(row == series.size());
}

TEST_CASE("trajectories are deterministic in the seed") {
    const CavityModel model = fixtures::decay_model();
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    SimConfig config = fixtures::decay_config();
    config.t_max = 20.0;
    const ResetProcess reset{fixtures::kDecayRate, {0}};
    const auto a = run_trajectory(model, reset, rho0, config);
    const auto b = run_trajectory(model, reset, rho0, config);
    REQUIRE(a.times == b.times);
    REQUIRE(a.qudit_populations == b.qudit_populations);
    REQUIRE(a.purity == b.purity);
    config.seed = 999;
    const auto c = run_trajectory(model, reset, rho0, config);
    REQUIRE(a.qudit_populations != c.qudit_populations);
}

TEST_CASE("mean evolution without resets matches the propagator chain") {
    const CavityModel model = fixtures::decay_model();
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    SimConfig config;
    config.dt = 0.002;
    config.t_max = 5.0;
    config.record_stride = 100;
    config.truncation_threshold = fixtures::kDecayTruncationThreshold;
    const ResetProcess off{0.0, {}};
    const auto unitary = run_trajectory(model, off, rho0, config);
    const auto mean = run_mean_evolution(model, off, rho0, config);
    REQUIRE(unitary.size() == mean.size());
    for (size_t i = 0; i < mean.size(); ++i) {
        for (int n = 0; n < model.d; ++n)
            REQUIRE(mean.qudit_populations(i, n) ==
                    Catch::Approx(unitary.qudit_populations(i, n)).margin(1e-8));
        REQUIRE(mean.purity[i] == Catch::Approx(unitary.purity[i]).margin(1e-8));
    }
}

TEST_CASE("reset channel alone decays an excited qubit exponentially") {
    CavityModel model;
    model.d = 2;
    model.qubits = {QubitSpec{1.0, 0.0}};  // g = 0: reset is the only dynamics
    const DensityMatrix rho0 = DensityMatrix::from_ket(basis_ket(model, 0, {1}));
    const double rate = 0.5;
    SimConfig config;
    config.dt = 0.01;
    config.t_max = 6.0;
    config.record_stride = 25;
    const auto series = run_mean_evolution(model, ResetProcess{rate, {0}}, rho0, config);
    for (size_t i = 0; i < series.size(); ++i) {
        const double expected = std::exp(-rate * series.times[i]);
        REQUIRE(series.qubit_excitations(i, 0) ==
                Catch::Approx(expected).epsilon(0.01));
    }
}

TEST_CASE("sporadic resets drain the qudit that would otherwise revive") {
    const CavityModel model = fixtures::decay_model();
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    const SimConfig config = fixtures::decay_config();

    // Resets off: the excitation returns to the cavity near t = pi/g.
    const auto free_run = run_mean_evolution(model, ResetProcess{0.0, {0}}, rho0, config);
    const double t_lo = fixtures::kRevivalWindowLo * M_PI / fixtures::kDecayG;
    const double t_hi = fixtures::kRevivalWindowHi * M_PI / fixtures::kDecayG;
    double revival_pop = 0.0;
    for (size_t i = 0; i < free_run.size(); ++i)
        if (free_run.times[i] >= t_lo && free_run.times[i] <= t_hi)
            revival_pop = std::max(revival_pop, free_run.qudit_populations(i, 1));
    REQUIRE(revival_pop >= 0.99);

    // Resets on: a fixed-seed trajectory loses more than half the population.
    const ResetProcess reset{fixtures::kDecayRate, {0}};
    const auto trajectory = run_trajectory(model, reset, rho0, config);
    const size_t last = trajectory.size() - 1;
    REQUIRE(trajectory.qudit_populations(last, 1) < 0.5);
    const auto mean = run_mean_evolution(model, reset, rho0, config);
    REQUIRE(mean.qudit_populations(mean.size() - 1, 1) < 0.5);
}

TEST_CASE("weak coupling still drains the qudit while the qubit stays cold") {
    const CavityModel model = fixtures::decay_model(fixtures::kWeakG);
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    const SimConfig config = fixtures::weak_config();
    const auto series =
        run_mean_evolution(model, ResetProcess{fixtures::kWeakRate, {0}}, rho0, config);
    double max_excitation = 0.0;
    for (size_t i = 0; i < series.size(); ++i)
        max_excitation = std::max(max_excitation, series.qubit_excitations(i, 0));
    REQUIRE(max_excitation < 0.05);
    const double initial = series.qudit_populations(0, 1);
    const double final_pop = series.qudit_populations(series.size() - 1, 1);
    REQUIRE(final_pop <= 0.75 * initial);
}

TEST_CASE("trace, hermiticity and positivity hold across both run modes") {
    const CavityModel model = fixtures::invariant_model();
    const DensityMatrix rho0 = fixtures::invariant_initial_state(model);
    SimConfig config = fixtures::invariant_config();
    config.t_max = 40.0;  // short horizon for the unit suite
    const ResetProcess reset{fixtures::kInvariantRate, {0, 1}};

    const auto traj = run_trajectory(model, reset, rho0, config);
    const auto mean = run_mean_evolution(model, reset, rho0, config);
    for (const ObservableSeries* series : {&traj, &mean}) {
        for (size_t i = 0; i < series->size(); ++i) {
            REQUIRE(series->trace_error[i] < 1e-9);
            REQUIRE(series->hermiticity_error[i] < 1e-9);
            REQUIRE(series->min_eigenvalue[i] > -1e-8);
            double row_sum = 0.0;
            for (int n = 0; n < model.d; ++n) {
                row_sum += series->qudit_populations(i, n);
                REQUIRE(series->qudit_populations(i, n) >= -1e-9);
                REQUIRE(series->qudit_populations(i, n) <= 1.0 + 1e-9);
            }
            REQUIRE(std::abs(row_sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("closed-system energy is conserved by the propagator chain") {
    const CavityModel model = fixtures::invariant_model();
    const Matrix h = build_hamiltonian(model);
    const Propagator prop = make_propagator(h, fixtures::kInvariantDt, model.hbar);
    DensityMatrix rho = fixtures::invariant_initial_state(model);
    const double initial_energy = (h * rho.entries).trace().real();
    double worst = 0.0;
    for (int step = 1; step <= 10000; ++step) {
        rho = evolve_step(rho, prop);
        if (step % 100 == 0) {
            const double energy = (h * rho.entries).trace().real();
            worst = std::max(worst, std::abs(energy - initial_energy));
        }
    }
    REQUIRE(worst / std::abs(initial_energy) < 1e-8);
}

TEST_CASE("reduced-qudit purity and coherence shrink while decoherence dominates") {
    const CavityModel model = fixtures::decay_model();
    const SimConfig config = fixtures::monotone_config();
    const ResetProcess strong{fixtures::kMonotoneRate, {0}};

    const double sample_dt = config.dt * config.record_stride;
    const int window =
        static_cast<int>(std::lround(2.0 * M_PI / model.omega_r / sample_dt));
    auto smooth = [&](const std::vector<double>& xs) {
        std::vector<double> out;
        for (size_t i = 0; i + window <= xs.size(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < window; ++j) acc += xs[i + j];
            out.push_back(acc / window);
        }
        return out;
    };

    const auto fock = run_mean_evolution(model, strong, fixtures::decay_initial_state(model),
                                         config);
    // The horizon ends before the qudit drains past 50%, the regime where
    // the ground state would repurify it.
    REQUIRE(fock.qudit_populations(fock.size() - 1, 1) > 0.5);
    const auto purity = smooth(fock.purity);
    for (size_t i = 1; i < purity.size(); ++i) REQUIRE(purity[i] <= purity[i - 1] + 1e-9);

    const Vector superpos = basis_ket(model, 0, {0}) + basis_ket(model, 1, {0});
    const auto coh_run = run_mean_evolution(model, strong,
                                            DensityMatrix::from_ket(superpos), config);
    const auto coherence = smooth(coh_run.coherence_l1);
    REQUIRE(coherence.front() > 0.5);
    for (size_t i = 1; i < coherence.size(); ++i)
        REQUIRE(coherence[i] <= coherence[i - 1] + 1e-9);
}

TEST_CASE("truncation guard refuses runs that leak into the top level") {
    const CavityModel model = fixtures::decay_model();
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    SimConfig config = fixtures::decay_config();
    config.truncation_threshold = 1e-3;  // counter-rotating leakage sits near 5e-3
    REQUIRE_THROWS_AS(run_mean_evolution(model, ResetProcess{0.0, {0}}, rho0, config),
                      TruncationError);
}

TEST_CASE("a coarse step raises the resolution warning") {
    const CavityModel model = fixtures::decay_model();
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    SimConfig config;
    config.dt = 0.1;
    config.t_max = 1.0;
    config.truncation_threshold = fixtures::kDecayTruncationThreshold;
    const auto series = run_trajectory(model, ResetProcess{}, rho0, config);
    REQUIRE(series.warnings.size() == 1);

    SimConfig fine = config;
    fine.dt = 0.01;
    REQUIRE(run_trajectory(model, ResetProcess{}, rho0, fine).warnings.empty());
}

TEST_CASE("ensemble statistics are deterministic and reproduce the mean evolution") {
    const CavityModel model = fixtures::decay_model();
    const DensityMatrix rho0 = fixtures::decay_initial_state(model);
    SimConfig config = fixtures::ensemble_config();
    config.t_max = 20.0;
    config.n_trajectories = 100;
    const ResetProcess reset{fixtures::kDecayRate, {0}};

    const auto a = run_trajectory_ensemble(model, reset, rho0, config);
    const auto b = run_trajectory_ensemble(model, reset, rho0, config);
    REQUIRE(a.mean.qudit_populations == b.mean.qudit_populations);
    REQUIRE(a.populations_se == b.populations_se);

    const auto mean = run_mean_evolution(model, reset, rho0, config);
    for (size_t i = 0; i < mean.size(); ++i) {
        for (int n = 0; n < model.d; ++n) {
            const double diff = std::abs(a.mean.qudit_populations(i, n) -
                                         mean.qudit_populations(i, n));
            REQUIRE(diff <= 3.0 * a.populations_se(i, n) + 1e-12);
        }
    }
}
