#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "critsense/errors.hpp"
#include "critsense/lindblad.hpp"

using namespace critsense;

namespace {

QuantumState basis_state(const HilbertSpace& s, int level, int n) {
    ComplexVector v = ComplexVector::Zero(s.dim());
    v(s.index(level, n)) = 1.0;
    return QuantumState::pure_density(v);
}

HamiltonianModel static_model(ModelKind kind, int levels, int cutoff, const SystemParams& p) {
    HamiltonianModel m;
    m.kind = kind;
    m.params = p;
    m.schedule.k = 0.0;  // eps stays 0
    m.space = HilbertSpace(levels, cutoff);
    return m;
}

std::vector<double> sorted_eigenvalues(const ComplexMatrix& h) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
    std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return v;
}

}  // namespace

TEST(HamiltonianJc2, VacuumRabiSplitting) {
    const SystemParams p;
    const OperatorSet ops = build_operators(HilbertSpace(2, 1));
    const ComplexMatrix h = build_hamiltonian_jc2(0.0, p, ops);
    // n = 1 manifold {|e,0>, |g,1>}
    ComplexMatrix block(2, 2);
    const int e0 = ops.space.index(kE, 0), g1 = ops.space.index(kG, 1);
    block << h(e0, e0), h(e0, g1), h(g1, e0), h(g1, g1);
    const auto ev = sorted_eigenvalues(block);
    EXPECT_NEAR(ev[0], -p.omega, 1e-10);
    EXPECT_NEAR(ev[1], p.omega, 1e-10);
}

TEST(HamiltonianJc2, DarkZeroModeAndQuasiEnergies) {
    const SystemParams p;
    const OperatorSet ops = build_operators(HilbertSpace(2, 60));
    const ComplexMatrix h = build_hamiltonian_jc2(0.8, p, ops);
    EXPECT_TRUE(is_hermitian(h));
    const auto ev = sorted_eigenvalues(h);
    double min_abs = 1e300;
    for (double e : ev) min_abs = std::min(min_abs, std::abs(e));
    EXPECT_LT(min_abs, 1e-6 * p.omega);
    const double target = p.omega * std::pow(0.36, 0.75);
    for (double sign : {1.0, -1.0}) {
        double best = 1e300;
        for (double e : ev) {
            if (std::abs(e - sign * target) < std::abs(best - sign * target)) best = e;
        }
        EXPECT_NEAR(best, sign * quasi_energies(1, 0.8, p.omega).plus, 1e-3 * target);
    }
}

TEST(HamiltonianJc2, RejectsQutritSpace) {
    const OperatorSet ops = build_operators(HilbertSpace(3, 4));
    EXPECT_THROW(build_hamiltonian_jc2(0.1, SystemParams{}, ops), std::invalid_argument);
    const OperatorSet ops2 = build_operators(HilbertSpace(2, 4));
    EXPECT_THROW(build_hamiltonian_qutrit(0.1, SystemParams{}, ops2), std::invalid_argument);
}

TEST(HamiltonianQutrit, ReducesToJc2) {
    const SystemParams p;
    const int nmax = 8;
    const OperatorSet q3 = build_operators(HilbertSpace(3, nmax));
    const OperatorSet q2 = build_operators(HilbertSpace(2, nmax));
    for (double e : {0.0, 0.6}) {
        const ComplexMatrix h3 = build_hamiltonian_qutrit_detuned(e, p, q3);
        const ComplexMatrix h2 = build_hamiltonian_jc2(e, p, q2);
        const int d = 2 * (nmax + 1);
        EXPECT_NEAR((h3.topLeftCorner(d, d) - h2).norm(), 0.0, 1e-12) << "eps = " << e;
        EXPECT_NEAR((build_hamiltonian_qutrit(e, p, q3) - h3).norm(), 0.0, 1e-12);
    }
}

TEST(HamiltonianQutrit, LadderAndAnharmonicity) {
    SystemParams p;
    p.delta_e = kTwoPi * 1.0;
    p.delta_r = -kTwoPi * 1.6;
    const OperatorSet ops = build_operators(HilbertSpace(3, 6));
    const ComplexMatrix h = build_hamiltonian_qutrit_detuned(0.3, p, ops);
    EXPECT_TRUE(is_hermitian(h));
    for (int n = 1; n <= 6; ++n) {
        const Complex v = h(ops.space.index(kF, n - 1), ops.space.index(kE, n));
        EXPECT_NEAR(std::abs(v), std::sqrt(2.0) * std::sqrt(n) * p.omega, 1e-9);
    }
    const int f0 = ops.space.index(kF, 0);
    EXPECT_NEAR(h(f0, f0).real(), kTwoPi * (2.0 - 245.0), 1e-9);
    const int g3 = ops.space.index(kG, 3);
    EXPECT_NEAR(h(g3, g3).real(), 3.0 * p.delta_r, 1e-9);
}

TEST(LindbladRhs, ZeroGenerator) {
    const HilbertSpace s(2, 3);
    const ComplexMatrix zero = ComplexMatrix::Zero(s.dim(), s.dim());
    const ComplexMatrix d = lindblad_rhs(basis_state(s, kE, 1), zero, {});
    EXPECT_EQ(d.norm(), 0.0);
}

TEST(LindbladRhs, SingleChannelDecayRates) {
    const HilbertSpace s(2, 4);
    const OperatorSet ops = build_operators(s);
    const ComplexMatrix zero = ComplexMatrix::Zero(s.dim(), s.dim());
    const std::vector<Collapse> qubit{{0.05, ops.q}};
    const ComplexMatrix d1 = lindblad_rhs(basis_state(s, kE, 0), zero, qubit);
    EXPECT_NEAR((ops.projector(kE, kE) * d1).trace().real(), -0.05, 1e-15);
    EXPECT_NEAR(d1.trace().real(), 0.0, 1e-15);

    const std::vector<Collapse> cavity{{0.08, ops.a}};
    const ComplexMatrix d2 = lindblad_rhs(basis_state(s, kG, 1), zero, cavity);
    EXPECT_NEAR((ops.number * d2).trace().real(), -0.08, 1e-15);
}

TEST(LindbladRhs, TracelessAndHermitian) {
    const SystemParams p;
    HamiltonianModel m;
    m.space = HilbertSpace(3, 5);
    m.kind = ModelKind::qutrit_resonant;
    m.params = p;
    const OperatorSet ops = build_operators(m.space);
    ComplexVector v = ComplexVector::Random(m.space.dim());
    v.normalize();
    const ComplexMatrix d = lindblad_rhs(QuantumState::from_ket(v), m.hamiltonian(0.4, ops), m.collapse_operators(ops));
    EXPECT_NEAR(std::abs(d.trace()), 0.0, 1e-10);
    EXPECT_NEAR((d - d.adjoint()).norm(), 0.0, 1e-10);
}

TEST(LindbladRhs, RejectsNegativeRateAndMismatch) {
    const HilbertSpace s(2, 2);
    const OperatorSet ops = build_operators(s);
    const ComplexMatrix zero = ComplexMatrix::Zero(s.dim(), s.dim());
    const std::vector<Collapse> bad{{-0.1, ops.a}};
    EXPECT_THROW(lindblad_rhs(basis_state(s, kG, 0), zero, bad), std::invalid_argument);
    EXPECT_THROW(lindblad_rhs(basis_state(s, kG, 0), ComplexMatrix::Zero(3, 3), {}), DimensionError);
}

TEST(LindbladRhs, PhotonDecayIsExponential) {
    // Test-local RK4 on the cavity-only generator, compared with n(0) e^{-kappa t}.
    const HilbertSpace s(2, 12);
    const OperatorSet ops = build_operators(s);
    const ComplexMatrix zero = ComplexMatrix::Zero(s.dim(), s.dim());
    const double kappa = 0.08;
    const std::vector<Collapse> c{{kappa, ops.a}};
    ComplexVector v = ComplexVector::Zero(s.dim());
    v(s.index(kG, 2)) = std::sqrt(0.5);
    v(s.index(kG, 5)) = std::sqrt(0.5);
    ComplexMatrix rho = v * v.adjoint();
    const double n0 = 3.5;
    const double dt = 0.01;
    for (int i = 1; i <= 500; ++i) {
        const ComplexMatrix k1 = lindblad_rhs(rho, zero, c);
        const ComplexMatrix k2 = lindblad_rhs(rho + 0.5 * dt * k1, zero, c);
        const ComplexMatrix k3 = lindblad_rhs(rho + 0.5 * dt * k2, zero, c);
        const ComplexMatrix k4 = lindblad_rhs(rho + dt * k3, zero, c);
        rho += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (i % 100 == 0) {
            EXPECT_NEAR((ops.number * rho).trace().real(), n0 * std::exp(-kappa * i * dt), 1e-8);
        }
    }
}

TEST(Integrate, StationaryGroundVacuum) {
    const HamiltonianModel m = static_model(ModelKind::jc2, 2, 5, SystemParams{}.without_dissipation());
    const Trajectory t = integrate(m, ground_vacuum(m.space), 0.05);
    for (const auto& r : t.records) {
        EXPECT_NEAR(r.p_g, 1.0, 1e-14);
        EXPECT_NEAR(r.n_avg, 0.0, 1e-14);
        EXPECT_NEAR(r.fidelity, 1.0, 1e-14);
    }
}

TEST(Integrate, VacuumRabiOscillation) {
    const SystemParams p = SystemParams{}.without_dissipation();
    const HamiltonianModel m = static_model(ModelKind::jc2, 2, 4, p);
    IntegratorOptions o;
    o.n_samples = 100;
    o.record_fidelity = false;
    const Trajectory t = integrate(m, basis_state(m.space, kE, 0), 0.1, o);
    ASSERT_EQ(t.records.size(), 101u);
    for (const auto& r : t.records) {
        EXPECT_NEAR(r.p_e, std::pow(std::cos(p.omega * r.t), 2), 1e-6) << "t = " << r.t;
    }
}

TEST(Integrate, QuenchRegressionAt0985) {
    SystemParams p;
    HamiltonianModel m;
    m.params = p;
    m.schedule.k = 10.0;
    m.schedule.epsilon_max = 0.985;
    m.space = HilbertSpace(2, 60);
    IntegratorOptions o;
    o.n_samples = 50;
    const Trajectory t = integrate(m, ground_vacuum(m.space), m.schedule.end_time(), o);
    EXPECT_NEAR(dark_state_pe(0.985), 0.4137, 1e-4);
    EXPECT_LT(std::abs(t.back().p_e - dark_state_pe(0.985)) / dark_state_pe(0.985), 0.05);
    EXPECT_NEAR(t.back().epsilon, 0.985, 1e-12);
    EXPECT_TRUE(check_invariants(t).empty());
}

TEST(Integrate, PurityWithoutDissipation) {
    HamiltonianModel m;
    m.params = SystemParams{}.without_dissipation();
    m.schedule.epsilon_max = 0.9;
    m.space = HilbertSpace(2, 30);
    IntegratorOptions o;
    o.n_samples = 40;
    const Trajectory t = integrate(m, ground_vacuum(m.space), m.schedule.end_time(), o);
    for (const auto& r : t.records) EXPECT_NEAR(r.purity, 1.0, 1e-6);
    EXPECT_TRUE(check_invariants(t).empty());
}

TEST(Integrate, FrameReductionDetunedEqualsResonant) {
    HamiltonianModel a;
    a.kind = ModelKind::qutrit_resonant;
    a.schedule.epsilon_max = 0.5;
    a.space = HilbertSpace(3, 10);
    HamiltonianModel b = a;
    b.kind = ModelKind::qutrit_detuned;
    IntegratorOptions o;
    o.n_samples = 20;
    const Trajectory ta = integrate(a, ground_vacuum(a.space), a.schedule.end_time(), o);
    const Trajectory tb = integrate(b, ground_vacuum(b.space), b.schedule.end_time(), o);
    ASSERT_EQ(ta.records.size(), tb.records.size());
    for (std::size_t i = 0; i < ta.records.size(); ++i) {
        EXPECT_NEAR(ta.records[i].p_e, tb.records[i].p_e, 1e-10);
        EXPECT_NEAR(ta.records[i].p_f, tb.records[i].p_f, 1e-10);
        EXPECT_NEAR(ta.records[i].n_avg, tb.records[i].n_avg, 1e-10);
    }
    EXPECT_NEAR((ta.final_rho - tb.final_rho).norm(), 0.0, 1e-10);
}

TEST(Integrate, SampleTimesAreHonoured) {
    HamiltonianModel m;
    m.schedule.epsilon_max = 0.6;
    m.space = HilbertSpace(2, 10);
    IntegratorOptions o;
    o.sample_times = {m.schedule.time_of(0.2), m.schedule.time_of(0.4), m.schedule.time_of(0.6)};
    const Trajectory t = integrate(m, ground_vacuum(m.space), m.schedule.end_time(), o);
    ASSERT_EQ(t.records.size(), 4u);
    EXPECT_NEAR(t.nearest_epsilon(0.4).epsilon, 0.4, 1e-12);
    o.sample_times = {2.0 * m.schedule.end_time()};
    EXPECT_THROW(integrate(m, ground_vacuum(m.space), m.schedule.end_time(), o), std::invalid_argument);
}

TEST(Integrate, StepUnderflowIsStiffness) {
    HamiltonianModel m;
    m.schedule.epsilon_max = 0.6;
    m.space = HilbertSpace(2, 10);
    IntegratorOptions o;
    o.tolerance = 1e-30;
    o.dt_min = 1e-4;
    EXPECT_THROW(integrate(m, ground_vacuum(m.space), m.schedule.end_time(), o), StiffnessError);
}

TEST(Integrate, RejectsBadInputs) {
    HamiltonianModel m;
    m.space = HilbertSpace(2, 5);
    EXPECT_THROW(integrate(m, ground_vacuum(m.space), 0.0), std::invalid_argument);
    EXPECT_THROW(integrate(m, ground_vacuum(HilbertSpace(2, 6)), 0.1), DimensionError);
    m.kind = ModelKind::qutrit_resonant;
    EXPECT_THROW(integrate(m, ground_vacuum(m.space), 0.1), std::invalid_argument);
}

TEST(Trajectory, CsvColumns) {
    HamiltonianModel m;
    m.schedule.epsilon_max = 0.3;
    m.space = HilbertSpace(2, 8);
    IntegratorOptions o;
    o.n_samples = 3;
    const Trajectory t = integrate(m, ground_vacuum(m.space), m.schedule.end_time(), o);
    std::ostringstream os;
    write_trajectory_csv(os, t);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    while (!line.empty() && line[0] == '#') std::getline(in, line);
    EXPECT_EQ(line, "t_us,epsilon,P_g,P_e,P_f,n_avg,fidelity,trace");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 4);
}

TEST(Invariants, DetectsViolation) {
    Trajectory t;
    TrajectoryRecord r;
    r.p_g = 0.7;
    r.p_e = 0.5;
    r.trace = 1.2;
    r.purity = 1.0;
    r.min_eigenvalue = -0.1;
    t.records.push_back(r);
    EXPECT_FALSE(check_invariants(t).empty());
}

TEST(Convergence, ZeroDriveHasNoDifferences) {
    const HamiltonianModel m = static_model(ModelKind::jc2, 2, 5, SystemParams{});
    const ConvergenceReport r = convergence_check(m, ground_vacuum, 0.05, {5, 8, 12});
    ASSERT_EQ(r.pairs.size(), 2u);
    for (const auto& p : r.pairs) {
        for (const auto& [name, d] : p.differences) EXPECT_EQ(d, 0.0) << name;
    }
    EXPECT_TRUE(r.passed);
}

TEST(Convergence, ModerateQuenchConverges) {
    HamiltonianModel m;
    m.schedule.epsilon_max = 0.9;
    const ConvergenceReport r = convergence_check(m, ground_vacuum, m.schedule.end_time(), {20, 30, 40});
    EXPECT_TRUE(r.monotone) << r.summary();
    EXPECT_LT(r.pairs.back().max_difference, 1e-4) << r.summary();
    EXPECT_TRUE(r.passed);
}

TEST(Convergence, UnderTruncationFailsAndNamesObservable) {
    HamiltonianModel m;
    m.schedule.epsilon_max = 0.99;
    const ConvergenceReport r = convergence_check(m, ground_vacuum, m.schedule.end_time(), {10, 15});
    EXPECT_FALSE(r.passed);
    EXPECT_FALSE(r.worst_observable.empty());
    EXPECT_NE(r.summary().find(r.worst_observable), std::string::npos);
}

TEST(Convergence, ArgumentChecks) {
    HamiltonianModel m;
    m.space = HilbertSpace(2, 5);
    EXPECT_THROW(convergence_check(m, ground_vacuum, 0.01, {5}), std::invalid_argument);
    EXPECT_THROW(convergence_check(m, ground_vacuum, 0.01, {8, 5}), std::invalid_argument);
    EXPECT_THROW(convergence_check(m, ground_vacuum, 0.01, {5, 8}, {}, 1e-4, {"bogus"}), std::invalid_argument);
}
