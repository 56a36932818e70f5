#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "critsense/errors.hpp"
#include "critsense/jcm_analytics.hpp"
#include "critsense/lindblad.hpp"

using namespace critsense;

namespace {

// Independent closed forms used as oracles.
double oracle_pe(double e) { return 0.5 * (1.0 - std::sqrt(1.0 - e * e)); }
double oracle_time(double e, double k) { return std::sqrt(1.0 / (1.0 - e * e) - 1.0) / k; }

}  // namespace

TEST(Ramp, EndpointsAndRoundTrip) {
    EXPECT_EQ(ramp_epsilon(0.0, 10.0), 0.0);
    EXPECT_NEAR(ramp_time(0.99, 10.0), 0.70179, 1e-5);
    EXPECT_NEAR(ramp_time(0.99, 10.0), oracle_time(0.99, 10.0), 1e-12);
    EXPECT_NEAR(ramp_epsilon(ramp_time(0.5, 10.0), 10.0), 0.5, 1e-12);
    for (double e : {0.01, 0.3, 0.8, 0.97, 0.999}) EXPECT_NEAR(ramp_epsilon(ramp_time(e, 3.0), 3.0), e, 1e-12);
}

TEST(Ramp, UnreachableTarget) {
    EXPECT_THROW(ramp_time(1.0, 10.0), DomainError);
    EXPECT_THROW(ramp_time(1.2, 10.0), DomainError);
    EXPECT_THROW(ramp_time(0.5, 0.0), DomainError);
}

TEST(Ramp, StrictlyIncreasingBelowOne) {
    double prev = -1.0;
    for (int i = 0; i <= 200; ++i) {
        const double e = ramp_epsilon(0.05 * i, 10.0);
        EXPECT_GT(e, prev);
        EXPECT_LT(e, 1.0);
        prev = e;
    }
}

TEST(DarkState, ExcitedPopulation) {
    EXPECT_EQ(dark_state_pe(0.0), 0.0);
    EXPECT_NEAR(dark_state_pe(0.99), 0.42946, 1e-5);
    EXPECT_NEAR(dark_state_pe(0.9), 0.28206, 1e-5);
    for (double e : {0.1, 0.5, 0.95}) EXPECT_NEAR(dark_state_pe(e), oracle_pe(e), 1e-15);
}

TEST(DarkState, DerivativeMatchesFiniteDifference) {
    for (double e : {0.2, 0.6, 0.9, 0.98}) {
        const double h = 1e-6;
        const double fd = (oracle_pe(e + h) - oracle_pe(e - h)) / (2 * h);
        EXPECT_NEAR(dark_state_pe_derivative(e), fd, 1e-6 * std::max(1.0, fd));
    }
}

TEST(Metrology, DeltaPeAndSnr) {
    EXPECT_NEAR(delta_pe(0.5), 0.25, 1e-15);
    EXPECT_NEAR(snr(0.99), 1.0 / std::sqrt(1.0 - 0.9801), 1e-4);
    EXPECT_NEAR(snr(0.99), 7.0888, 1e-4);
    const double asym = 1.0 / std::sqrt(2.0 * (1.0 - 0.99));
    EXPECT_LT(std::abs(snr(0.99) - asym) / asym, 0.02);
    EXPECT_THROW(snr(0.0), DomainError);
}

TEST(Metrology, FisherClassical) {
    EXPECT_EQ(fisher_classical(0.0), 1.0);
    EXPECT_NEAR(fisher_classical(0.99), 50.2513, 1e-4);
    EXPECT_NEAR(fisher_classical(0.99), 1.0 / (1.0 - 0.9801), 1e-10);
}

TEST(Metrology, FisherQuantumMatchesClassical) {
    EXPECT_LT(std::abs(fisher_quantum_fd(0.9, 1e-5) - fisher_classical(0.9)), 1e-5);
}

TEST(Metrology, FisherTwoOutcomeEqualsSnrSquared) {
    for (double e : {0.1, 0.5, 0.9}) {
        const double f = fisher_two_outcome(dark_state_pe(e), dark_state_pe_derivative(e));
        EXPECT_NEAR(f, fisher_classical(e), 1e-10 * fisher_classical(e));
        EXPECT_NEAR(snr(e) * snr(e), f, 1e-10 * f);
    }
    EXPECT_THROW(fisher_two_outcome(0.0, 1.0), DomainError);
}

TEST(Metrology, FisherOfTime) {
    EXPECT_EQ(fisher_of_time(0.0, 10.0), 1.0);
    EXPECT_NEAR(fisher_of_time(0.70179, 10.0), 50.251, 1e-3);
    for (double t : {0.05, 0.2, 0.31}) {
        EXPECT_NEAR(fisher_of_time(2 * t, 10.0) - 1.0, 4.0 * (fisher_of_time(t, 10.0) - 1.0), 1e-9);
    }
}

TEST(QuasiEnergy, ScalingAndGap) {
    const double omega = kTwoPi * 20.9;
    const auto e0 = quasi_energies(1, 0.0, omega);
    EXPECT_NEAR(e0.plus, omega, 1e-12);
    EXPECT_NEAR(e0.minus, -omega, 1e-12);
    EXPECT_NEAR(gap_min(0.9, omega), kTwoPi * 6.015, kTwoPi * 1e-3);
    EXPECT_NEAR(gap_min(0.9, omega), omega * std::pow(0.19, 0.75), 1e-10);
    for (double e : {0.0, 0.4, 0.95}) {
        EXPECT_NEAR(quasi_energies(4, e, omega).plus / quasi_energies(1, e, omega).plus, 2.0, 1e-12);
    }
    EXPECT_THROW(quasi_energies(1, 1.0, omega), DomainError);
}

TEST(DarkStateVector, VacuumAtZeroDrive) {
    const HilbertSpace s(2, 20);
    const ComplexVector psi = dark_state_vector(s, 0.0);
    EXPECT_NEAR(std::abs(psi(s.index(kG, 0))), 1.0, 1e-14);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-14);
}

TEST(DarkStateVector, ResidualAndPopulation) {
    const SystemParams p;
    const HilbertSpace s(2, 60);
    const OperatorSet ops = build_operators(s);
    const ComplexVector psi = dark_state_vector(s, 0.8);
    const ComplexMatrix h = build_hamiltonian_jc2(0.8, p, ops);
    EXPECT_LT((h * psi).norm(), 1e-6 * p.omega);

    // eps = 0.99 needs a larger cutoff for the default residual bound.
    const HilbertSpace big(2, 140);
    const ComplexVector d = dark_state_vector(big, 0.99);
    double pe = 0.0;
    for (int n = 0; n <= big.fock_cutoff(); ++n) pe += std::norm(d(big.index(kE, n)));
    EXPECT_NEAR(pe, 0.42946, 1e-5);
}

TEST(DarkStateVector, ResidualCheckThrowsWhenTruncated) {
    // Far too few Fock states for eps = 0.99.
    EXPECT_THROW(dark_state_vector(HilbertSpace(2, 3), 0.99, 1e-6), AccuracyError);
    EXPECT_NO_THROW(dark_state_vector(HilbertSpace(2, 3), 0.99, -1.0));
}

TEST(BrightState, EigenvectorOfHamiltonian) {
    const SystemParams p;
    const HilbertSpace s(2, 60);
    const OperatorSet ops = build_operators(s);
    const double e = 0.6;
    const ComplexMatrix h = build_hamiltonian_jc2(e, p, ops);
    for (int sign : {1, -1}) {
        const ComplexVector b = bright_state_vector(s, 1, sign, e);
        const double en = sign * quasi_energies(1, e, p.omega).plus;
        EXPECT_LT((h * b - en * b).norm(), 1e-6 * p.omega);
    }
}

TEST(PhotonNumber, DarkAndBright) {
    EXPECT_EQ(mean_photon_dark(0.0), 0.0);
    EXPECT_NEAR(mean_photon_dark(0.99), 1.30747, 1e-5);
    EXPECT_NEAR(mean_photon_dark(0.99), std::pow(std::sinh(std::log(1.0 - 0.9801) / 4.0), 2), 1e-12);
    EXPECT_NEAR(mean_photon_bright(1, 0.0), 0.5, 1e-14);
}

TEST(PhotonNumber, DarkMatchesVector) {
    const HilbertSpace s(2, 80);
    const OperatorSet ops = build_operators(s);
    const ComplexVector psi = dark_state_vector(s, 0.95);
    EXPECT_NEAR(expectation(ops.number, QuantumState::from_ket(psi)).real(), mean_photon_dark(0.95), 1e-8);
}

TEST(PeCurveFit, ExactCurveAndScaledPoint) {
    std::vector<std::pair<double, double>> pts;
    for (double e : {0.9, 0.93, 0.95, 0.97, 0.98, 0.985}) pts.emplace_back(e, oracle_pe(e));
    EXPECT_NEAR(fit_pe_curve(pts).c, 1.0, 1e-10);
    EXPECT_NEAR(fit_pe_curve({{0.99, 0.5 * oracle_pe(0.99)}}).c, 0.5, 1e-14);
    EXPECT_THROW(fit_pe_curve({}), std::invalid_argument);
}

TEST(IonTrap, Mapping) {
    EXPECT_EQ(iontrap_pe(0.0, 1.0, 2.0), 0.0);
    EXPECT_NEAR(iontrap_pe(0.495, 1.0, 1.0), 0.42946, 1e-5);
    for (double l : {0.05, 0.2, 0.4}) EXPECT_NEAR(iontrap_pe(l, 1.3, 0.9), iontrap_pe(2 * l, 1.3, 1.8), 1e-15);
}

TEST(SystemParams, Validation) {
    SystemParams p;
    EXPECT_NO_THROW(p.validate());
    p.kappa_r = -0.1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = SystemParams{};
    p.omega = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}
