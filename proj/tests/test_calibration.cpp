#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "critsense/calibration.hpp"
#include "critsense/errors.hpp"

using namespace critsense;

namespace {

std::vector<double> grid(double t_max, int n, bool endpoint = true) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(t_max * i / (endpoint ? n - 1 : n));
    return t;
}

Eigen::Matrix2cd pauli(int k) {
    Eigen::Matrix2cd m;
    switch (k) {
        case 0: m << 1, 0, 0, 1; break;
        case 1: m << 0, 1, 1, 0; break;
        case 2: m << 0, Complex(0, -1), Complex(0, 1), 0; break;
        default: m << 1, 0, 0, -1; break;
    }
    return m;
}

// Process fidelity through the Choi states: |tr(U_a^dag U_b)|^2 / 4.
double choi_fidelity(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Vector4cd omega = Eigen::Vector4cd::Zero();
    omega(0) = omega(3) = 1.0 / std::sqrt(2.0);
    auto choi = [&](const Eigen::Matrix2cd& u) {
        Eigen::Matrix4cd big = Eigen::Matrix4cd::Zero();
        big.topLeftCorner(2, 2) = u;
        big.bottomRightCorner(2, 2) = u;
        // (I (x) U) on the ordering |i j> = 2 i + j acts blockwise.
        return Eigen::Vector4cd(big * omega);
    };
    return std::norm(choi(a).dot(choi(b)));
}

}  // namespace

TEST(Crosstalk, IdentityAndWorkedExample) {
    const DrivePair v{1.0, 1.0};
    const CrosstalkMatrix id;
    EXPECT_EQ(crosstalk_apply(id, v).first, Complex(1.0));
    EXPECT_EQ(crosstalk_correct(id, v).second, Complex(1.0));

    const CrosstalkMatrix m = CrosstalkMatrix::from_polar(0.1, kPi, 0.0, 0.0);
    const DrivePair applied = crosstalk_apply(m, v);
    EXPECT_NEAR(std::abs(applied.first - 0.9), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(applied.second - 1.0), 0.0, 1e-15);
    const DrivePair corr = crosstalk_correct(m, v);
    EXPECT_NEAR(std::abs(corr.first - 1.1), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(corr.second - 1.0), 0.0, 1e-15);
    const DrivePair back = crosstalk_apply(m, corr);
    EXPECT_NEAR(std::abs(back.first - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(back.second - 1.0), 0.0, 1e-15);
}

TEST(Crosstalk, Linearity) {
    const CrosstalkMatrix m(Complex(0.1, 0.05), Complex(-0.02, 0.2));
    const DrivePair v{Complex(0.3, -1.0), Complex(2.0, 0.5)};
    const Complex a(1.5, -0.7);
    const DrivePair lhs = crosstalk_apply(m, {a * v.first, a * v.second});
    const DrivePair rhs = crosstalk_apply(m, v);
    EXPECT_NEAR(std::abs(lhs.first - a * rhs.first), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(lhs.second - a * rhs.second), 0.0, 1e-14);
}

TEST(Crosstalk, RandomRoundTrip) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> amp(0.0, 0.3), ph(0.0, kTwoPi), comp(-2.0, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const CrosstalkMatrix m = CrosstalkMatrix::from_polar(amp(rng), ph(rng), amp(rng), ph(rng));
        const DrivePair v{Complex(comp(rng), comp(rng)), Complex(comp(rng), comp(rng))};
        const DrivePair r = crosstalk_apply(m, crosstalk_correct(m, v));
        worst = std::max({worst, std::abs(r.first - v.first), std::abs(r.second - v.second)});
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Crosstalk, Validation) {
    EXPECT_THROW(CrosstalkMatrix(Complex(1.0, 0.0), 0.0), std::invalid_argument);
    const CrosstalkMatrix near(Complex(0.9999999999, 0.0), Complex(0.9999999999, 0.0));
    EXPECT_THROW(crosstalk_correct(near, {1.0, 1.0}), SingularMatrixError);
}

TEST(CrosstalkExtraction, OnResonanceFrequency) {
    const CrosstalkTruth truth{kTwoPi * 0.5, 1.0};
    const auto tau = grid(4.0, 401);
    const auto sweep = simulate_frequency_sweep(truth, {0.0}, tau);
    const RabiFit f = fit_rabi_trace(tau, sweep[0].pe);
    EXPECT_LT(std::abs(f.frequency - kTwoPi * 0.5) / (kTwoPi * 0.5), 0.02);
}

TEST(CrosstalkExtraction, OppositePhaseCancels) {
    const CrosstalkTruth truth{kTwoPi * 0.5, 1.0};
    const auto tau = grid(4.0, 401);
    const auto sweep = simulate_phase_sweep(truth, truth.amplitude, {truth.phase + kPi}, tau);
    for (double p : sweep[0].pe) EXPECT_LT(p, 1e-4);
}

TEST(CrosstalkExtraction, FullPipeline) {
    const CrosstalkTruth truth{kTwoPi * 0.5, 1.0};
    const auto tau = grid(4.0, 401);
    std::vector<double> offsets;
    for (int i = -10; i <= 10; ++i) offsets.push_back(kTwoPi * 0.1 * i);
    const auto freq = simulate_frequency_sweep(truth, offsets, tau);
    const auto phase = simulate_phase_sweep(truth, truth.amplitude, grid(kTwoPi, 72, false), tau);
    const CrosstalkEstimate est = extract_crosstalk(freq, phase);
    EXPECT_TRUE(est.detected);
    EXPECT_LT(std::abs(est.amplitude - truth.amplitude) / truth.amplitude, 0.02);
    EXPECT_LT(std::abs(std::remainder(est.phase - truth.phase, kTwoPi)), 0.05);
}

TEST(CrosstalkExtraction, ZeroCrosstalkIsFlagged) {
    const auto tau = grid(4.0, 101);
    const auto freq = simulate_frequency_sweep(CrosstalkTruth{}, {-1.0, 0.0, 1.0}, tau);
    const CrosstalkEstimate est = extract_crosstalk(freq, {});
    EXPECT_FALSE(est.detected);
    EXPECT_LT(est.amplitude, kCrosstalkDetectionFloor);
    EXPECT_TRUE(std::isnan(est.phase));
}

TEST(CrosstalkExtraction, SweepCsvColumns) {
    const auto tau = grid(1.0, 3);
    const auto freq = simulate_frequency_sweep(CrosstalkTruth{1.0, 0.0}, {0.0}, tau);
    std::ostringstream os;
    write_sweep_csv(os, freq);
    EXPECT_EQ(os.str().substr(0, 25), "offset_rad_per_us,tau_us,");
}

TEST(GateInfidelity, ZeroErrorAndOracle) {
    EXPECT_NEAR(gate_infidelity(kPi, 0.0), 0.0, 1e-15);
    const double phi = kPi, de = 0.01;
    const double oracle = 1.0 - choi_fidelity(rotation(phi, 0.0), rotation(phi * (1 + de), 0.0));
    EXPECT_NEAR(gate_infidelity(phi, de), oracle, 1e-12);
    EXPECT_NEAR(oracle, std::pow(std::sin(phi * de / 2.0), 2), 1e-15);
    EXPECT_NEAR(gate_infidelity(phi, de), 2.4670e-4, 1e-7);
}

TEST(GateInfidelity, AxisIndependenceAndDomain) {
    for (double phi : {0.3, kPi / 2, 2.0, kTwoPi}) {
        EXPECT_NEAR(gate_infidelity(phi, 0.05, 0.0), gate_infidelity(phi, 0.05, kPi / 2), 1e-12);
    }
    EXPECT_THROW(gate_infidelity(-0.1, 0.01), DomainError);
    EXPECT_THROW(gate_infidelity(1.0, 1.0), DomainError);
}

TEST(ProcessChi, IdentityAndPauliBasis) {
    const Eigen::Matrix4cd chi = process_chi_matrix(Eigen::Matrix2cd::Identity());
    EXPECT_NEAR(std::abs(chi(0, 0) - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(chi.trace() - 1.0), 0.0, 1e-12);
    for (int k = 1; k < 4; ++k) {
        const Eigen::Matrix4cd c = process_chi_matrix(pauli(k));
        EXPECT_NEAR(std::abs(c(k, k) - 1.0), 0.0, 1e-12);
        EXPECT_NEAR(process_fidelity(c, chi), 0.0, 1e-12);
    }
}
