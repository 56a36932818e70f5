#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace critsense {

struct PhotonDistribution {
    std::vector<double> probs;  // P_0 .. P_{n_max}

    int n_max() const { return static_cast<int>(probs.size()) - 1; }
    // Throws std::invalid_argument on negative entries or a sum above 1 + 1e-9.
    void validate() const;
};

struct RabiSignal {
    std::vector<double> tau;  // us, strictly increasing
    std::vector<double> pe;
    double omega_a = 0.0;     // rad/us
    double pg0 = 1.0;

    void validate() const;
};

enum class DecayModel {
    product,     // kappa_n = n^l kappa_fit
    reciprocal,  // kappa_n = n^l / kappa_fit, the literal printed form
};

double decay_rate(int n, double l, double kappa_fit, DecayModel model = DecayModel::product);

// P_e(tau) = [1 - pg0 sum_n P_n exp(-kappa_n tau) cos(2 sqrt(n) omega_a tau)] / 2.
RabiSignal rabi_forward(const PhotonDistribution& dist, double omega_a, double kappa_fit, double l, double pg0,
                        const std::vector<double>& tau, DecayModel model = DecayModel::product);

// Columns pg0 exp(-kappa_n tau_i) cos(2 sqrt(n) omega_a tau_i), n = 0..n_max,
// so that 1 - 2 P_e = A P.
Eigen::MatrixXd rabi_design_matrix(const std::vector<double>& tau, double omega_a, double kappa_fit, double l,
                                   double pg0, int n_max, DecayModel model = DecayModel::product);

// min ||A x - b|| subject to x >= 0 (Lawson-Hanson active set).
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations = 0);

struct PhotonFit {
    PhotonDistribution dist;
    double residual_norm = 0.0;  // ||A P - (1 - 2 P_e)|| before renormalization
    double condition_number = 0.0;
};

inline constexpr double kMaxConditionNumber = 1e8;

// Non-negative least squares for P_n with omega_a and kappa_fit known, then
// renormalized to unit sum. Throws std::invalid_argument when there are fewer
// than 3 (n_max + 1) samples and ConditioningError when the tau grid is too
// short or the design matrix is ill-conditioned.
PhotonFit fit_photon_distribution(const RabiSignal& signal, int n_max, double l, double kappa_fit,
                                  DecayModel model = DecayModel::product);

double total_variation(const PhotonDistribution& p, const PhotonDistribution& q);

// Truncated coherent distribution with mean photon number nbar, renormalized.
PhotonDistribution coherent_distribution(double nbar, int n_max);

struct DriveCalibration {
    double slope = 0.0;              // G per unit amplitude, 1/us
    std::vector<double> g;           // |alpha_i| / tau
    std::vector<double> residuals;   // g_i - slope * xi_i
};

// Points are (pulse amplitude xi, measured |alpha|). G_i = |alpha_i| / tau and
// G = slope * xi is fitted through the origin.
DriveCalibration calibrate_drive_strength(const std::vector<std::pair<double, double>>& points, double tau);

void write_rabi_signal_csv(std::ostream& os, const RabiSignal& signal);
void write_photon_distribution_csv(std::ostream& os, const PhotonDistribution& dist);

}  // namespace critsense
