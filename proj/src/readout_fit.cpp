#include "critsense/readout_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

#include "critsense/csv.hpp"
#include "critsense/errors.hpp"
#include "critsense/quantum_core.hpp"

namespace critsense {

void PhotonDistribution::validate() const {
    if (probs.empty()) throw std::invalid_argument("photon distribution is empty");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("photon distribution has a negative or NaN entry");
        sum += p;
    }
    if (sum > 1.0 + 1e-9) throw std::invalid_argument("photon distribution sums to " + std::to_string(sum));
}

void RabiSignal::validate() const {
    if (tau.size() != pe.size()) throw std::invalid_argument("Rabi signal: tau and pe differ in length");
    for (std::size_t i = 0; i < tau.size(); ++i) {
        if (i > 0 && !(tau[i] > tau[i - 1])) throw std::invalid_argument("Rabi signal: tau must be strictly increasing");
        if (!(pe[i] >= 0.0 && pe[i] <= 1.0)) throw std::invalid_argument("Rabi signal: pe outside [0, 1]");
    }
}

double decay_rate(int n, double l, double kappa_fit, DecayModel model) {
    if (kappa_fit < 0.0) throw std::invalid_argument("kappa_fit must be non-negative");
    const double nl = std::pow(static_cast<double>(n), l);
    if (model == DecayModel::product) return nl * kappa_fit;
    if (n == 0) return 0.0;
    if (kappa_fit == 0.0) throw std::invalid_argument("reciprocal decay model needs kappa_fit > 0");
    return nl / kappa_fit;
}

Eigen::MatrixXd rabi_design_matrix(const std::vector<double>& tau, double omega_a, double kappa_fit, double l,
                                   double pg0, int n_max, DecayModel model) {
    if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
    Eigen::MatrixXd a(tau.size(), n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        const double kn = decay_rate(n, l, kappa_fit, model);
        const double w = 2.0 * std::sqrt(static_cast<double>(n)) * omega_a;
        for (std::size_t i = 0; i < tau.size(); ++i) {
            a(static_cast<Eigen::Index>(i), n) = pg0 * std::exp(-kn * tau[i]) * std::cos(w * tau[i]);
        }
    }
    return a;
}

RabiSignal rabi_forward(const PhotonDistribution& dist, double omega_a, double kappa_fit, double l, double pg0,
                        const std::vector<double>& tau, DecayModel model) {
    dist.validate();
    if (!(omega_a > 0.0)) throw std::invalid_argument("rabi_forward: omega_a must be positive");
    if (kappa_fit < 0.0) throw std::invalid_argument("rabi_forward: kappa_fit must be non-negative");
    if (!(pg0 >= 0.0 && pg0 <= 1.0)) throw std::invalid_argument("rabi_forward: pg0 must lie in [0, 1]");

    const Eigen::MatrixXd a = rabi_design_matrix(tau, omega_a, kappa_fit, l, pg0, dist.n_max(), model);
    const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(dist.probs.data(), dist.probs.size());
    const Eigen::VectorXd y = a * p;

    RabiSignal s;
    s.tau = tau;
    s.omega_a = omega_a;
    s.pg0 = pg0;
    s.pe.resize(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) {
        s.pe[i] = std::clamp(0.5 * (1.0 - y(static_cast<Eigen::Index>(i))), 0.0, 1.0);
    }
    s.validate();
    return s;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations) {
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    if (b.size() != m) throw DimensionError("nnls: right-hand side length mismatch");
    if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);

    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().colwise().sum().maxCoeff() *
                       static_cast<double>(std::max(m, n));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(n, false);
    Eigen::VectorXd w = a.transpose() * (b - a * x);

    auto solve_passive = [&]() {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (passive[j]) idx.push_back(j);
        }
        Eigen::MatrixXd ap(m, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
        const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
        for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(static_cast<Eigen::Index>(c));
        return z;
    };

    for (int outer = 0; outer < max_iterations; ++outer) {
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[j] && w(j) > best_w) {
                best_w = w(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[best] = true;

        Eigen::VectorXd z = solve_passive();
        for (int inner = 0; inner < max_iterations; ++inner) {
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[j] && z(j) <= 0.0) feasible = false;
            }
            if (feasible) break;
            double alpha = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[j] && z(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
            }
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[j] && x(j) <= tol) {
                    passive[j] = false;
                    x(j) = 0.0;
                }
            }
            z = solve_passive();
        }
        x = z;
        w = a.transpose() * (b - a * x);
    }
    return x;
}

PhotonFit fit_photon_distribution(const RabiSignal& signal, int n_max, double l, double kappa_fit,
                                  DecayModel model) {
    signal.validate();
    if (n_max < 0) throw std::invalid_argument("fit_photon_distribution: n_max must be non-negative");
    if (!(signal.omega_a > 0.0)) throw std::invalid_argument("fit_photon_distribution: omega_a must be positive");
    const std::size_t needed = 3 * static_cast<std::size_t>(n_max + 1);
    if (signal.tau.size() < needed) {
        throw std::invalid_argument("fit_photon_distribution: " + std::to_string(signal.tau.size()) +
                                    " samples, need at least " + std::to_string(needed));
    }

    const Eigen::MatrixXd a = rabi_design_matrix(signal.tau, signal.omega_a, kappa_fit, l, signal.pg0, n_max, model);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();

    // Two periods of the slowest oscillating component, cos(2 omega_a tau).
    const double span = signal.tau.back() - signal.tau.front();
    const double min_span = n_max >= 1 ? 2.0 * kPi / signal.omega_a : 0.0;
    if (span < min_span || !(cond <= kMaxConditionNumber)) {
        std::ostringstream os;
        os << "fit_photon_distribution: design matrix is ill-conditioned (condition number " << cond
           << ", tau span " << span << " us, need >= " << min_span << " us)";
        throw ConditioningError(os.str(), cond);
    }

    Eigen::VectorXd y(signal.pe.size());
    for (std::size_t i = 0; i < signal.pe.size(); ++i) y(static_cast<Eigen::Index>(i)) = 1.0 - 2.0 * signal.pe[i];
    const Eigen::VectorXd p = nnls(a, y);

    PhotonFit fit;
    fit.condition_number = cond;
    fit.residual_norm = (a * p - y).norm();
    const double sum = p.sum();
    if (!(sum > 0.0)) throw ConditioningError("fit_photon_distribution: fitted distribution is identically zero", cond);
    fit.dist.probs.resize(p.size());
    for (Eigen::Index n = 0; n < p.size(); ++n) fit.dist.probs[n] = p(n) / sum;
    return fit;
}

double total_variation(const PhotonDistribution& p, const PhotonDistribution& q) {
    const std::size_t n = std::max(p.probs.size(), q.probs.size());
    double tv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = i < p.probs.size() ? p.probs[i] : 0.0;
        const double b = i < q.probs.size() ? q.probs[i] : 0.0;
        tv += std::abs(a - b);
    }
    return 0.5 * tv;
}

PhotonDistribution coherent_distribution(double nbar, int n_max) {
    if (nbar < 0.0 || n_max < 0) throw std::invalid_argument("coherent_distribution: invalid arguments");
    PhotonDistribution d;
    double term = std::exp(-nbar);
    double sum = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) term *= nbar / n;
        d.probs.push_back(term);
        sum += term;
    }
    for (double& p : d.probs) p /= sum;
    return d;
}

DriveCalibration calibrate_drive_strength(const std::vector<std::pair<double, double>>& points, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("calibrate_drive_strength: tau must be positive");
    if (points.size() < 2) throw std::invalid_argument("calibrate_drive_strength: need at least 2 points");
    bool distinct = false;
    for (const auto& p : points) {
        if (p.first != points.front().first) distinct = true;
    }
    if (!distinct) throw std::invalid_argument("calibrate_drive_strength: all pulse amplitudes are identical");

    DriveCalibration cal;
    double num = 0.0;
    double den = 0.0;
    for (const auto& [xi, alpha] : points) {
        const double g = std::abs(alpha) / tau;
        cal.g.push_back(g);
        num += xi * g;
        den += xi * xi;
    }
    cal.slope = num / den;
    for (std::size_t i = 0; i < points.size(); ++i) cal.residuals.push_back(cal.g[i] - cal.slope * points[i].first);
    return cal;
}

void write_rabi_signal_csv(std::ostream& os, const RabiSignal& signal) {
    CsvWriter csv(os);
    csv.comment("omega_a_rad_per_us", signal.omega_a);
    csv.comment("pg0", signal.pg0);
    csv.header({"tau_us", "pe"});
    for (std::size_t i = 0; i < signal.tau.size(); ++i) csv.row({signal.tau[i], signal.pe[i]});
}

void write_photon_distribution_csv(std::ostream& os, const PhotonDistribution& dist) {
    CsvWriter csv(os);
    csv.header({"n", "p"});
    for (std::size_t n = 0; n < dist.probs.size(); ++n) csv.row({static_cast<double>(n), dist.probs[n]});
}

}  // namespace critsense
