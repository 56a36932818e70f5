#include "critsense/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "critsense/csv.hpp"
#include "critsense/errors.hpp"

namespace critsense {

CrosstalkMatrix::CrosstalkMatrix(Complex m12, Complex m21) : m12_(m12), m21_(m21) {
    if (!(std::abs(m12) < 1.0) || !(std::abs(m21) < 1.0)) {
        throw std::invalid_argument("crosstalk amplitudes must satisfy |A| < 1");
    }
}

CrosstalkMatrix CrosstalkMatrix::from_polar(double a12, double phi12, double a21, double phi21) {
    return CrosstalkMatrix(std::polar(a12, phi12), std::polar(a21, phi21));
}

Eigen::Matrix2cd CrosstalkMatrix::matrix() const {
    Eigen::Matrix2cd m;
    m << 1.0, m12_, m21_, 1.0;
    return m;
}

DrivePair crosstalk_apply(const CrosstalkMatrix& m, const DrivePair& v) {
    return {v.first + m.m12() * v.second, m.m21() * v.first + v.second};
}

DrivePair crosstalk_correct(const CrosstalkMatrix& m, const DrivePair& desired) {
    const Complex det = m.determinant();
    if (!(std::abs(det) > 1e-9)) {
        throw SingularMatrixError("crosstalk matrix is singular (|det| = " + std::to_string(std::abs(det)) + ")");
    }
    return {(desired.first - m.m12() * desired.second) / det, (desired.second - m.m21() * desired.first) / det};
}

std::vector<double> simulate_driven_qubit(Complex drive, double delta, const std::vector<double>& tau) {
    // H = (W/2) n.sigma with W = sqrt(delta^2 + |drive|^2).
    const double w = std::hypot(delta, std::abs(drive));
    std::vector<double> pe(tau.size(), 0.0);
    if (w == 0.0) return pe;
    const Complex n_plus = drive / w;  // n_x + i n_y
    const double nz = delta / w;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const double c = std::cos(0.5 * w * tau[i]);
        const double s = std::sin(0.5 * w * tau[i]);
        Eigen::Matrix2cd u;
        const Complex mi(0.0, -1.0);
        u << c + mi * s * nz, mi * s * std::conj(n_plus), mi * s * n_plus, c - mi * s * nz;
        // |g> is the second basis vector, |e> the first.
        pe[i] = std::norm(u(0, 1));
    }
    return pe;
}

std::vector<SweepTrace> simulate_frequency_sweep(const CrosstalkTruth& truth, const std::vector<double>& offsets,
                                                 const std::vector<double>& tau) {
    std::vector<SweepTrace> out;
    const Complex drive = std::polar(truth.amplitude, truth.phase);
    for (double off : offsets) out.push_back({off, tau, simulate_driven_qubit(drive, off, tau)});
    return out;
}

std::vector<SweepTrace> simulate_phase_sweep(const CrosstalkTruth& truth, double cancel_amplitude,
                                             const std::vector<double>& phases, const std::vector<double>& tau) {
    std::vector<SweepTrace> out;
    const Complex crosstalk = std::polar(truth.amplitude, truth.phase);
    for (double th : phases) {
        out.push_back({th, tau, simulate_driven_qubit(crosstalk + std::polar(cancel_amplitude, th), 0.0, tau)});
    }
    return out;
}

namespace {

struct TraceResidual {
    const std::vector<double>& tau;
    const std::vector<double>& pe;

    // Best contrast and squared residual at frequency w.
    std::pair<double, double> operator()(double w) const {
        double fp = 0.0, ff = 0.0;
        for (std::size_t i = 0; i < tau.size(); ++i) {
            const double f = 0.5 * (1.0 - std::cos(w * tau[i]));
            fp += f * pe[i];
            ff += f * f;
        }
        const double c = ff > 0.0 ? fp / ff : 0.0;
        double r = 0.0;
        for (std::size_t i = 0; i < tau.size(); ++i) {
            const double d = pe[i] - c * 0.5 * (1.0 - std::cos(w * tau[i]));
            r += d * d;
        }
        return {c, r};
    }
};

}  // namespace

RabiFit fit_rabi_trace(const std::vector<double>& tau, const std::vector<double>& pe) {
    if (tau.size() != pe.size() || tau.size() < 4) {
        throw std::invalid_argument("fit_rabi_trace: need at least 4 (tau, pe) samples of equal length");
    }
    RabiFit fit;
    if (*std::max_element(pe.begin(), pe.end()) <= kCrosstalkDetectionFloor) return fit;

    double dt_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < tau.size(); ++i) {
        if (!(tau[i] > tau[i - 1])) throw std::invalid_argument("fit_rabi_trace: tau must be strictly increasing");
        dt_min = std::min(dt_min, tau[i] - tau[i - 1]);
    }
    const double span = tau.back() - tau.front();
    const double w_max = kPi / dt_min;
    const int n_grid = std::max(200, static_cast<int>(40.0 * w_max * span / kTwoPi));
    const TraceResidual res{tau, pe};

    int best = 1;
    double best_r = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= n_grid; ++i) {
        const double r = res(w_max * i / n_grid).second;
        if (r < best_r) {
            best_r = r;
            best = i;
        }
    }
    // Golden-section refinement inside the neighbouring grid cells.
    double lo = w_max * (best - 1) / n_grid;
    double hi = w_max * std::min(best + 1, n_grid) / n_grid;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = res(x1).second, f2 = res(x2).second;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = res(x1).second;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = res(x2).second;
        }
    }
    fit.frequency = 0.5 * (lo + hi);
    const auto [c, r] = res(fit.frequency);
    fit.contrast = c;
    fit.rms = std::sqrt(r / static_cast<double>(tau.size()));
    return fit;
}

CrosstalkEstimate extract_crosstalk_amplitude(const std::vector<SweepTrace>& frequency_sweep) {
    if (frequency_sweep.size() < 3) throw std::invalid_argument("extract_crosstalk: need at least 3 frequency offsets");
    CrosstalkEstimate est;
    est.phase = std::numeric_limits<double>::quiet_NaN();

    double peak = 0.0;
    for (const auto& t : frequency_sweep) peak = std::max(peak, *std::max_element(t.pe.begin(), t.pe.end()));
    if (peak <= kCrosstalkDetectionFloor) return est;  // below the detection floor
    est.detected = true;

    std::vector<double> w;
    for (const auto& t : frequency_sweep) w.push_back(fit_rabi_trace(t.tau, t.pe).frequency);
    const std::size_t imin = static_cast<std::size_t>(std::min_element(w.begin(), w.end()) - w.begin());
    if (imin == 0 || imin + 1 == w.size()) {
        throw std::runtime_error("extract_crosstalk: no minimum of the Rabi frequency inside the sweep range");
    }
    est.slowest_frequency = w[imin];
    est.slowest_offset = frequency_sweep[imin].parameter;

    // W^2 = a d^2 + b d + c around the slowest trace; A^2 = c - b^2 / (4 a).
    const std::size_t lo = imin >= 2 ? imin - 2 : 0;
    const std::size_t hi = std::min(w.size() - 1, imin + 2);
    Eigen::MatrixXd m(hi - lo + 1, 3);
    Eigen::VectorXd y(hi - lo + 1);
    for (std::size_t i = lo; i <= hi; ++i) {
        const double d = frequency_sweep[i].parameter - est.slowest_offset;
        m.row(static_cast<Eigen::Index>(i - lo)) << d * d, d, 1.0;
        y(static_cast<Eigen::Index>(i - lo)) = w[i] * w[i];
    }
    const Eigen::Vector3d q = m.colPivHouseholderQr().solve(y);
    const double a2 = q(0) > 0.0 ? q(2) - q(1) * q(1) / (4.0 * q(0)) : w[imin] * w[imin];
    est.amplitude = std::sqrt(std::max(a2, 0.0));
    return est;
}

double extract_crosstalk_phase(const std::vector<SweepTrace>& phase_sweep) {
    const std::size_t n = phase_sweep.size();
    if (n < 3) throw std::invalid_argument("extract_crosstalk_phase: need at least 3 phases");
    std::vector<double> exc;
    for (const auto& t : phase_sweep) exc.push_back(*std::max_element(t.pe.begin(), t.pe.end()));
    const std::size_t imin = static_cast<std::size_t>(std::min_element(exc.begin(), exc.end()) - exc.begin());

    const double step = phase_sweep[1].parameter - phase_sweep[0].parameter;
    const bool full_circle =
        std::abs(phase_sweep.back().parameter - phase_sweep.front().parameter + step - kTwoPi) < 1e-9 * kTwoPi;
    std::size_t il = imin, ir = imin;
    double xl, xr;
    const double x0 = phase_sweep[imin].parameter;
    if (imin == 0 || imin + 1 == n) {
        if (!full_circle) {
            throw std::runtime_error("extract_crosstalk_phase: least excitation at the edge of the phase sweep");
        }
    }
    il = imin == 0 ? n - 1 : imin - 1;
    ir = imin + 1 == n ? 0 : imin + 1;
    xl = phase_sweep[il].parameter + (imin == 0 ? -kTwoPi : 0.0);
    xr = phase_sweep[ir].parameter + (imin + 1 == n ? kTwoPi : 0.0);

    // Vertex of the parabola through the three points.
    const double yl = exc[il], y0 = exc[imin], yr = exc[ir];
    const double num = (x0 - xl) * (x0 - xl) * (y0 - yr) - (x0 - xr) * (x0 - xr) * (y0 - yl);
    const double den = (x0 - xl) * (y0 - yr) - (x0 - xr) * (y0 - yl);
    const double cancel = den != 0.0 ? x0 - 0.5 * num / den : x0;
    double phase = std::fmod(cancel - kPi, kTwoPi);
    if (phase < 0.0) phase += kTwoPi;
    return phase;
}

CrosstalkEstimate extract_crosstalk(const std::vector<SweepTrace>& frequency_sweep,
                                    const std::vector<SweepTrace>& phase_sweep) {
    CrosstalkEstimate est = extract_crosstalk_amplitude(frequency_sweep);
    if (est.detected) est.phase = extract_crosstalk_phase(phase_sweep);
    return est;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepTrace>& sweep, bool phase_sweep) {
    CsvWriter csv(os);
    csv.header({phase_sweep ? "phase_rad" : "offset_rad_per_us", "tau_us", "pe"});
    for (const auto& t : sweep) {
        for (std::size_t i = 0; i < t.tau.size(); ++i) csv.row({t.parameter, t.tau[i], t.pe[i]});
    }
}

namespace {

std::array<Eigen::Matrix2cd, 4> pauli_basis() {
    const Complex i(0.0, 1.0);
    std::array<Eigen::Matrix2cd, 4> p;
    p[0] << 1, 0, 0, 1;
    p[1] << 0, 1, 1, 0;
    p[2] << 0, -i, i, 0;
    p[3] << 1, 0, 0, -1;
    return p;
}

}  // namespace

Eigen::Matrix2cd rotation(double phi, double theta) {
    const auto p = pauli_basis();
    const Eigen::Matrix2cd n = std::cos(theta) * p[1] + std::sin(theta) * p[2];
    // n.sigma squares to the identity.
    return std::cos(0.5 * phi) * p[0] - Complex(0.0, 1.0) * std::sin(0.5 * phi) * n;
}

Eigen::Matrix4cd process_chi_matrix(const Eigen::Matrix2cd& u) {
    const auto p = pauli_basis();
    // E(P_j) = sum_k lambda_jk P_k and P_m P_j P_n = sum_k beta(mn, jk) P_k.
    Eigen::Matrix<Complex, 16, 16> beta;
    Eigen::Matrix<Complex, 16, 1> lambda;
    for (int j = 0; j < 4; ++j) {
        const Eigen::Matrix2cd out = u * p[j] * u.adjoint();
        for (int k = 0; k < 4; ++k) {
            lambda(4 * j + k) = 0.5 * (p[k] * out).trace();
            for (int m = 0; m < 4; ++m) {
                for (int n = 0; n < 4; ++n) {
                    beta(4 * j + k, 4 * m + n) = 0.5 * (p[k] * p[m] * p[j] * p[n]).trace();
                }
            }
        }
    }
    const Eigen::Matrix<Complex, 16, 1> chi = beta.fullPivLu().solve(lambda);
    Eigen::Matrix4cd out;
    for (int m = 0; m < 4; ++m) {
        for (int n = 0; n < 4; ++n) out(m, n) = chi(4 * m + n);
    }
    return out;
}

double process_fidelity(const Eigen::Matrix4cd& chi_a, const Eigen::Matrix4cd& chi_b) {
    return (chi_a * chi_b).trace().real();
}

double gate_infidelity(double phi, double delta_eps, double theta) {
    if (!(phi >= 0.0 && phi <= kTwoPi)) throw DomainError("gate_infidelity: phi must lie in [0, 2 pi]");
    if (!(std::abs(delta_eps) < 1.0)) throw DomainError("gate_infidelity: |delta_eps| must be below 1");
    const Eigen::Matrix4cd chi_ideal = process_chi_matrix(rotation(phi, theta));
    const Eigen::Matrix4cd chi_err = process_chi_matrix(rotation(phi * (1.0 + delta_eps), theta));
    return 1.0 - process_fidelity(chi_ideal, chi_err);
}

}  // namespace critsense
