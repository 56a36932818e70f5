#include "critsense/jcm_analytics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "critsense/errors.hpp"

namespace critsense {

namespace {

void require_below_critical(double epsilon, const char* what) {
    if (!(std::abs(epsilon) < 1.0)) {
        throw DomainError(std::string(what) + ": epsilon must satisfy |eps| < 1, got " +
                          std::to_string(epsilon));
    }
}

// 1 - sqrt(1 - eps^2) without cancellation at small eps.
double one_minus_sqrt_a(double epsilon) {
    const double e2 = epsilon * epsilon;
    return e2 / (1.0 + std::sqrt(1.0 - e2));
}

}  // namespace

void SystemParams::validate() const {
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    if (k < 0.0) throw std::invalid_argument("k must be non-negative");
    if (kappa_q < 0.0) throw std::invalid_argument("kappa_q must be non-negative");
    if (kappa_r < 0.0) throw std::invalid_argument("kappa_r must be non-negative");
    if (gamma_q < 0.0) throw std::invalid_argument("gamma_q must be non-negative");
    if (chi < 0.0) throw std::invalid_argument("chi must be non-negative");
}

double ramp_epsilon(double t, double k) {
    if (t < 0.0) throw DomainError("ramp_epsilon: t must be non-negative");
    if (k < 0.0) throw DomainError("ramp_epsilon: k must be non-negative");
    const double kt = k * t;
    return kt / std::sqrt(1.0 + kt * kt);
}

double ramp_time(double epsilon, double k) {
    if (!(k > 0.0)) throw DomainError("ramp_time: k must be positive");
    if (epsilon < 0.0) throw DomainError("ramp_time: epsilon must be non-negative");
    if (epsilon >= 1.0) {
        throw DomainError("ramp_time: target epsilon " + std::to_string(epsilon) +
                          " is unreachable (the ramp only approaches 1)");
    }
    return epsilon / (k * std::sqrt(1.0 - epsilon * epsilon));
}

double dark_state_pe(double epsilon) {
    if (epsilon < 0.0 || epsilon > 1.0) {
        throw DomainError("dark_state_pe: epsilon must lie in [0, 1]");
    }
    return 0.5 * one_minus_sqrt_a(epsilon);
}

double dark_state_pe_derivative(double epsilon) {
    if (epsilon < 0.0) throw DomainError("dark_state_pe_derivative: epsilon must be non-negative");
    require_below_critical(epsilon, "dark_state_pe_derivative");
    return epsilon / (2.0 * std::sqrt(1.0 - epsilon * epsilon));
}

double delta_pe(double epsilon) {
    const double pe = dark_state_pe(epsilon);
    return std::sqrt(pe * (1.0 - pe));
}

double snr(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw DomainError("snr: degenerate point, epsilon must lie in (0, 1)");
    }
    return dark_state_pe_derivative(epsilon) / delta_pe(epsilon);
}

double fisher_two_outcome(double pe, double dpe) {
    if (!(pe > 0.0 && pe < 1.0)) {
        throw DomainError("fisher_two_outcome: P_e must lie in (0, 1)");
    }
    return (1.0 / pe + 1.0 / (1.0 - pe)) * dpe * dpe;
}

double fisher_classical(double epsilon) {
    if (epsilon < 0.0) throw DomainError("fisher_classical: epsilon must be non-negative");
    require_below_critical(epsilon, "fisher_classical");
    if (epsilon > 0.0) {
        return fisher_two_outcome(dark_state_pe(epsilon), dark_state_pe_derivative(epsilon));
    }
    // Same formula with P_e and dP_e/deps scaled by eps^2 and eps, finite at eps = 0.
    const double sqrt_a = std::sqrt(1.0 - epsilon * epsilon);
    const double pe_over_e2 = 0.5 / (1.0 + sqrt_a);
    const double dpe_over_e = 0.5 / sqrt_a;
    const double pe = dark_state_pe(epsilon);
    return dpe_over_e * dpe_over_e * (1.0 / pe_over_e2 + epsilon * epsilon / (1.0 - pe));
}

ComplexVector qubit_dark_state(double epsilon) {
    require_below_critical(epsilon, "qubit_dark_state");
    const double sqrt_a = std::sqrt(1.0 - epsilon * epsilon);
    const double c_plus = std::sqrt((1.0 + sqrt_a) / 2.0);
    // c- is odd in eps so the state is smooth through eps = 0.
    const double c_minus = std::copysign(std::sqrt(one_minus_sqrt_a(epsilon) / 2.0), epsilon);
    ComplexVector phi(2);
    phi << c_plus, -c_minus;
    return phi;
}

ComplexVector qubit_bright_part(double epsilon) {
    const ComplexVector dark = qubit_dark_state(epsilon);
    ComplexVector phi(2);
    phi << dark(1), dark(0);  // c+|e> - c-|g>
    return phi;
}

double fisher_quantum_fd(double epsilon, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fisher_quantum_fd: step must be positive");
    if (epsilon < 0.0) throw DomainError("fisher_quantum_fd: epsilon must be non-negative");
    require_below_critical(epsilon, "fisher_quantum_fd");
    require_below_critical(epsilon + h, "fisher_quantum_fd (epsilon + h)");
    const ComplexVector phi = qubit_dark_state(epsilon);
    const ComplexVector dphi = (qubit_dark_state(epsilon + h) - qubit_dark_state(epsilon - h)) / (2.0 * h);
    return 4.0 * (dphi.squaredNorm() - std::norm(phi.dot(dphi)));
}

double fisher_of_time(double t, double k) {
    return fisher_classical(ramp_epsilon(t, k));
}

QuasiEnergyPair quasi_energies(int n, double epsilon, double omega) {
    if (n < 1) throw std::invalid_argument("quasi_energies: n must be >= 1");
    if (!(std::abs(epsilon) < 1.0)) {
        throw DomainError("quasi_energies: no well-defined quasi-energy spectrum for |eps| >= 1");
    }
    const double a = 1.0 - epsilon * epsilon;
    const double e = std::sqrt(static_cast<double>(n)) * omega * std::pow(a, 0.75);
    return {e, -e};
}

double gap_min(double epsilon, double omega) { return quasi_energies(1, epsilon, omega).plus; }

double squeeze_parameter(double epsilon) {
    require_below_critical(epsilon, "squeeze_parameter");
    return 0.25 * std::log1p(-epsilon * epsilon);
}

ComplexMatrix driven_jc_hamiltonian(const OperatorSet& ops, double epsilon, double omega) {
    const ComplexMatrix sigma_minus = ops.projector(kG, kE);
    const ComplexMatrix coupling = ops.a_dag * sigma_minus;
    return omega * (coupling + coupling.adjoint() + 0.5 * epsilon * (ops.a + ops.a_dag));
}

namespace {

ComplexVector pad_qubit(const HilbertSpace& space, const ComplexVector& phi) {
    ComplexVector out = ComplexVector::Zero(space.qubit_levels());
    out.head(2) = phi;
    return out;
}

void check_residual(const HilbertSpace& space, const ComplexVector& psi, double epsilon, double energy,
                    double residual_tol, const char* which) {
    if (residual_tol < 0.0) return;
    const OperatorSet ops = build_operators(space);
    const ComplexMatrix h = driven_jc_hamiltonian(ops, epsilon, 1.0);
    const double residual = (h * psi - energy * psi).norm();
    if (residual > residual_tol) {
        throw AccuracyError(std::string(which) + ": Hamiltonian residual " + std::to_string(residual) +
                            " (units of Omega) exceeds " + std::to_string(residual_tol) + " at eps = " +
                            std::to_string(epsilon) + " with fock_cutoff = " +
                            std::to_string(space.fock_cutoff()) + "; increase the cutoff");
    }
}

}  // namespace

ComplexVector dark_state_vector(const HilbertSpace& space, double epsilon, double residual_tol) {
    const double r = squeeze_parameter(epsilon);
    const ComplexVector fock = squeeze(space, r).col(0);
    const ComplexVector psi = tensor_ket(pad_qubit(space, qubit_dark_state(epsilon)), fock);
    check_residual(space, psi, epsilon, 0.0, residual_tol, "dark_state_vector");
    return psi;
}

ComplexVector bright_state_vector(const HilbertSpace& space, int n, int sign, double epsilon,
                                  double residual_tol) {
    if (n < 1 || n > space.fock_cutoff()) {
        throw std::invalid_argument("bright_state_vector: n must lie in [1, fock_cutoff]");
    }
    if (sign != 1 && sign != -1) {
        throw std::invalid_argument("bright_state_vector: sign must be +1 or -1");
    }
    const double r = squeeze_parameter(epsilon);
    const double alpha = -sign * std::sqrt(static_cast<double>(n)) * epsilon;

    const int fd = space.fock_dim();
    const ComplexVector phi0 = pad_qubit(space, qubit_dark_state(epsilon));
    const ComplexVector phi1 = pad_qubit(space, qubit_bright_part(epsilon));
    const ComplexVector n_minus_one = ComplexVector::Unit(fd, n - 1);
    const ComplexVector n_ket = ComplexVector::Unit(fd, n);
    const ComplexVector bare =
        (tensor_ket(phi1, n_minus_one) + static_cast<double>(sign) * tensor_ket(phi0, n_ket)) / std::sqrt(2.0);

    const ComplexMatrix fock_transform = squeeze(space, r) * displace(space, alpha);
    const ComplexVector psi = lift_fock(space, fock_transform) * bare;
    const double energy = sign * std::sqrt(static_cast<double>(n)) * std::pow(1.0 - epsilon * epsilon, 0.75);
    check_residual(space, psi, epsilon, energy, residual_tol, "bright_state_vector");
    return psi;
}

double mean_photon_dark(double epsilon) {
    const double s = std::sinh(squeeze_parameter(epsilon));
    return s * s;
}

double mean_photon_bright(int n, double epsilon) {
    if (n < 1) throw std::invalid_argument("mean_photon_bright: n must be >= 1");
    const double r = squeeze_parameter(epsilon);
    return 2.0 * n * epsilon * epsilon * std::exp(-2.0 * r) + n * std::cosh(2.0 * r) - 0.5;
}

PeCurveFit fit_pe_curve(const std::vector<std::pair<double, double>>& points) {
    if (points.empty()) throw std::invalid_argument("fit_pe_curve: no points");
    double num = 0.0;
    double den = 0.0;
    for (const auto& [eps, pe] : points) {
        if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("fit_pe_curve: epsilon must lie in [0, 1)");
        const double f = dark_state_pe(eps);
        num += f * pe;
        den += f * f;
    }
    if (den == 0.0) throw std::invalid_argument("fit_pe_curve: degenerate input (all epsilon = 0)");

    PeCurveFit fit;
    fit.c = num / den;
    double ss = 0.0;
    for (const auto& [eps, pe] : points) {
        const double res = pe - fit.c * dark_state_pe(eps);
        fit.residuals.push_back(res);
        ss += res * res;
    }
    fit.rms = std::sqrt(ss / static_cast<double>(points.size()));
    return fit;
}

double iontrap_pe(double lambda, double eta0, double chi0) {
    if (!(eta0 > 0.0 && chi0 > 0.0)) throw std::invalid_argument("iontrap_pe: eta0 and chi0 must be positive");
    if (lambda < 0.0) throw std::invalid_argument("iontrap_pe: lambda must be non-negative");
    const double x = 2.0 * lambda / (eta0 * chi0);
    if (x > 1.0) throw DomainError("iontrap_pe: 2 lambda / (eta0 chi0) = " + std::to_string(x) + " is beyond the critical point");
    return dark_state_pe(x);
}

}  // namespace critsense
