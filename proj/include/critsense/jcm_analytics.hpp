#pragma once

#include <utility>
#include <vector>

#include "critsense/quantum_core.hpp"

namespace critsense {

// Physical parameters. Times are in microseconds; every Hamiltonian frequency
// is angular (rad/us). Decay and dephasing rates are plain 1/us.
struct SystemParams {
    double omega = kTwoPi * 20.9;  // qubit-resonator coupling
    double k = 10.0;               // ramp coefficient, 1/us
    double kappa_q = 0.05;         // qubit energy decay
    double kappa_r = 0.08;         // resonator decay
    double gamma_q = 0.08;         // qubit dephasing
    double chi = kTwoPi * 245.0;   // qutrit anharmonicity
    double delta_r = 0.0;          // resonator - signal detuning
    double delta_e = 0.0;          // qubit - signal detuning

    // Throws std::invalid_argument on a negative rate or non-positive coupling.
    void validate() const;

    SystemParams without_dissipation() const {
        SystemParams p = *this;
        p.kappa_q = p.kappa_r = p.gamma_q = 0.0;
        return p;
    }
};

// eps(t) = sqrt(1 - 1/(k^2 t^2 + 1)), saturating towards 1.
double ramp_epsilon(double t, double k);
// Inverse of ramp_epsilon. Throws DomainError for eps >= 1.
double ramp_time(double epsilon, double k);

struct RampSchedule {
    double k = 10.0;
    double epsilon_max = 0.99;

    double epsilon(double t) const { return ramp_epsilon(t, k); }
    double time_of(double epsilon) const { return ramp_time(epsilon, k); }
    double end_time() const { return time_of(epsilon_max); }
};

// Excited-state population of the dark state, (1 - sqrt(1 - eps^2)) / 2.
double dark_state_pe(double epsilon);
double dark_state_pe_derivative(double epsilon);

// Standard deviation sqrt(P_e (1 - P_e)) of a two-outcome measurement of P_e.
double delta_pe(double epsilon);
double snr(double epsilon);

// Two-outcome Fisher information (1/P_e + 1/P_g)(dP_e/deps)^2.
double fisher_two_outcome(double pe, double dpe);
double fisher_classical(double epsilon);
// 4[<d phi|d phi> - |<phi|d phi>|^2] for the qubit part of the dark state,
// with central differences of step h.
double fisher_quantum_fd(double epsilon, double h);
double fisher_of_time(double t, double k);

// Qubit part c+|g> - c-|e> of the dark state, as a 2-vector.
ComplexVector qubit_dark_state(double epsilon);
// c+|e> - c-|g>.
ComplexVector qubit_bright_part(double epsilon);

struct QuasiEnergyPair {
    double plus;
    double minus;
};
QuasiEnergyPair quasi_energies(int n, double epsilon, double omega);
double gap_min(double epsilon, double omega);

// r = ln(1 - eps^2) / 4.
double squeeze_parameter(double epsilon);

// The undetuned driven JCM, Omega[(a_dag|g><e| + a|e><g|) + eps (a + a_dag)/2],
// on any space (qutrit |f> is left uncoupled).
ComplexMatrix driven_jc_hamiltonian(const OperatorSet& ops, double epsilon, double omega);

// Dark and bright eigenvectors built from squeezing and displacement.
// The Hamiltonian residual ||H psi - E psi|| / Omega is checked against
// residual_tol and an AccuracyError is thrown when it is exceeded; pass a
// negative tolerance to skip the check.
ComplexVector dark_state_vector(const HilbertSpace& space, double epsilon, double residual_tol = 1e-6);
ComplexVector bright_state_vector(const HilbertSpace& space, int n, int sign, double epsilon,
                                  double residual_tol = 1e-6);

double mean_photon_dark(double epsilon);
double mean_photon_bright(int n, double epsilon);

struct PeCurveFit {
    double c = 0.0;
    std::vector<double> residuals;
    double rms = 0.0;
};
// Least-squares scale C of P_e(eps) = C (1 - sqrt(1 - eps^2)) / 2.
PeCurveFit fit_pe_curve(const std::vector<std::pair<double, double>>& points);

// Trapped-ion mapping: dark_state_pe(2 lambda / (eta0 chi0)).
double iontrap_pe(double lambda, double eta0, double chi0);

}  // namespace critsense
