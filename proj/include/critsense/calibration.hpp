#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "critsense/quantum_core.hpp"

namespace critsense {

// Two drive-line amplitudes A_j e^{i phi_j}.
struct DrivePair {
    Complex first;
    Complex second;
};

// [[1, M12], [M21, 1]] with M_jk = A_jk e^{i phi_jk}, the crosstalk of line k onto qubit j.
class CrosstalkMatrix {
public:
    CrosstalkMatrix() = default;
    // Throws std::invalid_argument unless |M12|, |M21| < 1.
    CrosstalkMatrix(Complex m12, Complex m21);
    static CrosstalkMatrix from_polar(double a12, double phi12, double a21, double phi21);

    Complex m12() const { return m12_; }
    Complex m21() const { return m21_; }
    Complex determinant() const { return 1.0 - m12_ * m21_; }
    Eigen::Matrix2cd matrix() const;

private:
    Complex m12_{0.0, 0.0};
    Complex m21_{0.0, 0.0};
};

// Effective drive M v.
DrivePair crosstalk_apply(const CrosstalkMatrix& m, const DrivePair& v);
// M^{-1} v; throws SingularMatrixError when |det M| <= 1e-9.
DrivePair crosstalk_correct(const CrosstalkMatrix& m, const DrivePair& desired);

// Synthetic two-level target qubit. The crosstalk drive has Rabi rate
// `amplitude` (rad/us) and phase `phase`; it is assumed independent of the
// small frequency offsets used in the sweep.
struct CrosstalkTruth {
    double amplitude = 0.0;
    double phase = 0.0;
};

struct SweepTrace {
    double parameter = 0.0;  // frequency offset (rad/us) or cancellation phase (rad)
    std::vector<double> tau;
    std::vector<double> pe;
};

// P_e(tau) of |g> evolved under H = (delta/2) sigma_z + (Re W sigma_x + Im W sigma_y)/2
// for a complex drive W (rad/us).
std::vector<double> simulate_driven_qubit(Complex drive, double delta, const std::vector<double>& tau);

// One trace per frequency offset of the crosstalk-only drive.
std::vector<SweepTrace> simulate_frequency_sweep(const CrosstalkTruth& truth, const std::vector<double>& offsets,
                                                 const std::vector<double>& tau);

// On resonance, crosstalk plus a cancellation pulse c e^{i theta} on the
// target's own line, one trace per theta.
std::vector<SweepTrace> simulate_phase_sweep(const CrosstalkTruth& truth, double cancel_amplitude,
                                             const std::vector<double>& phases, const std::vector<double>& tau);

struct RabiFit {
    double frequency = 0.0;  // generalized Rabi frequency W, rad/us
    double contrast = 0.0;   // P_e = contrast (1 - cos W tau) / 2
    double rms = 0.0;
};

// Least-squares fit of one trace; frequencies up to the Nyquist limit of the tau grid.
RabiFit fit_rabi_trace(const std::vector<double>& tau, const std::vector<double>& pe);

// Traces whose excitation never exceeds this are treated as no crosstalk.
inline constexpr double kCrosstalkDetectionFloor = 1e-6;

struct CrosstalkEstimate {
    bool detected = false;
    double amplitude = 0.0;          // rad/us
    double slowest_frequency = 0.0;  // fitted W of the slowest trace
    double slowest_offset = 0.0;
    double phase = 0.0;              // rad in [0, 2 pi); NaN when not extracted
};

// Amplitude from the slowest trace, refined by fitting W^2 = A^2 + (delta - delta0)^2
// through the fitted frequencies. Throws std::runtime_error when the slowest
// trace sits at the edge of the sweep.
CrosstalkEstimate extract_crosstalk_amplitude(const std::vector<SweepTrace>& frequency_sweep);

// Crosstalk phase = (cancellation phase of least excitation) - pi, refined by
// a parabola through the three best phases.
double extract_crosstalk_phase(const std::vector<SweepTrace>& phase_sweep);

// Both steps; the phase sweep is the second argument and is skipped when no
// crosstalk is detected.
CrosstalkEstimate extract_crosstalk(const std::vector<SweepTrace>& frequency_sweep,
                                    const std::vector<SweepTrace>& phase_sweep);

// Long format with columns (offset_rad_per_us | phase_rad), tau_us, pe.
void write_sweep_csv(std::ostream& os, const std::vector<SweepTrace>& sweep, bool phase_sweep = false);

// exp(-i phi (cos theta sigma_x + sin theta sigma_y) / 2).
Eigen::Matrix2cd rotation(double phi, double theta);

// chi matrix in the Pauli basis {I, X, Y, Z} of rho -> U rho U_dag, from
// tomography of the channel on the Pauli operators. Normalized so tr chi = 1.
Eigen::Matrix4cd process_chi_matrix(const Eigen::Matrix2cd& u);

// tr(chi_a chi_b).
double process_fidelity(const Eigen::Matrix4cd& chi_a, const Eigen::Matrix4cd& chi_b);

// 1 - F_p between R(phi) and R(phi (1 + delta_eps)) about the axis at angle theta.
double gate_infidelity(double phi, double delta_eps, double theta = 0.0);

}  // namespace critsense
