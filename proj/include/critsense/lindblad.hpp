#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "critsense/jcm_analytics.hpp"
#include "critsense/quantum_core.hpp"

namespace critsense {

enum class ModelKind { jc2, qutrit_resonant, qutrit_detuned };

const char* to_string(ModelKind kind);

// Driven JCM. The detunings in params enter as delta_r a_dag a + delta_e |e><e|
// and vanish for the default (resonant) parameters.
ComplexMatrix build_hamiltonian_jc2(double epsilon, const SystemParams& params, const OperatorSet& ops);

// Qutrit-resonator Hamiltonian in the frame rotating with the signal, all
// frequencies resonant: -chi|f><f| + Omega[a_dag(q + eps/2) + h.c.].
ComplexMatrix build_hamiltonian_qutrit(double epsilon, const SystemParams& params, const OperatorSet& ops);

// As above with the detunings delta_e|e><e| + (2 delta_e - chi)|f><f| + delta_r a_dag a.
ComplexMatrix build_hamiltonian_qutrit_detuned(double epsilon, const SystemParams& params,
                                               const OperatorSet& ops);

// A dissipation channel rate * L[op].
struct Collapse {
    double rate;
    ComplexMatrix op;
};

// d(rho)/dt = -i[H, rho] + sum rate (O rho O_dag - {O_dag O, rho}/2).
ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const ComplexMatrix& hamiltonian,
                           std::span<const Collapse> collapse);
ComplexMatrix lindblad_rhs(const QuantumState& rho, const ComplexMatrix& hamiltonian,
                           std::span<const Collapse> collapse);

struct HamiltonianModel {
    ModelKind kind = ModelKind::jc2;
    SystemParams params;
    RampSchedule schedule;
    HilbertSpace space{2, 30};

    // Throws std::invalid_argument when kind and space disagree or params are invalid.
    void validate() const;
    ComplexMatrix hamiltonian(double epsilon, const OperatorSet& ops) const;
    // kappa_q L[q], gamma_q L[q_dag q], kappa_r L[a]; zero-rate channels are dropped.
    std::vector<Collapse> collapse_operators(const OperatorSet& ops) const;

    HamiltonianModel with_cutoff(int fock_cutoff) const;
};

// Fock cutoff used when none is given: 30 up to eps = 0.9, 60 beyond.
int default_fock_cutoff(double epsilon_max);

// |g,0><g,0|, the initial state of every quench.
QuantumState ground_vacuum(const HilbertSpace& space);

struct TrajectoryRecord {
    double t = 0.0;
    double epsilon = 0.0;
    double p_g = 0.0;
    double p_e = 0.0;
    double p_f = 0.0;
    double n_avg = 0.0;
    double fidelity = 0.0;  // <psi_0(eps)|rho|psi_0(eps)>, NaN when not recorded
    double trace = 0.0;
    // Diagnostics, not part of the CSV.
    double purity = 0.0;
    double min_eigenvalue = 0.0;  // NaN when positivity is not checked
    double hermiticity_error = 0.0;
};

struct Trajectory {
    int qubit_levels = 2;
    std::vector<TrajectoryRecord> records;
    ComplexMatrix final_rho;
    long accepted_steps = 0;
    long rejected_steps = 0;

    const TrajectoryRecord& front() const { return records.front(); }
    const TrajectoryRecord& back() const { return records.back(); }
    // Record whose epsilon is closest to the argument.
    const TrajectoryRecord& nearest_epsilon(double epsilon) const;
    double max_p_f() const;
};

struct InvariantTolerances {
    double population = 1e-6;
    double trace = 1e-6;
    double hermiticity = 1e-10;
    double positivity = 1e-6;
};

// Human-readable descriptions of every violated invariant; empty when all hold.
std::vector<std::string> check_invariants(const Trajectory& traj, const InvariantTolerances& tol = {});

// Columns t_us, epsilon, P_g, P_e, P_f, n_avg, fidelity, trace.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

struct IntegratorOptions {
    double dt_max = 1e-3;         // us
    double tolerance = 1e-6;      // step-halving agreement of every observable
    double dt_min = 1e-6;         // below this the problem is declared stiff
    double trace_drift_max = 1e-4;
    // Sample times in [0, t_end]; when empty, n_samples uniform samples are used.
    std::vector<double> sample_times;
    int n_samples = 200;
    bool record_fidelity = true;
    bool check_positivity = true;
};

// Fixed-step RK4 with step-doubling control: each step is accepted only when one
// full step and two half steps agree within options.tolerance in every
// population, <a_dag a>, the trace and the Frobenius norm of the state
// difference (which bounds the fidelity difference). H(t) is evaluated at
// every RK4 stage time. The accepted state is the Richardson-extrapolated
// pair. Throws StiffnessError or IntegrationError.
Trajectory integrate(const HamiltonianModel& model, const QuantumState& rho0, double t_end,
                     const IntegratorOptions& options = {});

struct ConvergencePair {
    int cutoff_low = 0;
    int cutoff_high = 0;
    double max_difference = 0.0;  // over the judged observables
    std::string worst_observable;
    std::vector<std::pair<std::string, double>> differences;  // every observable
};

struct ConvergenceReport {
    std::vector<int> cutoffs;
    std::vector<ConvergencePair> pairs;
    double threshold = 1e-4;
    std::vector<std::string> observables;  // the ones pass/fail is judged on
    bool passed = false;
    bool monotone = false;  // differences shrink as the cutoff grows
    std::string worst_observable;
    double worst_difference = 0.0;

    std::string summary() const;
};

// Names accepted by convergence_check: the final P_g, P_e, P_f, n_avg, trace,
// fidelity, and max_P_f, the largest P_f over the sampled trajectory.
const std::vector<std::string>& convergence_observables();

// Integrates the model once per cutoff and compares the observables of
// successive cutoffs. Every difference is reported; pass/fail is judged on
// `observables` (all of them when empty) and passes when the last pair differs
// by less than the threshold. Each trajectory is handed to `on_trajectory`
// (when set) together with its cutoff.
ConvergenceReport convergence_check(const HamiltonianModel& model,
                                    const std::function<QuantumState(const HilbertSpace&)>& rho0,
                                    double t_end, const std::vector<int>& cutoffs,
                                    const IntegratorOptions& options = {}, double threshold = 1e-4,
                                    const std::vector<std::string>& observables = {},
                                    const std::function<void(int, const Trajectory&)>& on_trajectory = {});

}  // namespace critsense
