#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "critsense/jcm_analytics.hpp"
#include "critsense/lindblad.hpp"

namespace critsense {

// Runs fn(0), ..., fn(n - 1) on up to `jobs` threads. Every index is visited
// exactly once; the first exception (by index) is rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct QuenchSettings {
    int fock_cutoff = 0;  // 0 picks default_fock_cutoff(epsilon_target)
    IntegratorOptions integrator;
};

// Model for a quench of the given kind with schedule.k = params.k.
HamiltonianModel quench_model(ModelKind kind, const SystemParams& params, double epsilon_target,
                              int fock_cutoff = 0);

// Integrates from |g,0> up to t_end = ramp_time(epsilon_target, params.k).
Trajectory run_quench(ModelKind kind, const SystemParams& params, double epsilon_target,
                      const QuenchSettings& settings = {});

// Same run, sampled exactly at the ramp times of the given epsilons (plus t = 0).
Trajectory run_quench_at(ModelKind kind, const SystemParams& params, const std::vector<double>& epsilons,
                         const QuenchSettings& settings = {});

struct ScanAxis {
    std::string name;
    std::vector<double> values;
};

// Values on the product grid of the axes, one real array per named layer,
// stored with the last axis varying fastest.
class ScanResult {
public:
    ScanResult() = default;
    ScanResult(std::vector<ScanAxis> axes, std::vector<std::string> layers);

    const std::vector<ScanAxis>& axes() const { return axes_; }
    const std::vector<std::string>& layers() const { return layer_names_; }
    std::size_t size() const;

    std::size_t flat_index(const std::vector<std::size_t>& idx) const;
    std::vector<std::size_t> unflatten(std::size_t flat) const;

    std::size_t layer_index(const std::string& name) const;
    double& at(const std::string& layer, std::size_t flat);
    double at(const std::string& layer, std::size_t flat) const;
    const std::vector<double>& layer(const std::string& name) const;

    // Throws std::logic_error when a layer's length differs from the grid product.
    void validate() const;

    std::vector<std::pair<std::string, std::string>> metadata;

private:
    std::vector<ScanAxis> axes_;
    std::vector<std::string> layer_names_;
    std::vector<std::vector<double>> values_;
};

// Long format: '#' metadata lines, then one row per cell with the axis values
// followed by every layer.
void write_scan_csv(std::ostream& os, const ScanResult& scan);
// gnuplot nonuniform matrix of one layer of a two-axis scan: the first row is
// (n_cols, col values...), then (row value, values...).
void write_gnuplot_matrix(std::ostream& os, const ScanResult& scan, const std::string& layer);

struct ScanSettings {
    int jobs = 1;
    QuenchSettings quench;
};

struct RateSet {
    double kappa_q = 0.0;
    double kappa_r = 0.0;
    double gamma_q = 0.0;
};

// Cells whose relative error is at most this are flagged.
inline constexpr double kRelativeErrorFlag = 1e-3;

// D(eps_w, k) = |P_e - P_e^I| / P_e^I for the two-level model. Axes
// (rate_set, epsilon_w, k_per_us); layers pe, pe_ideal, D, flag. One
// integration per (rate set, k) is sampled at every working point.
ScanResult relative_error_scan(const std::vector<double>& epsilon_w, const std::vector<double>& k_values,
                               const std::vector<RateSet>& rate_sets, const SystemParams& params,
                               const ScanSettings& settings = {});

struct DetuningScanResult {
    ScanResult scan;  // axes delta_r, delta_e (rad/us); layers max_p_f, p_e_end, fidelity_end
    double best_delta_r = 0.0;
    double best_delta_e = 0.0;
    double best_max_p_f = 0.0;
};

// Max P_f over a detuned qutrit quench to epsilon_target for every grid cell.
DetuningScanResult detuning_scan(const std::vector<double>& delta_r, const std::vector<double>& delta_e,
                                 const SystemParams& params, double epsilon_target,
                                 const ScanSettings& settings = {});

enum class DetuningMode {
    resonator,  // delta a_dag a
    common,     // delta (a_dag a + |e><e|)
};

// P_e and <a_dag a> of the two-level quench at epsilon_w versus the signal
// detuning. Axis delta_omega (rad/us); layers pe, n_avg.
ScanResult frequency_robustness_scan(const std::vector<double>& delta_omega, const SystemParams& params,
                                     double epsilon_w, DetuningMode mode = DetuningMode::resonator,
                                     const ScanSettings& settings = {});

enum class DerivativeMode { finite_difference, fit };

struct ErrorBudgetEntry {
    double epsilon = 0.0;
    double fisher_ideal = 0.0;
    double fisher_hamiltonian = 0.0;
    double fisher_master = 0.0;
    double deviation_nonadiabatic = 0.0;  // |F_H - F_ideal| / F_ideal
    double deviation_decoherence = 0.0;   // |F_ME - F_H| / F_ideal
};

struct ErrorBudget {
    std::vector<ErrorBudgetEntry> entries;
    DerivativeMode mode = DerivativeMode::finite_difference;
};

// Fisher information from simulated P_e with and without dissipation. Needs at
// least three increasing grid points.
ErrorBudget error_budget(const std::vector<double>& epsilons, const SystemParams& params,
                         DerivativeMode mode = DerivativeMode::finite_difference,
                         const ScanSettings& settings = {});

void write_error_budget_csv(std::ostream& os, const ErrorBudget& budget);

// Two-outcome Fisher information of simulated P_e(eps) on a grid, with
// dP_e/deps from finite differences or from the fitted curve C P_e^I(eps).
std::vector<double> fisher_from_pe(const std::vector<double>& epsilons, const std::vector<double>& pe,
                                   DerivativeMode mode);

// dP/deps on a non-uniform grid: three-point formulas, one-sided at the ends.
std::vector<double> grid_derivative(const std::vector<double>& x, const std::vector<double>& y);

struct RabiMethodResult {
    double delta_pe_exact = 0.0;   // -cos[(eps0 + d_eps) t_n] / 2
    double delta_pe_linear = 0.0;  // (-1)^((n-1)/2) d_eps t_n / 2
    double timing_delta_pe = 0.0;  // (-1)^((n-1)/2) eps0 d_t / 2
    double t_n = 0.0;
};

// Conventional Rabi estimate biased at eps0 t_n = n pi / 2 (n odd).
RabiMethodResult rabi_method_sim(double eps0, int n, double delta_eps, double delta_t);

struct RampRobustnessResult {
    ScanResult scan;          // axis T_us; layers k_per_us, pe, ratio
    double t_reference = 0.0; // ramp_time(epsilon_target, params.k)
    double pe_reference = 0.0;
};

// Rescales k so that each ramp of duration T ends at epsilon_target. The
// reference P_e is the simulated quench at params.k.
RampRobustnessResult ramping_time_robustness(double epsilon_target, const std::vector<double>& ramp_times,
                                             const SystemParams& params, const ScanSettings& settings = {});

// Mean of y over bins of width `width` in x; returns (bin centre, mean) for
// non-empty bins in increasing order.
std::vector<std::pair<double, double>> binned_mean(const std::vector<double>& x, const std::vector<double>& y,
                                                   double width);

}  // namespace critsense
