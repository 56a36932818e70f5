#include "critsense/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "critsense/calibration.hpp"
#include "critsense/csv.hpp"
#include "critsense/errors.hpp"
#include "critsense/jcm_analytics.hpp"
#include "critsense/lindblad.hpp"
#include "critsense/protocols.hpp"
#include "critsense/readout_fit.hpp"

namespace critsense {

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest failed");
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
    return os.str();
}

namespace {

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

bool plain_file_name(const std::string& name) {
    return !name.empty() && name != "." && name != ".." && name.find('/') == std::string::npos &&
           name.find('\\') == std::string::npos && name.find('\0') == std::string::npos;
}

}  // namespace

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

void OutputSet::write(const std::string& name, const std::function<void(std::ostream&)>& fill) {
    if (!plain_file_name(name)) throw std::invalid_argument("output name '" + name + "' is not a plain file name");
    for (const auto& f : files_) {
        if (f.name == name) throw std::logic_error("output '" + name + "' written twice");
    }
    std::ostringstream os;
    fill(os);
    const std::string bytes = os.str();
    write_bytes(dir_ / name, bytes);
    files_.push_back({name, sha256_hex(bytes), bytes.size()});
}

namespace {

void put_params(CsvWriter& csv, const SystemParams& p) {
    csv.comment("omega_rad_per_us", p.omega);
    csv.comment("k_per_us", p.k);
    csv.comment("kappa_q_per_us", p.kappa_q);
    csv.comment("kappa_r_per_us", p.kappa_r);
    csv.comment("gamma_q_per_us", p.gamma_q);
    csv.comment("chi_rad_per_us", p.chi);
    csv.comment("delta_r_rad_per_us", p.delta_r);
    csv.comment("delta_e_rad_per_us", p.delta_e);
}

ScanSettings scan_settings(const RunConfig& c) {
    ScanSettings s;
    s.jobs = c.jobs;
    if (c.values.count("fock_cutoff")) s.quench.fock_cutoff = c.integer("fock_cutoff");
    return s;
}

DerivativeMode derivative_mode(const RunConfig& c) {
    return c.text("derivative") == "fit" ? DerivativeMode::fit : DerivativeMode::finite_difference;
}

// Uniform eps grid from 0 to eps_target.
std::vector<double> eps_grid(double eps_target, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? eps_target : eps_target * i / (n - 1));
    return v;
}

void fig2_quench(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const double eps_t = c.number("epsilon_target");
    const auto eps = eps_grid(eps_t, c.integer("n_samples"));
    std::vector<double> ks = c.list("k_values");
    if (std::find(ks.begin(), ks.end(), c.params.k) == ks.end()) ks.push_back(c.params.k);
    const ScanSettings s = scan_settings(c);
    std::vector<Trajectory> runs(ks.size());
    log << "fig2-quench: " << ks.size() << " quenches to eps = " << eps_t << "\n";
    parallel_for(ks.size(), c.jobs, [&](std::size_t i) {
        SystemParams p = c.params;
        p.k = ks[i];
        runs[i] = run_quench_at(ModelKind::jc2, p, eps, s.quench);
    });
    const std::size_t main = static_cast<std::size_t>(std::find(ks.begin(), ks.end(), c.params.k) - ks.begin());

    out.write("fig2a_ramp.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("epsilon_target", eps_t);
        csv.header({"k_per_us", "t_us", "epsilon"});
        for (double k : ks) {
            const double t_end = ramp_time(eps_t, k);
            for (std::size_t i = 0; i < eps.size(); ++i) {
                const double t = t_end * static_cast<double>(i) / static_cast<double>(eps.size() - 1);
                csv.row({k, t, ramp_epsilon(t, k)});
            }
        }
    });
    const Trajectory& m = runs[main];
    out.write("fig2b_fidelity.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        put_params(csv, c.params);
        csv.header({"epsilon", "fidelity"});
        for (const auto& r : m.records) csv.row({r.epsilon, r.fidelity});
    });
    out.write("fig2c_photon.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        put_params(csv, c.params);
        csv.header({"epsilon", "n_avg", "n_dark"});
        for (const auto& r : m.records) csv.row({r.epsilon, r.n_avg, mean_photon_dark(r.epsilon)});
    });
    out.write("fig2d_excitation.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        put_params(csv, c.params);
        csv.header({"k_per_us", "epsilon", "P_e", "P_e_ideal"});
        for (std::size_t i = 0; i < ks.size(); ++i) {
            for (const auto& r : runs[i].records) csv.row({ks[i], r.epsilon, r.p_e, dark_state_pe(r.epsilon)});
        }
    });
    out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, m); });
}

void fig3_metrology(const RunConfig& c, OutputSet& out, std::ostream&) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    out.write("metrology.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.header({"epsilon", "P_e", "dPe_deps", "delta_P_e", "snr", "fisher_classical", "fisher_quantum"});
        for (double e : c.list("epsilon")) {
            const double s = (e > 0.0) ? snr(e) : nan;
            const double h = std::min(1e-5, (1.0 - e) / 2.0);
            csv.row({e, dark_state_pe(e), dark_state_pe_derivative(e), delta_pe(e), s, fisher_classical(e),
                     fisher_quantum_fd(e, h)});
        }
    });
    out.write("fisher_vs_time.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("k_per_us", c.params.k);
        csv.header({"t_us", "epsilon", "fisher"});
        for (double t : c.list("time")) csv.row({t, ramp_epsilon(t, c.params.k), fisher_of_time(t, c.params.k)});
    });
}

void fisher_scan(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const auto& eps = c.list("epsilon");
    const ScanSettings s = scan_settings(c);
    log << "fisher-scan: one quench to eps = " << eps.back() << "\n";
    const Trajectory traj = run_quench_at(ModelKind::jc2, c.params, eps, s.quench);
    std::vector<double> pe;
    for (double e : eps) pe.push_back(traj.nearest_epsilon(e).p_e);
    const auto f_sim = fisher_from_pe(eps, pe, derivative_mode(c));
    out.write("fisher_scan.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        put_params(csv, c.params);
        csv.comment("derivative", c.text("derivative"));
        csv.header({"epsilon", "F_analytic", "F_simulated"});
        for (std::size_t i = 0; i < eps.size(); ++i) csv.row({eps[i], fisher_classical(eps[i]), f_sim[i]});
    });
}

void write_quench_summary(OutputSet& out, const RunConfig& c, const Trajectory& t, ModelKind kind) {
    out.write("summary.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("model", to_string(kind));
        put_params(csv, c.params);
        csv.header({"epsilon_end", "P_e_end", "P_f_max", "n_avg_end", "fidelity_end", "accepted_steps"});
        csv.row({t.back().epsilon, t.back().p_e, t.max_p_f(), t.back().n_avg, t.back().fidelity,
                 static_cast<double>(t.accepted_steps)});
    });
    out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, t); });
}

Trajectory uniform_quench(const RunConfig& c, ModelKind kind, const SystemParams& p) {
    QuenchSettings q = scan_settings(c).quench;
    q.integrator.n_samples = c.integer("n_samples");
    return run_quench(kind, p, c.number("epsilon_target"), q);
}

void figs1_master(const RunConfig& c, OutputSet& out, std::ostream& log) {
    log << "figS1-master: two-level master-equation quench\n";
    const Trajectory t = uniform_quench(c, ModelKind::jc2, c.params);
    out.write("ratios.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        put_params(csv, c.params);
        csv.header({"epsilon", "fidelity", "n_ratio", "P_e_ratio"});
        for (const auto& r : t.records) {
            csv.row({r.epsilon, r.fidelity, r.n_avg / mean_photon_dark(r.epsilon), r.p_e / dark_state_pe(r.epsilon)});
        }
    });
    write_quench_summary(out, c, t, ModelKind::jc2);
}

void figs2_frequency(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const DetuningMode mode =
        c.text("detuning_mode") == "common" ? DetuningMode::common : DetuningMode::resonator;
    log << "figS2-frequency: " << c.list("delta_omega").size() << " detunings\n";
    ScanResult r = frequency_robustness_scan(c.list("delta_omega"), c.params, c.number("epsilon_w"), mode,
                                             scan_settings(c));
    r.metadata.emplace_back("detuning_mode", c.text("detuning_mode"));
    out.write("frequency_robustness.csv", [&](std::ostream& os) { write_scan_csv(os, r); });
}

void figs3_scan(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const auto& kq = c.list("kappa_q_sets");
    const auto& kr = c.list("kappa_r_sets");
    const auto& gq = c.list("gamma_q_sets");
    std::vector<RateSet> sets;
    for (std::size_t i = 0; i < kq.size(); ++i) sets.push_back({kq[i], kr[i], gq[i]});
    log << "figS3-scan: " << sets.size() * c.list("k_values").size() << " quenches\n";
    const ScanResult r = relative_error_scan(c.list("epsilon_w"), c.list("k_values"), sets, c.params, scan_settings(c));
    out.write("relative_error.csv", [&](std::ostream& os) { write_scan_csv(os, r); });
    // One (epsilon_w, k) matrix per rate set.
    const auto& ew = c.list("epsilon_w");
    const auto& kv = c.list("k_values");
    for (std::size_t s = 0; s < sets.size(); ++s) {
        ScanResult slice({{"epsilon_w", ew}, {"k_per_us", kv}}, {"D"});
        for (std::size_t i = 0; i < ew.size(); ++i) {
            for (std::size_t j = 0; j < kv.size(); ++j) {
                slice.at("D", slice.flat_index({i, j})) = r.at("D", r.flat_index({s, i, j}));
            }
        }
        out.write("relative_error_set" + std::to_string(s) + ".dat",
                  [&](std::ostream& os) { write_gnuplot_matrix(os, slice, "D"); });
    }
}

void figs4_qutrit(const RunConfig& c, OutputSet& out, std::ostream& log) {
    log << "figS4-qutrit: resonant qutrit quench\n";
    write_quench_summary(out, c, uniform_quench(c, ModelKind::qutrit_resonant, c.params), ModelKind::qutrit_resonant);
}

void figs5_detuning(const RunConfig& c, OutputSet& out, std::ostream& log) {
    log << "figS5-detuning: " << c.list("delta_r").size() * c.list("delta_e").size() << " qutrit quenches\n";
    const DetuningScanResult r =
        detuning_scan(c.list("delta_r"), c.list("delta_e"), c.params, c.number("epsilon_target"), scan_settings(c));
    out.write("detuning_scan.csv", [&](std::ostream& os) { write_scan_csv(os, r.scan); });
    out.write("detuning_max_pf.dat", [&](std::ostream& os) { write_gnuplot_matrix(os, r.scan, "max_p_f"); });
}

void figs5_detuned_quench(const RunConfig& c, OutputSet& out, std::ostream& log) {
    SystemParams p = c.params;
    p.delta_r = c.number("delta_r");
    p.delta_e = c.number("delta_e");
    log << "figS5-detuned-quench: detuned qutrit quench\n";
    RunConfig cc = c;
    cc.params = p;
    write_quench_summary(out, cc, uniform_quench(c, ModelKind::qutrit_detuned, p), ModelKind::qutrit_detuned);
}

std::vector<double> uniform(double a, double b, int n, bool endpoint = true) {
    std::vector<double> v;
    const int d = endpoint ? n - 1 : n;
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / d);
    return v;
}

void figs6_crosstalk(const RunConfig& c, OutputSet& out, std::ostream&) {
    const CrosstalkTruth truth{c.number("crosstalk_amplitude"), c.number("crosstalk_phase")};
    const auto tau = uniform(0.0, c.number("tau_max"), c.integer("tau_points"));
    const auto freq = simulate_frequency_sweep(truth, c.list("offsets"), tau);
    const auto phases = uniform(0.0, kTwoPi, c.integer("phase_points"), false);
    const auto phase = simulate_phase_sweep(truth, truth.amplitude, phases, tau);
    const CrosstalkEstimate est = extract_crosstalk(freq, phase);
    out.write("frequency_sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, freq, false); });
    out.write("phase_sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, phase, true); });
    out.write("crosstalk_estimate.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.header({"detected", "amplitude_true", "amplitude", "phase_true", "phase", "slowest_offset",
                    "slowest_frequency"});
        csv.row({est.detected ? 1.0 : 0.0, truth.amplitude, est.amplitude, truth.phase, est.phase, est.slowest_offset,
                 est.slowest_frequency});
    });
    const CrosstalkMatrix m = CrosstalkMatrix::from_polar(c.number("m12_amplitude"), c.number("m12_phase"),
                                                          c.number("m21_amplitude"), c.number("m21_phase"));
    const DrivePair desired{Complex(1.0, 0.0), Complex(1.0, 0.0)};
    const DrivePair corrected = crosstalk_correct(m, desired);
    const DrivePair applied = crosstalk_apply(m, corrected);
    out.write("crosstalk_correction.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("m12", format_number(m.m12().real()) + " " + format_number(m.m12().imag()) + "i");
        csv.comment("m21", format_number(m.m21().real()) + " " + format_number(m.m21().imag()) + "i");
        csv.header({"line", "desired_re", "desired_im", "corrected_re", "corrected_im", "applied_re", "applied_im"});
        csv.row({1.0, desired.first.real(), desired.first.imag(), corrected.first.real(), corrected.first.imag(),
                 applied.first.real(), applied.first.imag()});
        csv.row({2.0, desired.second.real(), desired.second.imag(), corrected.second.real(), corrected.second.imag(),
                 applied.second.real(), applied.second.imag()});
    });
}

void figs7_drive(const RunConfig& c, OutputSet& out, std::ostream&) {
    const double tau = c.number("tau");
    const double slope = c.number("slope");
    std::vector<std::pair<double, double>> pts;
    for (double xi : c.list("amplitudes")) pts.emplace_back(xi, std::abs(slope * xi * tau));
    const DriveCalibration cal = calibrate_drive_strength(pts, tau);
    out.write("drive_calibration.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("tau_us", tau);
        csv.comment("fitted_slope_per_us", cal.slope);
        csv.header({"amplitude", "alpha_abs", "G_per_us", "G_fit_per_us", "residual"});
        for (std::size_t i = 0; i < pts.size(); ++i) {
            csv.row({pts[i].first, pts[i].second, cal.g[i], cal.slope * pts[i].first, cal.residuals[i]});
        }
    });
}

// Photon-number marginal of the dark state, truncated to n_max and renormalized.
PhotonDistribution dark_state_distribution(double eps, int n_max) {
    const HilbertSpace space(2, std::max(80, 2 * n_max));
    const ComplexVector psi = dark_state_vector(space, eps, -1.0);
    PhotonDistribution d;
    double sum = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        const double p = std::norm(psi(space.index(kG, n))) + std::norm(psi(space.index(kE, n)));
        d.probs.push_back(p);
        sum += p;
    }
    for (double& p : d.probs) p /= sum;
    return d;
}

void figs8_tomography(const RunConfig& c, OutputSet& out, std::ostream&) {
    const int n_max = c.integer("n_max");
    const DecayModel model = c.text("decay_model") == "reciprocal" ? DecayModel::reciprocal : DecayModel::product;
    const PhotonDistribution truth = dark_state_distribution(c.number("source_epsilon"), n_max);
    const auto tau = uniform(0.0, c.number("tau_max"), c.integer("tau_points"));
    RabiSignal sig = rabi_forward(truth, c.number("omega_a"), c.number("kappa_fit"), c.number("l"), c.number("pg0"),
                                  tau, model);
    const double sigma = c.number("noise_sigma");
    if (sigma > 0.0) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(c.integer("seed")));
        std::normal_distribution<double> noise(0.0, sigma);
        for (double& p : sig.pe) p = std::clamp(p + noise(rng), 0.0, 1.0);
    }
    const PhotonFit fit =
        fit_photon_distribution(sig, n_max, c.number("l"), c.number("kappa_fit"), model);
    out.write("rabi_signal.csv", [&](std::ostream& os) { write_rabi_signal_csv(os, sig); });
    out.write("photon_true.csv", [&](std::ostream& os) { write_photon_distribution_csv(os, truth); });
    out.write("photon_fit.csv", [&](std::ostream& os) { write_photon_distribution_csv(os, fit.dist); });
    out.write("fit_summary.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("decay_model", c.text("decay_model"));
        csv.header({"residual_norm", "condition_number", "total_variation"});
        csv.row({fit.residual_norm, fit.condition_number, total_variation(truth, fit.dist)});
    });
}

void ramping_time(const RunConfig& c, OutputSet& out, std::ostream& log) {
    const double eps = c.number("epsilon_target");
    const double t_ref = ramp_time(eps, c.params.k);
    std::vector<double> times;
    for (double f : c.list("t_factors")) times.push_back(f * t_ref);
    log << "ramping-time: " << times.size() + 1 << " quenches\n";
    const RampRobustnessResult r = ramping_time_robustness(eps, times, c.params, scan_settings(c));
    out.write("ramping_time.csv", [&](std::ostream& os) { write_scan_csv(os, r.scan); });
}

void rabi_comparison(const RunConfig& c, OutputSet& out, std::ostream&) {
    const double eps0 = c.number("eps0");
    std::vector<int> ns;
    for (double n : c.list("n_values")) ns.push_back(static_cast<int>(n));
    out.write("amplitude_error.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("eps0_rad_per_us", eps0);
        csv.header({"n", "delta_eps_rel", "t_n_us", "delta_pe_exact", "delta_pe_linear"});
        for (int n : ns) {
            for (double d : c.list("delta_eps_rel")) {
                const auto r = rabi_method_sim(eps0, n, d * eps0, 0.0);
                csv.row({static_cast<double>(n), d, r.t_n, r.delta_pe_exact, r.delta_pe_linear});
            }
        }
    });
    out.write("timing_error.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("eps0_rad_per_us", eps0);
        csv.header({"n", "delta_t_us", "timing_delta_pe"});
        for (int n : ns) {
            for (double dt : c.list("delta_t")) {
                csv.row({static_cast<double>(n), dt, rabi_method_sim(eps0, n, 0.0, dt).timing_delta_pe});
            }
        }
    });
}

void figs9_budget(const RunConfig& c, OutputSet& out, std::ostream& log) {
    log << "figS9-budget: quenches with and without dissipation\n";
    const ErrorBudget b = error_budget(c.list("epsilon"), c.params, derivative_mode(c), scan_settings(c));
    out.write("error_budget.csv", [&](std::ostream& os) { write_error_budget_csv(os, b); });
}

void gate_infidelity_scan(const RunConfig& c, OutputSet& out, std::ostream&) {
    const double theta = c.number("theta");
    ScanResult r({{"phi_rad", c.list("phi")}, {"delta_eps", c.list("delta_eps")}}, {"infidelity"});
    for (std::size_t i = 0; i < r.size(); ++i) {
        const auto idx = r.unflatten(i);
        r.at("infidelity", i) = gate_infidelity(r.axes()[0].values[idx[0]], r.axes()[1].values[idx[1]], theta);
    }
    r.metadata.emplace_back("theta_rad", format_number(theta));
    out.write("gate_infidelity.csv", [&](std::ostream& os) { write_scan_csv(os, r); });
    out.write("gate_infidelity.dat", [&](std::ostream& os) { write_gnuplot_matrix(os, r, "infidelity"); });
}

void iontrap(const RunConfig& c, OutputSet& out, std::ostream&) {
    const double eta0 = c.number("eta0");
    const double chi0 = c.number("chi0");
    out.write("iontrap.csv", [&](std::ostream& os) {
        CsvWriter csv(os);
        csv.comment("eta0", eta0);
        csv.comment("chi0", chi0);
        csv.header({"lambda", "epsilon", "P_e"});
        for (double l : c.list("lambda")) csv.row({l, 2.0 * l / (eta0 * chi0), iontrap_pe(l, eta0, chi0)});
    });
}

using ScenarioFn = void (*)(const RunConfig&, OutputSet&, std::ostream&);

const std::map<std::string, ScenarioFn>& dispatch() {
    static const std::map<std::string, ScenarioFn> table{
        {"fig2-quench", fig2_quench},
        {"fig3-metrology", fig3_metrology},
        {"fisher-scan", fisher_scan},
        {"figS1-master", figs1_master},
        {"figS2-frequency", figs2_frequency},
        {"figS3-scan", figs3_scan},
        {"figS4-qutrit", figs4_qutrit},
        {"figS5-detuning", figs5_detuning},
        {"figS5-detuned-quench", figs5_detuned_quench},
        {"figS6-crosstalk", figs6_crosstalk},
        {"figS7-drive", figs7_drive},
        {"figS8-tomography", figs8_tomography},
        {"ramping-time", ramping_time},
        {"rabi-comparison", rabi_comparison},
        {"figS9-budget", figs9_budget},
        {"gate-infidelity", gate_infidelity_scan},
        {"iontrap", iontrap},
    };
    return table;
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const StiffnessError*>(&e)) return "StiffnessError";
    if (dynamic_cast<const IntegrationError*>(&e)) return "IntegrationError";
    if (dynamic_cast<const AccuracyError*>(&e)) return "AccuracyError";
    if (dynamic_cast<const ConditioningError*>(&e)) return "ConditioningError";
    if (dynamic_cast<const SingularMatrixError*>(&e)) return "SingularMatrixError";
    if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
    if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
    if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "InvalidArgument";
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return "FilesystemError";
    return "RuntimeError";
}

}  // namespace

void write_error_record(const std::filesystem::path& out_dir, const std::string& scenario, int exit_code,
                        const std::string& type, const std::vector<std::string>& messages) {
    nlohmann::ordered_json j;
    j["status"] = "error";
    j["exit_code"] = exit_code;
    j["scenario"] = scenario;
    j["error_type"] = type;
    j["message"] = messages.empty() ? std::string() : messages.front();
    j["messages"] = messages;
    std::filesystem::create_directories(out_dir);
    write_bytes(out_dir / "error.json", j.dump(2) + "\n");
}

int run(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log) {
    const auto it = dispatch().find(config.scenario);
    if (it == dispatch().end()) {
        write_error_record(out_dir, config.scenario, kExitConfigError, "ConfigError",
                           {"unknown scenario '" + config.scenario + "'"});
        return kExitConfigError;
    }
    try {
        std::filesystem::remove(out_dir / "error.json");
        OutputSet out(out_dir);
        it->second(config, out, log);
        nlohmann::ordered_json files = nlohmann::ordered_json::array();
        for (const auto& f : out.files()) {
            files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
        }
        nlohmann::ordered_json manifest;
        manifest["scenario"] = config.scenario;
        manifest["files"] = files;
        write_bytes(out_dir / "manifest.json", manifest.dump(2) + "\n");
        log << config.scenario << ": wrote " << out.files().size() << " files to " << out_dir.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        log << config.scenario << ": failed: " << e.what() << "\n";
        try {
            write_error_record(out_dir, config.scenario, kExitNumericalFailure, error_type(e), {e.what()});
        } catch (const std::exception& w) {
            log << "could not write error.json: " << w.what() << "\n";
        }
        return kExitNumericalFailure;
    }
}

}  // namespace critsense
