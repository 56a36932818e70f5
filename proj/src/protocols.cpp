#include "critsense/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "critsense/csv.hpp"
#include "critsense/errors.hpp"

namespace critsense {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        auto worker = [&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                    failed = true;
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

HamiltonianModel quench_model(ModelKind kind, const SystemParams& params, double epsilon_target, int fock_cutoff) {
    if (!(epsilon_target > 0.0 && epsilon_target < 1.0)) {
        throw DomainError("quench: epsilon_target must lie in (0, 1), got " + std::to_string(epsilon_target));
    }
    HamiltonianModel m;
    m.kind = kind;
    m.params = params;
    m.schedule.k = params.k;
    m.schedule.epsilon_max = epsilon_target;
    const int cutoff = fock_cutoff > 0 ? fock_cutoff : default_fock_cutoff(epsilon_target);
    m.space = HilbertSpace(kind == ModelKind::jc2 ? 2 : 3, cutoff);
    m.validate();
    return m;
}

Trajectory run_quench(ModelKind kind, const SystemParams& params, double epsilon_target,
                      const QuenchSettings& settings) {
    const HamiltonianModel m = quench_model(kind, params, epsilon_target, settings.fock_cutoff);
    return integrate(m, ground_vacuum(m.space), m.schedule.end_time(), settings.integrator);
}

Trajectory run_quench_at(ModelKind kind, const SystemParams& params, const std::vector<double>& epsilons,
                         const QuenchSettings& settings) {
    if (epsilons.empty()) throw std::invalid_argument("run_quench_at: no working points");
    const double eps_max = *std::max_element(epsilons.begin(), epsilons.end());
    const HamiltonianModel m = quench_model(kind, params, eps_max, settings.fock_cutoff);
    IntegratorOptions opts = settings.integrator;
    opts.sample_times.clear();
    for (double e : epsilons) {
        if (e < 0.0) throw DomainError("run_quench_at: negative working point");
        opts.sample_times.push_back(m.schedule.time_of(e));
    }
    return integrate(m, ground_vacuum(m.space), m.schedule.end_time(), opts);
}

namespace {

// P_e of the record sampled at exactly ramp_time(eps).
double pe_at(const Trajectory& traj, double epsilon) {
    const auto& r = traj.nearest_epsilon(epsilon);
    if (std::abs(r.epsilon - epsilon) > 1e-9) {
        throw std::logic_error("trajectory has no sample at the requested working point");
    }
    return r.p_e;
}

void check_grid(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
    for (double v : grid) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(name) + " grid has a non-finite entry");
    }
}

void add_param_metadata(ScanResult& scan, const SystemParams& p) {
    auto put = [&](const char* k, double v) { scan.metadata.emplace_back(k, format_number(v)); };
    put("omega_rad_per_us", p.omega);
    put("k_per_us", p.k);
    put("kappa_q_per_us", p.kappa_q);
    put("kappa_r_per_us", p.kappa_r);
    put("gamma_q_per_us", p.gamma_q);
    put("chi_rad_per_us", p.chi);
    put("delta_r_rad_per_us", p.delta_r);
    put("delta_e_rad_per_us", p.delta_e);
}

}  // namespace

ScanResult::ScanResult(std::vector<ScanAxis> axes, std::vector<std::string> layers)
    : axes_(std::move(axes)), layer_names_(std::move(layers)) {
    if (axes_.empty()) throw std::invalid_argument("ScanResult needs at least one axis");
    for (const auto& a : axes_) {
        if (a.values.empty()) throw std::invalid_argument("ScanResult axis '" + a.name + "' is empty");
    }
    values_.assign(layer_names_.size(), std::vector<double>(size(), std::numeric_limits<double>::quiet_NaN()));
}

std::size_t ScanResult::size() const {
    std::size_t n = axes_.empty() ? 0 : 1;
    for (const auto& a : axes_) n *= a.values.size();
    return n;
}

std::size_t ScanResult::flat_index(const std::vector<std::size_t>& idx) const {
    if (idx.size() != axes_.size()) throw std::invalid_argument("flat_index: wrong number of indices");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        if (idx[d] >= axes_[d].values.size()) throw std::out_of_range("flat_index: index out of range");
        flat = flat * axes_[d].values.size() + idx[d];
    }
    return flat;
}

std::vector<std::size_t> ScanResult::unflatten(std::size_t flat) const {
    if (flat >= size()) throw std::out_of_range("unflatten: index out of range");
    std::vector<std::size_t> idx(axes_.size());
    for (std::size_t d = axes_.size(); d-- > 0;) {
        idx[d] = flat % axes_[d].values.size();
        flat /= axes_[d].values.size();
    }
    return idx;
}

std::size_t ScanResult::layer_index(const std::string& name) const {
    const auto it = std::find(layer_names_.begin(), layer_names_.end(), name);
    if (it == layer_names_.end()) throw std::out_of_range("no layer named '" + name + "'");
    return static_cast<std::size_t>(it - layer_names_.begin());
}

double& ScanResult::at(const std::string& layer, std::size_t flat) { return values_.at(layer_index(layer)).at(flat); }

double ScanResult::at(const std::string& layer, std::size_t flat) const {
    return values_.at(layer_index(layer)).at(flat);
}

const std::vector<double>& ScanResult::layer(const std::string& name) const { return values_.at(layer_index(name)); }

void ScanResult::validate() const {
    if (values_.size() != layer_names_.size()) throw std::logic_error("ScanResult layer count mismatch");
    for (std::size_t l = 0; l < values_.size(); ++l) {
        if (values_[l].size() != size()) {
            throw std::logic_error("ScanResult layer '" + layer_names_[l] + "' does not match the grid");
        }
    }
}

void write_scan_csv(std::ostream& os, const ScanResult& scan) {
    scan.validate();
    CsvWriter csv(os);
    for (const auto& [k, v] : scan.metadata) csv.comment(k, v);
    std::vector<std::string> cols;
    for (const auto& a : scan.axes()) cols.push_back(a.name);
    for (const auto& l : scan.layers()) cols.push_back(l);
    csv.header(cols);
    std::vector<double> row;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        row.clear();
        const auto idx = scan.unflatten(i);
        for (std::size_t d = 0; d < idx.size(); ++d) row.push_back(scan.axes()[d].values[idx[d]]);
        for (const auto& l : scan.layers()) row.push_back(scan.at(l, i));
        csv.row(row);
    }
}

void write_gnuplot_matrix(std::ostream& os, const ScanResult& scan, const std::string& layer) {
    if (scan.axes().size() != 2) throw std::invalid_argument("gnuplot matrix output needs a two-axis scan");
    const auto& rows = scan.axes()[0].values;
    const auto& cols = scan.axes()[1].values;
    const auto& v = scan.layer(layer);
    os << "# " << layer << ": rows " << scan.axes()[0].name << ", columns " << scan.axes()[1].name << '\n';
    os << cols.size();
    for (double c : cols) os << ' ' << format_number(c);
    os << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        os << format_number(rows[i]);
        for (std::size_t j = 0; j < cols.size(); ++j) os << ' ' << format_number(v[i * cols.size() + j]);
        os << '\n';
    }
}

ScanResult relative_error_scan(const std::vector<double>& epsilon_w, const std::vector<double>& k_values,
                               const std::vector<RateSet>& rate_sets, const SystemParams& params,
                               const ScanSettings& settings) {
    check_grid(epsilon_w, "epsilon_w");
    check_grid(k_values, "k");
    if (rate_sets.empty()) throw std::invalid_argument("relative_error_scan: no rate sets");
    for (double e : epsilon_w) {
        if (!(e > 0.0 && e < 1.0)) throw DomainError("relative_error_scan: epsilon_w must lie in (0, 1)");
    }
    for (double k : k_values) {
        if (!(k > 0.0)) throw DomainError("relative_error_scan: k must be positive");
    }

    std::vector<double> set_index(rate_sets.size());
    for (std::size_t i = 0; i < rate_sets.size(); ++i) set_index[i] = static_cast<double>(i);
    ScanResult scan({{"rate_set", set_index}, {"epsilon_w", epsilon_w}, {"k_per_us", k_values}},
                    {"pe", "pe_ideal", "D", "flag"});
    add_param_metadata(scan, params);
    for (std::size_t i = 0; i < rate_sets.size(); ++i) {
        std::ostringstream os;
        os << format_number(rate_sets[i].kappa_q) << ' ' << format_number(rate_sets[i].kappa_r) << ' '
           << format_number(rate_sets[i].gamma_q);
        scan.metadata.emplace_back("rate_set_" + std::to_string(i) + "_kappa_q_kappa_r_gamma_q", os.str());
    }

    const std::size_t nk = k_values.size();
    const std::size_t ne = epsilon_w.size();
    std::vector<Trajectory> runs(rate_sets.size() * nk);
    parallel_for(runs.size(), settings.jobs, [&](std::size_t job) {
        SystemParams p = params;
        p.kappa_q = rate_sets[job / nk].kappa_q;
        p.kappa_r = rate_sets[job / nk].kappa_r;
        p.gamma_q = rate_sets[job / nk].gamma_q;
        p.k = k_values[job % nk];
        QuenchSettings qs = settings.quench;
        qs.integrator.record_fidelity = false;
        runs[job] = run_quench_at(ModelKind::jc2, p, epsilon_w, qs);
    });

    for (std::size_t s = 0; s < rate_sets.size(); ++s) {
        for (std::size_t e = 0; e < ne; ++e) {
            for (std::size_t k = 0; k < nk; ++k) {
                const std::size_t cell = scan.flat_index({s, e, k});
                const double pe = pe_at(runs[s * nk + k], epsilon_w[e]);
                const double ideal = dark_state_pe(epsilon_w[e]);
                const double d = std::abs(pe - ideal) / ideal;
                scan.at("pe", cell) = pe;
                scan.at("pe_ideal", cell) = ideal;
                scan.at("D", cell) = d;
                scan.at("flag", cell) = d <= kRelativeErrorFlag ? 1.0 : 0.0;
            }
        }
    }
    return scan;
}

DetuningScanResult detuning_scan(const std::vector<double>& delta_r, const std::vector<double>& delta_e,
                                 const SystemParams& params, double epsilon_target, const ScanSettings& settings) {
    check_grid(delta_r, "delta_r");
    check_grid(delta_e, "delta_e");
    DetuningScanResult out;
    out.scan = ScanResult({{"delta_r_rad_per_us", delta_r}, {"delta_e_rad_per_us", delta_e}},
                          {"max_p_f", "p_e_end", "fidelity_end"});
    add_param_metadata(out.scan, params);
    out.scan.metadata.emplace_back("epsilon_target", format_number(epsilon_target));

    ScanResult& scan = out.scan;
    const std::size_t ne = delta_e.size();
    std::vector<TrajectoryRecord> last(scan.size());
    std::vector<double> max_pf(scan.size());
    parallel_for(scan.size(), settings.jobs, [&](std::size_t cell) {
        SystemParams p = params;
        p.delta_r = delta_r[cell / ne];
        p.delta_e = delta_e[cell % ne];
        QuenchSettings qs = settings.quench;
        qs.integrator.check_positivity = false;
        const Trajectory traj = run_quench(ModelKind::qutrit_detuned, p, epsilon_target, qs);
        max_pf[cell] = traj.max_p_f();
        last[cell] = traj.back();
    });

    std::size_t best = 0;
    for (std::size_t cell = 0; cell < scan.size(); ++cell) {
        scan.at("max_p_f", cell) = max_pf[cell];
        scan.at("p_e_end", cell) = last[cell].p_e;
        scan.at("fidelity_end", cell) = last[cell].fidelity;
        if (max_pf[cell] < max_pf[best]) best = cell;
    }
    out.best_delta_r = delta_r[best / ne];
    out.best_delta_e = delta_e[best % ne];
    out.best_max_p_f = max_pf[best];
    scan.metadata.emplace_back("argmin_delta_r_rad_per_us", format_number(out.best_delta_r));
    scan.metadata.emplace_back("argmin_delta_e_rad_per_us", format_number(out.best_delta_e));
    return out;
}

ScanResult frequency_robustness_scan(const std::vector<double>& delta_omega, const SystemParams& params,
                                     double epsilon_w, DetuningMode mode, const ScanSettings& settings) {
    check_grid(delta_omega, "delta_omega");
    ScanResult scan({{"delta_omega_rad_per_us", delta_omega}}, {"pe", "n_avg"});
    add_param_metadata(scan, params);
    scan.metadata.emplace_back("epsilon_w", format_number(epsilon_w));
    scan.metadata.emplace_back("detuning_mode", mode == DetuningMode::common ? "common" : "resonator");

    std::vector<TrajectoryRecord> out(delta_omega.size());
    parallel_for(delta_omega.size(), settings.jobs, [&](std::size_t i) {
        SystemParams p = params;
        p.delta_r = delta_omega[i];
        p.delta_e = mode == DetuningMode::common ? delta_omega[i] : 0.0;
        QuenchSettings qs = settings.quench;
        qs.integrator.record_fidelity = false;
        out[i] = run_quench_at(ModelKind::jc2, p, {epsilon_w}, qs).back();
    });
    for (std::size_t i = 0; i < delta_omega.size(); ++i) {
        scan.at("pe", i) = out[i].p_e;
        scan.at("n_avg", i) = out[i].n_avg;
    }
    return scan;
}

std::vector<double> grid_derivative(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("grid_derivative: size mismatch");
    if (n < 3) throw std::invalid_argument("grid_derivative: need at least 3 points for finite differences");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(x[i] > x[i - 1])) throw std::invalid_argument("grid_derivative: grid must be strictly increasing");
    }
    // Derivative at x[c] of the parabola through points i, i+1, i+2.
    auto three_point = [&](std::size_t i, std::size_t c) {
        const double x0 = x[i], x1 = x[i + 1], x2 = x[i + 2], xc = x[c];
        return y[i] * (2 * xc - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
               y[i + 1] * (2 * xc - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
               y[i + 2] * (2 * xc - x0 - x1) / ((x2 - x0) * (x2 - x1));
    };
    std::vector<double> d(n);
    d[0] = three_point(0, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = three_point(i - 1, i);
    d[n - 1] = three_point(n - 3, n - 1);
    return d;
}

std::vector<double> fisher_from_pe(const std::vector<double>& eps, const std::vector<double>& pe,
                                   DerivativeMode mode) {
    std::vector<double> f(eps.size());
    if (mode == DerivativeMode::finite_difference) {
        const auto d = grid_derivative(eps, pe);
        for (std::size_t i = 0; i < eps.size(); ++i) f[i] = fisher_two_outcome(pe[i], d[i]);
    } else {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < eps.size(); ++i) pts.emplace_back(eps[i], pe[i]);
        const double c = fit_pe_curve(pts).c;
        for (std::size_t i = 0; i < eps.size(); ++i) {
            f[i] = fisher_two_outcome(c * dark_state_pe(eps[i]), c * dark_state_pe_derivative(eps[i]));
        }
    }
    return f;
}

ErrorBudget error_budget(const std::vector<double>& epsilons, const SystemParams& params, DerivativeMode mode,
                         const ScanSettings& settings) {
    if (epsilons.size() < 3) {
        throw std::invalid_argument("error_budget: grid too coarse, need at least 3 points");
    }
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0 && epsilons[i] < 1.0)) throw DomainError("error_budget: epsilon must lie in (0, 1)");
        if (i > 0 && !(epsilons[i] > epsilons[i - 1])) {
            throw std::invalid_argument("error_budget: grid must be strictly increasing");
        }
    }

    const SystemParams variants[2] = {params.without_dissipation(), params};
    std::vector<double> pe[2];
    parallel_for(2, settings.jobs, [&](std::size_t v) {
        QuenchSettings qs = settings.quench;
        qs.integrator.record_fidelity = false;
        const Trajectory traj = run_quench_at(ModelKind::jc2, variants[v], epsilons, qs);
        for (double e : epsilons) pe[v].push_back(pe_at(traj, e));
    });
    const auto f_h = fisher_from_pe(epsilons, pe[0], mode);
    const auto f_me = fisher_from_pe(epsilons, pe[1], mode);

    ErrorBudget budget;
    budget.mode = mode;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        ErrorBudgetEntry e;
        e.epsilon = epsilons[i];
        e.fisher_ideal = 1.0 / (1.0 - epsilons[i] * epsilons[i]);
        e.fisher_hamiltonian = f_h[i];
        e.fisher_master = f_me[i];
        e.deviation_nonadiabatic = std::abs(f_h[i] - e.fisher_ideal) / e.fisher_ideal;
        e.deviation_decoherence = std::abs(f_me[i] - f_h[i]) / e.fisher_ideal;
        budget.entries.push_back(e);
    }
    return budget;
}

void write_error_budget_csv(std::ostream& os, const ErrorBudget& budget) {
    CsvWriter csv(os);
    csv.comment("derivative", budget.mode == DerivativeMode::fit ? "fit" : "finite_difference");
    csv.header({"epsilon", "F_ideal", "F_hamiltonian", "F_master", "deviation_nonadiabatic", "deviation_decoherence"});
    for (const auto& e : budget.entries) {
        csv.row({e.epsilon, e.fisher_ideal, e.fisher_hamiltonian, e.fisher_master, e.deviation_nonadiabatic,
                 e.deviation_decoherence});
    }
}

RabiMethodResult rabi_method_sim(double eps0, int n, double delta_eps, double delta_t) {
    if (n <= 0 || n % 2 == 0) throw std::invalid_argument("rabi_method_sim: n must be a positive odd integer");
    if (!(eps0 > 0.0)) throw std::invalid_argument("rabi_method_sim: eps0 must be positive");
    RabiMethodResult r;
    r.t_n = n * kPi / (2.0 * eps0);
    const double sign = ((n - 1) / 2) % 2 == 0 ? 1.0 : -1.0;
    // -cos(n pi/2 + x) = sign * sin(x) for odd n, which avoids the O(1e-16) residue of cos(n pi / 2).
    r.delta_pe_exact = 0.5 * sign * std::sin(delta_eps * r.t_n);
    r.delta_pe_linear = 0.5 * sign * delta_eps * r.t_n;
    r.timing_delta_pe = 0.5 * sign * eps0 * delta_t;
    return r;
}

RampRobustnessResult ramping_time_robustness(double epsilon_target, const std::vector<double>& ramp_times,
                                             const SystemParams& params, const ScanSettings& settings) {
    check_grid(ramp_times, "T");
    if (!(epsilon_target > 0.0 && epsilon_target < 1.0)) {
        throw DomainError("ramping_time_robustness: epsilon_target must lie in (0, 1)");
    }
    for (double t : ramp_times) {
        if (!(t > 0.0)) throw DomainError("ramping_time_robustness: ramp times must be positive");
    }

    RampRobustnessResult out;
    out.t_reference = ramp_time(epsilon_target, params.k);
    out.scan = ScanResult({{"T_us", ramp_times}}, {"k_per_us", "pe", "ratio"});
    add_param_metadata(out.scan, params);
    out.scan.metadata.emplace_back("epsilon_target", format_number(epsilon_target));
    out.scan.metadata.emplace_back("T_reference_us", format_number(out.t_reference));

    const double sqrt_a = std::sqrt(1.0 - epsilon_target * epsilon_target);
    // Job 0 is the reference ramp at params.k.
    std::vector<double> pe(ramp_times.size() + 1);
    parallel_for(pe.size(), settings.jobs, [&](std::size_t j) {
        SystemParams p = params;
        if (j > 0) p.k = epsilon_target / (ramp_times[j - 1] * sqrt_a);
        QuenchSettings qs = settings.quench;
        qs.integrator.record_fidelity = false;
        pe[j] = run_quench_at(ModelKind::jc2, p, {epsilon_target}, qs).back().p_e;
    });
    out.pe_reference = pe[0];
    out.scan.metadata.emplace_back("pe_reference", format_number(out.pe_reference));
    for (std::size_t i = 0; i < ramp_times.size(); ++i) {
        out.scan.at("k_per_us", i) = epsilon_target / (ramp_times[i] * sqrt_a);
        out.scan.at("pe", i) = pe[i + 1];
        out.scan.at("ratio", i) = pe[i + 1] / out.pe_reference;
    }
    return out;
}

std::vector<std::pair<double, double>> binned_mean(const std::vector<double>& x, const std::vector<double>& y,
                                                   double width) {
    if (x.size() != y.size()) throw std::invalid_argument("binned_mean: size mismatch");
    if (!(width > 0.0)) throw std::invalid_argument("binned_mean: bin width must be positive");
    std::map<long, std::pair<double, int>> bins;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto& b = bins[static_cast<long>(std::floor(x[i] / width))];
        b.first += y[i];
        ++b.second;
    }
    std::vector<std::pair<double, double>> out;
    for (const auto& [k, b] : bins) out.emplace_back((k + 0.5) * width, b.first / b.second);
    return out;
}

}  // namespace critsense
