#include "critsense/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "critsense/csv.hpp"
#include "critsense/errors.hpp"

namespace critsense {

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::jc2: return "jc2";
        case ModelKind::qutrit_resonant: return "qutrit_resonant";
        case ModelKind::qutrit_detuned: return "qutrit_detuned";
    }
    return "unknown";
}

namespace {

void require_levels(const OperatorSet& ops, int levels, const char* who) {
    if (ops.space.qubit_levels() != levels) {
        throw std::invalid_argument(std::string(who) + " requires a " + std::to_string(levels) +
                                    "-level qubit space");
    }
}

ComplexMatrix qutrit_core(double epsilon, const SystemParams& params, const OperatorSet& ops) {
    const ComplexMatrix coupling = ops.a_dag * ops.q;
    return -params.chi * ops.projector(kF, kF) +
           params.omega * (coupling + coupling.adjoint() + 0.5 * epsilon * (ops.a + ops.a_dag));
}

}  // namespace

ComplexMatrix build_hamiltonian_jc2(double epsilon, const SystemParams& params, const OperatorSet& ops) {
    require_levels(ops, 2, "build_hamiltonian_jc2");
    ComplexMatrix h = driven_jc_hamiltonian(ops, epsilon, params.omega);
    if (params.delta_r != 0.0) h += params.delta_r * ops.number;
    if (params.delta_e != 0.0) h += params.delta_e * ops.projector(kE, kE);
    return h;
}

ComplexMatrix build_hamiltonian_qutrit(double epsilon, const SystemParams& params, const OperatorSet& ops) {
    require_levels(ops, 3, "build_hamiltonian_qutrit");
    return qutrit_core(epsilon, params, ops);
}

ComplexMatrix build_hamiltonian_qutrit_detuned(double epsilon, const SystemParams& params,
                                               const OperatorSet& ops) {
    require_levels(ops, 3, "build_hamiltonian_qutrit_detuned");
    return qutrit_core(epsilon, params, ops) + params.delta_e * ops.projector(kE, kE) +
           2.0 * params.delta_e * ops.projector(kF, kF) + params.delta_r * ops.number;
}

ComplexMatrix lindblad_rhs(const ComplexMatrix& rho, const ComplexMatrix& hamiltonian,
                           std::span<const Collapse> collapse) {
    if (rho.rows() != rho.cols() || hamiltonian.rows() != rho.rows() || hamiltonian.cols() != rho.cols()) {
        throw DimensionError("lindblad_rhs: state and Hamiltonian dimensions differ");
    }
    const Complex i(0.0, 1.0);
    ComplexMatrix out = -i * (hamiltonian * rho - rho * hamiltonian);
    for (const Collapse& c : collapse) {
        if (c.rate < 0.0) throw std::invalid_argument("lindblad_rhs: negative rate");
        if (c.op.rows() != rho.rows() || c.op.cols() != rho.cols()) {
            throw DimensionError("lindblad_rhs: collapse operator dimension differs");
        }
        if (c.rate == 0.0) continue;
        const ComplexMatrix od_o = c.op.adjoint() * c.op;
        out += c.rate * (c.op * rho * c.op.adjoint() - 0.5 * (od_o * rho + rho * od_o));
    }
    return out;
}

ComplexMatrix lindblad_rhs(const QuantumState& rho, const ComplexMatrix& hamiltonian,
                           std::span<const Collapse> collapse) {
    return lindblad_rhs(rho.to_density(), hamiltonian, collapse);
}

void HamiltonianModel::validate() const {
    params.validate();
    const int levels = space.qubit_levels();
    if (kind == ModelKind::jc2 && levels != 2) {
        throw std::invalid_argument("jc2 model requires qubit_levels = 2");
    }
    if (kind != ModelKind::jc2 && levels != 3) {
        throw std::invalid_argument(std::string(to_string(kind)) + " model requires qubit_levels = 3");
    }
    if (schedule.k < 0.0) throw std::invalid_argument("ramp coefficient must be non-negative");
}

ComplexMatrix HamiltonianModel::hamiltonian(double epsilon, const OperatorSet& ops) const {
    switch (kind) {
        case ModelKind::jc2: return build_hamiltonian_jc2(epsilon, params, ops);
        case ModelKind::qutrit_resonant: return build_hamiltonian_qutrit(epsilon, params, ops);
        case ModelKind::qutrit_detuned: return build_hamiltonian_qutrit_detuned(epsilon, params, ops);
    }
    throw std::logic_error("unknown model kind");
}

std::vector<Collapse> HamiltonianModel::collapse_operators(const OperatorSet& ops) const {
    std::vector<Collapse> out;
    if (params.kappa_q > 0.0) out.push_back({params.kappa_q, ops.q});
    if (params.gamma_q > 0.0) out.push_back({params.gamma_q, ops.q_dag * ops.q});
    if (params.kappa_r > 0.0) out.push_back({params.kappa_r, ops.a});
    return out;
}

HamiltonianModel HamiltonianModel::with_cutoff(int fock_cutoff) const {
    HamiltonianModel m = *this;
    m.space = HilbertSpace(space.qubit_levels(), fock_cutoff);
    return m;
}

int default_fock_cutoff(double epsilon_max) { return epsilon_max <= 0.9 ? 30 : 60; }

QuantumState ground_vacuum(const HilbertSpace& space) {
    ComplexMatrix rho = ComplexMatrix::Zero(space.dim(), space.dim());
    rho(space.index(kG, 0), space.index(kG, 0)) = 1.0;
    return QuantumState::from_density(std::move(rho));
}

const TrajectoryRecord& Trajectory::nearest_epsilon(double epsilon) const {
    if (records.empty()) throw std::logic_error("empty trajectory");
    return *std::min_element(records.begin(), records.end(), [&](const auto& a, const auto& b) {
        return std::abs(a.epsilon - epsilon) < std::abs(b.epsilon - epsilon);
    });
}

double Trajectory::max_p_f() const {
    double m = 0.0;
    for (const auto& r : records) m = std::max(m, r.p_f);
    return m;
}

std::vector<std::string> check_invariants(const Trajectory& traj, const InvariantTolerances& tol) {
    std::vector<std::string> problems;
    auto report = [&](const TrajectoryRecord& r, const std::string& what, double value) {
        std::ostringstream os;
        os << "t = " << r.t << " us: " << what << " = " << value;
        problems.push_back(os.str());
    };
    for (const auto& r : traj.records) {
        for (double p : {r.p_g, r.p_e, r.p_f}) {
            if (p < -tol.population || p > 1.0 + tol.population) report(r, "population", p);
        }
        const double sum = r.p_g + r.p_e + r.p_f;
        if (std::abs(sum - r.trace) > tol.population) report(r, "population sum minus trace", sum - r.trace);
        if (std::abs(r.trace - 1.0) > tol.trace) report(r, "trace", r.trace);
        if (r.hermiticity_error > tol.hermiticity) report(r, "hermiticity error", r.hermiticity_error);
        if (!std::isnan(r.min_eigenvalue) && r.min_eigenvalue < -tol.positivity) {
            report(r, "min eigenvalue", r.min_eigenvalue);
        }
    }
    return problems;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    CsvWriter csv(os);
    csv.header({"t_us", "epsilon", "P_g", "P_e", "P_f", "n_avg", "fidelity", "trace"});
    for (const auto& r : traj.records) {
        csv.row({r.t, r.epsilon, r.p_g, r.p_e, r.p_f, r.n_avg, r.fidelity, r.trace});
    }
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

// Populations, <a_dag a> and trace read off the diagonal.
struct DiagonalObservables {
    double p[3] = {0.0, 0.0, 0.0};
    double n_avg = 0.0;
    double trace = 0.0;
};

DiagonalObservables diagonal_observables(const HilbertSpace& space, const ComplexMatrix& rho) {
    DiagonalObservables obs;
    for (int level = 0; level < space.qubit_levels(); ++level) {
        for (int n = 0; n < space.fock_dim(); ++n) {
            const int idx = space.index(level, n);
            const double d = rho(idx, idx).real();
            obs.p[level] += d;
            obs.n_avg += n * d;
        }
    }
    obs.trace = obs.p[0] + obs.p[1] + obs.p[2];
    return obs;
}

// Right-hand side specialised to Hermitian rho with H(eps) = H0 + eps H1:
// d(rho) = -i (Heff rho - h.c.) + sum L rho L_dag, Heff = H - (i/2) sum L_dag L.
// Products are formed as dense * sparse (rho Heff_dag = (Heff rho)_dag), which
// Eigen evaluates much faster than sparse * dense.
class Propagator {
public:
    Propagator(const HamiltonianModel& model, const OperatorSet& ops) : schedule_(model.schedule) {
        const ComplexMatrix h0 = model.hamiltonian(0.0, ops);
        const ComplexMatrix h1 = model.hamiltonian(1.0, ops) - h0;
        const Complex i(0.0, 1.0);
        ComplexMatrix heff0 = h0;
        double dissipative_bound = 0.0;
        for (const Collapse& c : model.collapse_operators(ops)) {
            const ComplexMatrix l = std::sqrt(c.rate) * c.op;
            const ComplexMatrix ldl = l.adjoint() * l;
            heff0 -= 0.5 * i * ldl;
            jumps_dag_.push_back(l.adjoint().sparseView());
            dissipative_bound += 2.0 * ldl.cwiseAbs().rowwise().sum().maxCoeff();
        }
        heff0_dag_ = heff0.adjoint().sparseView();
        h1_dag_ = h1.adjoint().sparseView();

        // The Liouvillian's coherent eigenvalues are energy differences; the
        // spread of an affine H(eps) is largest at an end of the ramp.
        auto spread = [](const ComplexMatrix& h) {
            Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
            return es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff();
        };
        const double eps_max = std::max(model.schedule.epsilon_max, 0.0);
        spectral_bound_ = std::max(spread(h0), spread(h0 + eps_max * h1)) + dissipative_bound;
    }

    double epsilon_at(double t) const { return schedule_.epsilon(t); }
    double spectral_bound() const { return spectral_bound_; }

    void rhs(double t, const ComplexMatrix& rho, ComplexMatrix& out) {
        const double eps = epsilon_at(t);
        const Complex i(0.0, 1.0);
        // w = rho Heff_dag = (Heff rho)_dag
        if (eps != 0.0) {
            heff_dag_ = heff0_dag_ + eps * h1_dag_;
            w_.noalias() = rho * heff_dag_;
        } else {
            w_.noalias() = rho * heff0_dag_;
        }
        out = i * w_;
        out.noalias() -= i * w_.adjoint();
        for (const SparseMatrix& l_dag : jumps_dag_) {
            w_.noalias() = rho * l_dag;
            z_ = w_.adjoint();  // L rho
            out.noalias() += z_ * l_dag;
        }
    }

    // One RK4 step; k1 may be supplied when already known.
    void rk4(double t, const ComplexMatrix& rho, double h, ComplexMatrix& out, const ComplexMatrix* k1_in) {
        const ComplexMatrix* k1 = k1_in;
        if (!k1) {
            rhs(t, rho, k1_);
            k1 = &k1_;
        }
        stage_ = rho + (0.5 * h) * (*k1);
        rhs(t + 0.5 * h, stage_, k2_);
        stage_ = rho + (0.5 * h) * k2_;
        rhs(t + 0.5 * h, stage_, k3_);
        stage_ = rho + h * k3_;
        rhs(t + h, stage_, k4_);
        out = rho + (h / 6.0) * (*k1 + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    RampSchedule schedule_;
    SparseMatrix heff0_dag_;
    SparseMatrix h1_dag_;
    SparseMatrix heff_dag_;
    std::vector<SparseMatrix> jumps_dag_;
    double spectral_bound_ = 0.0;
    ComplexMatrix k1_, k2_, k3_, k4_, stage_, w_, z_;
};

double step_difference(const HilbertSpace& space, const ComplexMatrix& a, const ComplexMatrix& b) {
    const DiagonalObservables oa = diagonal_observables(space, a);
    const DiagonalObservables ob = diagonal_observables(space, b);
    double d = std::abs(oa.n_avg - ob.n_avg);
    d = std::max(d, std::abs(oa.trace - ob.trace));
    for (int l = 0; l < 3; ++l) d = std::max(d, std::abs(oa.p[l] - ob.p[l]));
    return std::max(d, (a - b).norm());
}

TrajectoryRecord make_record(const HamiltonianModel& model, double t, double eps, const ComplexMatrix& rho,
                             const IntegratorOptions& options) {
    const DiagonalObservables obs = diagonal_observables(model.space, rho);
    TrajectoryRecord r;
    r.t = t;
    r.epsilon = eps;
    r.p_g = obs.p[kG];
    r.p_e = obs.p[kE];
    r.p_f = obs.p[kF];
    r.n_avg = obs.n_avg;
    r.trace = obs.trace;
    r.purity = rho.cwiseAbs2().sum();
    r.hermiticity_error = hermiticity_error(rho);
    r.fidelity = std::numeric_limits<double>::quiet_NaN();
    r.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    if (options.record_fidelity) {
        const ComplexVector psi0 = dark_state_vector(model.space, eps, -1.0);
        r.fidelity = psi0.dot(rho * psi0).real();
    }
    if (options.check_positivity) {
        const ComplexMatrix herm = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
        r.min_eigenvalue = es.eigenvalues().minCoeff();
    }
    return r;
}

}  // namespace

Trajectory integrate(const HamiltonianModel& model, const QuantumState& rho0, double t_end,
                     const IntegratorOptions& options) {
    model.validate();
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be positive");
    if (rho0.dim() != model.space.dim()) throw DimensionError("integrate: initial state dimension mismatch");
    if (!(options.dt_max > 0.0) || !(options.tolerance > 0.0)) {
        throw std::invalid_argument("integrate: dt_max and tolerance must be positive");
    }

    std::vector<double> samples = options.sample_times;
    if (samples.empty()) {
        const int n = std::max(options.n_samples, 1);
        for (int s = 1; s <= n; ++s) samples.push_back(t_end * s / n);
    }
    std::sort(samples.begin(), samples.end());
    for (double s : samples) {
        if (s < 0.0 || s > t_end * (1.0 + 1e-12)) {
            throw std::invalid_argument("integrate: sample time outside [0, t_end]");
        }
    }

    const OperatorSet ops = build_operators(model.space);
    Propagator prop(model, ops);
    // RK4 is stable on the imaginary axis up to |z| = 2.8.
    const double dt_cap = std::min(options.dt_max, 2.5 / std::max(prop.spectral_bound(), 1e-300));

    Trajectory traj;
    traj.qubit_levels = model.space.qubit_levels();
    ComplexMatrix rho = rho0.to_density();
    double t = 0.0;
    traj.records.push_back(make_record(model, t, prop.epsilon_at(t), rho, options));

    ComplexMatrix k1, big, half, two_half;
    double h = dt_cap;
    for (double target : samples) {
        if (target <= t) {
            if (target == t && t > 0.0) {
                traj.records.push_back(make_record(model, t, prop.epsilon_at(t), rho, options));
            }
            continue;
        }
        while (t < target) {
            const double remaining = target - t;
            const bool final_piece = h >= remaining * (1.0 - 1e-12);
            const double step = final_piece ? remaining : h;

            prop.rhs(t, rho, k1);
            prop.rk4(t, rho, step, big, &k1);
            prop.rk4(t, rho, 0.5 * step, half, &k1);
            prop.rk4(t + 0.5 * step, half, 0.5 * step, two_half, nullptr);

            const double err = step_difference(model.space, big, two_half);
            if (!(err <= options.tolerance)) {
                ++traj.rejected_steps;
                h = 0.5 * step;
                if (h < options.dt_min) {
                    std::ostringstream os;
                    os << "integrate: step underflow (dt = " << h << " us) at t = " << t
                       << " us; the problem is too stiff for the requested tolerance";
                    throw StiffnessError(os.str());
                }
                continue;
            }
            // Local Richardson extrapolation of the step-doubling pair (fifth order).
            rho = two_half + (two_half - big) / 15.0;
            t = final_piece ? target : t + step;
            ++traj.accepted_steps;

            const double tr = rho.trace().real();
            if (std::abs(tr - 1.0) > options.trace_drift_max) {
                std::ostringstream os;
                os << "integrate: trace drifted to " << tr << " at t = " << t << " us";
                throw IntegrationError(os.str());
            }
            if (!final_piece && err < options.tolerance / 32.0) {
                h = std::min(2.0 * step, dt_cap);
            } else if (!final_piece) {
                h = step;
            }
        }
        traj.records.push_back(make_record(model, t, prop.epsilon_at(t), rho, options));
    }
    traj.final_rho = std::move(rho);
    return traj;
}

std::string ConvergenceReport::summary() const {
    std::ostringstream os;
    os << (passed ? "converged" : "NOT converged") << " (threshold " << threshold << ", judged on";
    for (const auto& o : observables) os << ' ' << o;
    os << ")";
    for (const auto& p : pairs) {
        os << "; N_max " << p.cutoff_low << " -> " << p.cutoff_high << ": max diff " << p.max_difference
           << " in " << p.worst_observable << " [";
        for (std::size_t i = 0; i < p.differences.size(); ++i) {
            os << (i ? ", " : "") << p.differences[i].first << ' ' << p.differences[i].second;
        }
        os << ']';
    }
    return os.str();
}

const std::vector<std::string>& convergence_observables() {
    static const std::vector<std::string> names = {"P_g", "P_e", "P_f", "n_avg", "trace", "fidelity", "max_P_f"};
    return names;
}

ConvergenceReport convergence_check(const HamiltonianModel& model,
                                    const std::function<QuantumState(const HilbertSpace&)>& rho0,
                                    double t_end, const std::vector<int>& cutoffs,
                                    const IntegratorOptions& options, double threshold,
                                    const std::vector<std::string>& observables,
                                    const std::function<void(int, const Trajectory&)>& on_trajectory) {
    if (cutoffs.size() < 2) throw std::invalid_argument("convergence_check: need at least two cutoffs");
    for (std::size_t i = 1; i < cutoffs.size(); ++i) {
        if (cutoffs[i] <= cutoffs[i - 1]) {
            throw std::invalid_argument("convergence_check: cutoffs must be strictly increasing");
        }
    }
    const auto& known = convergence_observables();
    for (const auto& o : observables) {
        if (std::find(known.begin(), known.end(), o) == known.end()) {
            throw std::invalid_argument("convergence_check: unknown observable '" + o + "'");
        }
    }

    struct Finals {
        TrajectoryRecord last;
        double max_p_f;
    };
    std::vector<Finals> finals;
    for (int cutoff : cutoffs) {
        const HamiltonianModel m = model.with_cutoff(cutoff);
        const Trajectory traj = integrate(m, rho0(m.space), t_end, options);
        finals.push_back({traj.back(), traj.max_p_f()});
        if (on_trajectory) on_trajectory(cutoff, traj);
    }

    ConvergenceReport report;
    report.cutoffs = cutoffs;
    report.threshold = threshold;
    report.observables = observables.empty() ? known : observables;
    for (std::size_t i = 1; i < finals.size(); ++i) {
        const TrajectoryRecord& a = finals[i - 1].last;
        const TrajectoryRecord& b = finals[i].last;
        ConvergencePair pair{cutoffs[i - 1], cutoffs[i], 0.0, report.observables.front(), {}};
        pair.differences = {
            {"P_g", std::abs(a.p_g - b.p_g)},
            {"P_e", std::abs(a.p_e - b.p_e)},
            {"P_f", std::abs(a.p_f - b.p_f)},
            {"n_avg", std::abs(a.n_avg - b.n_avg)},
            {"trace", std::abs(a.trace - b.trace)},
            {"fidelity", options.record_fidelity ? std::abs(a.fidelity - b.fidelity) : 0.0},
            {"max_P_f", std::abs(finals[i - 1].max_p_f - finals[i].max_p_f)},
        };
        for (const auto& [name, d] : pair.differences) {
            const bool judged =
                std::find(report.observables.begin(), report.observables.end(), name) != report.observables.end();
            if (judged && d > pair.max_difference) {
                pair.max_difference = d;
                pair.worst_observable = name;
            }
        }
        report.pairs.push_back(pair);
    }
    report.monotone = true;
    for (std::size_t i = 1; i < report.pairs.size(); ++i) {
        if (report.pairs[i].max_difference > report.pairs[i - 1].max_difference) report.monotone = false;
    }
    const ConvergencePair& last = report.pairs.back();
    report.passed = last.max_difference < threshold;
    report.worst_observable = last.worst_observable;
    report.worst_difference = last.max_difference;
    return report;
}

}  // namespace critsense
