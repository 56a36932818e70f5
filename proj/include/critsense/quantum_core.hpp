#pragma once

#include <complex>
#include <variant>

#include <Eigen/Dense>

namespace critsense {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Qubit (or qutrit) levels in basis order.
enum Level : int { kG = 0, kE = 1, kF = 2 };

// Truncated qubit(-qutrit) x Fock space.
// Basis ordering is qubit-major: index = level * (fock_cutoff + 1) + n.
class HilbertSpace {
public:
    HilbertSpace(int qubit_levels, int fock_cutoff);

    int qubit_levels() const { return qubit_levels_; }
    int fock_cutoff() const { return fock_cutoff_; }
    int fock_dim() const { return fock_cutoff_ + 1; }
    int dim() const { return qubit_levels_ * fock_dim(); }
    int index(int level, int n) const { return level * fock_dim() + n; }

    bool operator==(const HilbertSpace&) const = default;

private:
    int qubit_levels_;
    int fock_cutoff_;
};

// Operators lifted to the composite space. The Fock ladder is hard-truncated:
// a_dag maps |N_max> to zero.
struct OperatorSet {
    HilbertSpace space;
    ComplexMatrix identity;
    ComplexMatrix a;
    ComplexMatrix a_dag;
    ComplexMatrix number;  // a_dag * a
    ComplexMatrix q;       // |g><e| (+ sqrt(2)|e><f| for qutrits)
    ComplexMatrix q_dag;

    // |x><y| on the qubit factor, identity on the Fock factor.
    ComplexMatrix projector(int x, int y) const;
};

OperatorSet build_operators(const HilbertSpace& space);

// Fock-factor ladder operator of size (fock_cutoff+1)^2.
ComplexMatrix fock_annihilation(int fock_cutoff);

// Tensor products in the documented basis order.
ComplexMatrix lift_fock(const HilbertSpace& space, const ComplexMatrix& fock_op);
ComplexMatrix lift_qubit(const HilbertSpace& space, const ComplexMatrix& qubit_op);
ComplexVector tensor_ket(const ComplexVector& qubit, const ComplexVector& fock);

// S(r) = exp[r(a^2 - a_dag^2)/2] and D(alpha) = exp[alpha a_dag - conj(alpha) a],
// both on the Fock factor only.
ComplexMatrix squeeze(const HilbertSpace& space, double r);
ComplexMatrix displace(const HilbertSpace& space, Complex alpha);

ComplexMatrix matrix_exp(const ComplexMatrix& m);

double hermiticity_error(const ComplexMatrix& m);
bool is_hermitian(const ComplexMatrix& m, double tol = 1e-12);

// A normalized ket or a density matrix. Invariants are checked on construction.
class QuantumState {
public:
    static QuantumState from_ket(ComplexVector ket);
    static QuantumState from_density(ComplexMatrix rho);
    // |psi><psi| for a normalized ket.
    static QuantumState pure_density(const ComplexVector& ket);

    bool is_ket() const { return std::holds_alternative<ComplexVector>(data_); }
    int dim() const;
    const ComplexVector& ket() const;
    const ComplexMatrix& density_matrix() const;
    // Density matrix regardless of representation.
    ComplexMatrix to_density() const;

private:
    explicit QuantumState(std::variant<ComplexVector, ComplexMatrix> d) : data_(std::move(d)) {}
    std::variant<ComplexVector, ComplexMatrix> data_;
};

Complex expectation(const ComplexMatrix& op, const QuantumState& state);

// F = <psi|rho|psi>, or |<psi|phi>|^2 for a ket state.
double fidelity_pure(const ComplexVector& ket, const QuantumState& state);

}  // namespace critsense
