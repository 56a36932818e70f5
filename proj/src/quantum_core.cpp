#include "critsense/quantum_core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "critsense/errors.hpp"

namespace critsense {

HilbertSpace::HilbertSpace(int qubit_levels, int fock_cutoff)
    : qubit_levels_(qubit_levels), fock_cutoff_(fock_cutoff) {
    if (qubit_levels != 2 && qubit_levels != 3) {
        throw std::invalid_argument("qubit_levels must be 2 or 3, got " + std::to_string(qubit_levels));
    }
    if (fock_cutoff < 1) {
        throw std::invalid_argument("fock_cutoff must be >= 1, got " + std::to_string(fock_cutoff));
    }
}

ComplexMatrix fock_annihilation(int fock_cutoff) {
    const int n = fock_cutoff + 1;
    ComplexMatrix a = ComplexMatrix::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        a(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    return a;
}

ComplexMatrix lift_fock(const HilbertSpace& space, const ComplexMatrix& fock_op) {
    if (fock_op.rows() != space.fock_dim() || fock_op.cols() != space.fock_dim()) {
        throw DimensionError("Fock operator does not match the space's Fock dimension");
    }
    const ComplexMatrix id = ComplexMatrix::Identity(space.qubit_levels(), space.qubit_levels());
    return Eigen::kroneckerProduct(id, fock_op).eval();
}

ComplexMatrix lift_qubit(const HilbertSpace& space, const ComplexMatrix& qubit_op) {
    if (qubit_op.rows() != space.qubit_levels() || qubit_op.cols() != space.qubit_levels()) {
        throw DimensionError("qubit operator does not match the space's qubit levels");
    }
    const ComplexMatrix id = ComplexMatrix::Identity(space.fock_dim(), space.fock_dim());
    return Eigen::kroneckerProduct(qubit_op, id).eval();
}

ComplexVector tensor_ket(const ComplexVector& qubit, const ComplexVector& fock) {
    return Eigen::kroneckerProduct(qubit, fock).eval();
}

ComplexMatrix OperatorSet::projector(int x, int y) const {
    const int levels = space.qubit_levels();
    if (x < 0 || y < 0 || x >= levels || y >= levels) {
        throw std::out_of_range("projector level outside the qubit space");
    }
    ComplexMatrix p = ComplexMatrix::Zero(levels, levels);
    p(x, y) = 1.0;
    return lift_qubit(space, p);
}

OperatorSet build_operators(const HilbertSpace& space) {
    const int levels = space.qubit_levels();
    ComplexMatrix q_local = ComplexMatrix::Zero(levels, levels);
    q_local(kG, kE) = 1.0;
    if (levels == 3) {
        q_local(kE, kF) = std::sqrt(2.0);
    }

    const ComplexMatrix a_fock = fock_annihilation(space.fock_cutoff());
    OperatorSet ops{space, {}, {}, {}, {}, {}, {}};
    ops.identity = ComplexMatrix::Identity(space.dim(), space.dim());
    ops.a = lift_fock(space, a_fock);
    ops.a_dag = ops.a.adjoint();
    ops.number = ops.a_dag * ops.a;
    ops.q = lift_qubit(space, q_local);
    ops.q_dag = ops.q.adjoint();
    return ops;
}

ComplexMatrix matrix_exp(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionError("matrix_exp requires a square matrix");
    }
    return m.exp();
}

ComplexMatrix squeeze(const HilbertSpace& space, double r) {
    const ComplexMatrix a = fock_annihilation(space.fock_cutoff());
    const ComplexMatrix a2 = a * a;
    return matrix_exp(0.5 * r * (a2 - a2.adjoint()));
}

ComplexMatrix displace(const HilbertSpace& space, Complex alpha) {
    const ComplexMatrix a = fock_annihilation(space.fock_cutoff());
    return matrix_exp(alpha * a.adjoint() - std::conj(alpha) * a);
}

double hermiticity_error(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& m, double tol) { return hermiticity_error(m) < tol; }

QuantumState QuantumState::from_ket(ComplexVector ket) {
    if (ket.size() == 0) {
        throw DimensionError("empty ket");
    }
    const double norm = ket.norm();
    if (std::abs(norm - 1.0) > 1e-10) {
        throw std::invalid_argument("ket is not normalized (norm = " + std::to_string(norm) + ")");
    }
    return QuantumState(std::move(ket));
}

QuantumState QuantumState::from_density(ComplexMatrix rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) {
        throw DimensionError("density matrix must be square and non-empty");
    }
    if (hermiticity_error(rho) > 1e-10) {
        throw std::invalid_argument("density matrix is not Hermitian");
    }
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-8) {
        throw std::invalid_argument("density matrix trace is " + std::to_string(tr));
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8) {
        throw std::invalid_argument("density matrix has a negative eigenvalue");
    }
    return QuantumState(std::move(rho));
}

QuantumState QuantumState::pure_density(const ComplexVector& ket) {
    const QuantumState k = from_ket(ket);
    return QuantumState(k.to_density());
}

int QuantumState::dim() const {
    return is_ket() ? static_cast<int>(ket().size()) : static_cast<int>(density_matrix().rows());
}

const ComplexVector& QuantumState::ket() const {
    if (!is_ket()) {
        throw std::logic_error("state is a density matrix, not a ket");
    }
    return std::get<ComplexVector>(data_);
}

const ComplexMatrix& QuantumState::density_matrix() const {
    if (is_ket()) {
        throw std::logic_error("state is a ket, not a density matrix");
    }
    return std::get<ComplexMatrix>(data_);
}

ComplexMatrix QuantumState::to_density() const {
    if (is_ket()) {
        const ComplexVector& k = ket();
        return k * k.adjoint();
    }
    return density_matrix();
}

Complex expectation(const ComplexMatrix& op, const QuantumState& state) {
    if (op.rows() != state.dim() || op.cols() != state.dim()) {
        throw DimensionError("operator and state dimensions differ");
    }
    if (state.is_ket()) {
        const ComplexVector& k = state.ket();
        return k.dot(op * k);
    }
    // tr(op rho) without forming the product.
    return (op.transpose().cwiseProduct(state.density_matrix())).sum();
}

double fidelity_pure(const ComplexVector& ket, const QuantumState& state) {
    if (ket.size() != state.dim()) {
        throw DimensionError("ket and state dimensions differ");
    }
    if (state.is_ket()) {
        return std::norm(ket.dot(state.ket()));
    }
    return ket.dot(state.density_matrix() * ket).real();
}

}  // namespace critsense
