// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace isac {

using cxd = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;
using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;

// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending
// (mu_1 >= mu_2 >= ... ), eigenvector column n paired with eigenvalue n.
template <typename Scalar = double>
struct EigenDecompositionT {
    Eigen::Vector<Scalar, Eigen::Dynamic> eigenvalues;
    Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;
};
using EigenDecomposition = EigenDecompositionT<double>;

// Decomposes a Hermitian matrix. Inputs that deviate from Hermitian symmetry
// by more than 1e-8 * ||R|| are rejected rather than silently symmetrized.
template <typename Derived>
EigenDecomposition hermitian_eig(const Eigen::MatrixBase<Derived>& R_expr) {
    const MatrixXcd R = R_expr;
    if (R.rows() != R.cols()) throw std::invalid_argument("hermitian_eig: matrix not square");
    const double scale = R.norm();
    if ((R - R.adjoint()).norm() > 1e-8 * (scale > 0.0 ? scale : 1.0))
        throw std::invalid_argument("hermitian_eig: input not Hermitian within tolerance");

    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(R);
    if (solver.info() != Eigen::Success) throw std::runtime_error("hermitian_eig: solver failed");

    const Eigen::Index n = R.rows();
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
        out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return out;
}

// Solves A x = b for Hermitian positive semidefinite A with the ridge
// regularization used throughout the optimizer: when A is near singular,
// add 1e-10 * (trace/dim) * I once and retry.
inline MatrixXcd solve_hpd(const MatrixXcd& A, const MatrixXcd& b) {
    Eigen::LDLT<MatrixXcd> ldlt(A);
    const double mean_diag = std::abs(A.trace()) / static_cast<double>(A.rows());
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) {
        MatrixXcd Areg = A;
        Areg.diagonal().array() += 1e-10 * (mean_diag > 0.0 ? mean_diag : 1.0);
        return Eigen::LDLT<MatrixXcd>(Areg).solve(b);
    }
    return ldlt.solve(b);
}

}  // namespace isac
