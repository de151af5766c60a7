#pragma once

#include <Eigen/Dense>

namespace fraclab {

enum class EigenMethod {
  jacobi,          ///< cyclic Jacobi rotations (default)
  tridiagonal_qr,  ///< Householder tridiagonalization + implicit QR, for larger grids
};

struct EigenOptions {
  EigenMethod method = EigenMethod::jacobi;
  int max_sweeps = 60;
  /// Stop once the off-diagonal Frobenius norm is at most tolerance * ||A||_F.
  double tolerance = 1e-12;
};

struct EigenResult {
  Eigen::VectorXd values;   ///< ascending
  Eigen::MatrixXd vectors;  ///< columns, sign-normalized
  int sweeps = 0;
  double off_diagonal = 0.0;  ///< relative off-diagonal norm at exit (Jacobi only)
};

/// Full eigendecomposition of a symmetric matrix. Throws ConvergenceError if the
/// sweep limit is reached first.
EigenResult symmetric_eigen(const Eigen::MatrixXd& A, const EigenOptions& options = {});

/// All pairs of K x = lambda M x with M symmetric positive definite, reduced to a
/// standard problem through the Cholesky factor of M. Eigenvectors are M-orthonormal.
/// Throws SingularMass when M cannot be factored.
EigenResult generalized_eigen(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M,
                              const EigenOptions& options = {});

/// Flips each column so that its first entry of (near-)largest magnitude is positive.
void normalize_signs(Eigen::MatrixXd& vectors);

}  // namespace fraclab
