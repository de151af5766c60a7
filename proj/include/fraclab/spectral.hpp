#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>

#include <Eigen/Dense>

#include "fraclab/assembly.hpp"
#include "fraclab/eigen_solver.hpp"

namespace fraclab {

/// Nodal values over the interior dofs of a grid; the boundary trace is implicitly zero.
using GridFunction = Eigen::VectorXd;

/// Ascending Dirichlet eigenpairs of K phi = lambda M phi. Mode indices are zero-based
/// in code: `eigenvalues[0]` is the principal eigenvalue lambda_1.
struct SpectralDecomposition {
  std::shared_ptr<const AssembledOperator> op;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd modes;  ///< columns phi_k, M-orthonormal
  int sweeps = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
  const Grid& grid() const { return *op->grid; }
  const Eigen::MatrixXd& mass() const { return op->mass; }
  double principal() const { return eigenvalues[0]; }
  GridFunction mode(std::size_t k) const { return modes.col(static_cast<Eigen::Index>(k)); }
};

SpectralDecomposition eigendecompose(std::shared_ptr<const AssembledOperator> op,
                                     const EigenOptions& options = {});
SpectralDecomposition eigendecompose(const AssembledOperator& op, const EigenOptions& options = {});

/// Modal coefficients u_k = phi_k^T M u.
Eigen::VectorXd project(const SpectralDecomposition& dec, const GridFunction& u);
/// sum_k coeffs_k phi_k
GridFunction reconstruct(const SpectralDecomposition& dec, const Eigen::VectorXd& coeffs);

/// Heat semigroup e^{-tL} u = sum_k e^{-lambda_k t} u_k phi_k, t >= 0.
GridFunction heat_apply(const SpectralDecomposition& dec, double t, const GridFunction& u);

/// e^{-tL} u - u, evaluated mode by mode with expm1 so that small t keeps full relative
/// accuracy.
GridFunction heat_increment(const SpectralDecomposition& dec, double t, const GridFunction& u);

/// Modal heat kernel W_t(x_i, x_j) = sum_k e^{-t lambda_k} phi_k(x_i) phi_k(x_j) between
/// interior dofs i and j, t > 0.
double heat_kernel(const SpectralDecomposition& dec, double t, std::size_t i, std::size_t j);

/// ||K phi_k - lambda_k M phi_k||_2 for zero-based mode k.
double eigen_residual(const SpectralDecomposition& dec, std::size_t k);

void require_size(const SpectralDecomposition& dec, const GridFunction& u, const char* what);

/// CSV rows "k,lambda_k" with one-based k.
void write_spectrum_csv(std::ostream& out, const Eigen::VectorXd& values,
                        const char* header = "k,lambda_k");
/// Mode matrix, one row per interior dof: "dof,x[,y],phi_1,...".
void write_modes_csv(std::ostream& out, const SpectralDecomposition& dec, std::size_t count);

}  // namespace fraclab
