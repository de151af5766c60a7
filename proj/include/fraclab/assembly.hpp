#pragma once

#include <functional>
#include <iosfwd>
#include <memory>

#include <Eigen/Dense>

#include "fraclab/grid.hpp"

namespace fraclab {

/// x -> A(x), a symmetric positive definite dim x dim matrix field.
class MatrixCoefficient {
public:
  using Field = std::function<Eigen::MatrixXd(const Point&)>;

  MatrixCoefficient(int dimension, Field field);

  static MatrixCoefficient identity(int dimension);
  static MatrixCoefficient constant(const Eigen::MatrixXd& value);
  /// Scalar field times the identity.
  static MatrixCoefficient scalar(int dimension, std::function<double(const Point&)> field);

  int dimension() const noexcept { return dimension_; }
  Eigen::MatrixXd operator()(const Point& x) const;

private:
  int dimension_;
  Field field_;
};

/// x -> C(x), a real potential.
class ScalarCoefficient {
public:
  using Field = std::function<double(const Point&)>;

  explicit ScalarCoefficient(Field field) : field_(std::move(field)) {}
  static ScalarCoefficient constant(double value);

  double operator()(const Point& x) const { return field_(x); }

  ScalarCoefficient shifted(double shift) const;

private:
  Field field_;
};

/// Stiffness and consistent mass matrices of -div(A grad) on the interior dofs.
struct AssembledOperator {
  std::shared_ptr<const Grid> grid;
  MatrixCoefficient coefficient;
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;

  std::size_t size() const noexcept { return static_cast<std::size_t>(mass.rows()); }
};

/// P1 assembly with one-point centroid quadrature for A. Throws CoefficientViolation
/// when a centroid sample of A is not symmetric positive definite.
AssembledOperator assemble(std::shared_ptr<const Grid> grid, const MatrixCoefficient& A);
AssembledOperator assemble(const Grid& grid, const MatrixCoefficient& A);

/// Same stiffness integrals as `assemble` but without the SPD check; used for
/// coefficient differences such as A2 - A1, which are only semidefinite.
Eigen::MatrixXd assemble_stiffness(const Grid& grid, const MatrixCoefficient& A);

/// Consistent mass matrix (interior dofs) weighted by C: entries int C psi_i psi_j,
/// integrated with a 3-point Gauss rule (1D) or a degree-4 triangle rule (2D).
Eigen::MatrixXd assemble_weighted_mass(const Grid& grid, const ScalarCoefficient& C);

/// Coordinate-format export "i,j,value" of the nonzero entries.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& matrix);

}  // namespace fraclab
