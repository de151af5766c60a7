#pragma once

#include <functional>
#include <memory>

#include <Eigen/Dense>

#include "fraclab/extension.hpp"

namespace fraclab {

/// B(x) = [[A(x), 0], [0, 1]], the coefficient of the extended operator div(y^a B grad).
class CylinderCoefficient {
public:
  explicit CylinderCoefficient(MatrixCoefficient A) : A_(std::move(A)) {}

  /// n + 1
  int dimension() const noexcept { return A_.dimension() + 1; }
  const MatrixCoefficient& spatial() const noexcept { return A_; }
  Eigen::MatrixXd operator()(const Point& x) const;

private:
  MatrixCoefficient A_;
};

struct FunctionalReport {
  double energy = 0;          ///< int int y^a B grad U . grad U
  double trace_term = 0;      ///< 2s c_s int C U(., 0)^2
  double total = 0;           ///< energy - trace_term
  double error_estimate = 0;  ///< ladder quadrature estimate of the energy term
};

/// M(U) for the coefficients (B, C) at the order of the field.
FunctionalReport functional_M(const ExtensionField& U, const CylinderCoefficient& B,
                              const ScalarCoefficient& C);

struct CoefficientSet {
  CylinderCoefficient B;
  ScalarCoefficient C;
};

/// V(U) = M_2(U) - M_1(U).
double functional_V(const ExtensionField& U, const CoefficientSet& first, const CoefficientSet& second);

/// V(U) from the difference integrand int int y^a (B_2 - B_1) grad U . grad U
/// + 2s c_s int (C_1 - C_2) U(., 0)^2.
double functional_V_direct(const ExtensionField& U, const CoefficientSet& first,
                           const CoefficientSet& second);

/// Values at every node of the grid (boundary included) and every ladder node.
struct TensorField {
  std::shared_ptr<const Grid> grid;
  YLadder ladder;
  Eigen::MatrixXd values;  ///< node_count x ladder.size()

  using Function = std::function<double(const Point&, double)>;

  /// Zero-extends an interior field to the lateral boundary.
  static TensorField from_extension(const ExtensionField& field);
  static TensorField sample(std::shared_ptr<const Grid> grid, const YLadder& ladder, const Function& f);
};

/// A field with closed-form derivatives in (x, y); gradients have n + 1 components and the
/// Hessian is (n + 1) x (n + 1), the last index being y.
struct SmoothField {
  std::function<double(const Point&, double)> value;
  std::function<Eigen::VectorXd(const Point&, double)> gradient;
  std::function<Eigen::MatrixXd(const Point&, double)> hessian;
};

/// Mismatch of the two sides G and rhs of the identity. G and rhs both vanish wherever
/// grad U does while the terms that cancel into them stay O(1); near such points
/// `residual_terms`, scaled by the sum of the four term magnitudes, is the meaningful one.
struct PiconeCheck {
  double residual = 0;        ///< max |G - rhs| / (|G| + |rhs| + 1e-30)
  double residual_terms = 0;  ///< max |G - rhs| / (sum of term magnitudes + 1e-30)
  double max_absolute = 0;    ///< max |G - rhs|
  double min_abs_v = 0;
  std::size_t nodes = 0;      ///< number of evaluation nodes
  Point worst_x{0.0, 0.0};    ///< location of the largest `residual`
  double worst_y = 0;
};

/// Both sides of
///   y^a B X.X + div(U^2 Y) = y^a B grad U . grad U + (U^2 / v) div(y^a B grad v),
/// X = v grad(U / v), Y = y^a B grad v / v, at interior cylinder nodes (interior x, 0 < y < Y).
/// Derivatives are nonuniform five-point differences along the lattice and ladder axes; the
/// weight y^a is differentiated exactly. Throws DivisionHazard when min |v| < v_floor.
PiconeCheck picone_residual(const TensorField& U, const TensorField& v, const CylinderCoefficient& B,
                            double s, double v_floor = 1e-8);

/// Same identity with closed-form derivatives of U and v; div A is differenced numerically.
PiconeCheck picone_residual(const SmoothField& U, const SmoothField& v, const CylinderCoefficient& B,
                            double s, const Grid& grid, const YLadder& ladder, double v_floor = 1e-8);

struct RayleighResult {
  double mu = 0;                ///< smallest eigenvalue of Lambda^s - C~
  GridFunction minimizer;       ///< nodal minimizing trace, M-normalized
  Eigen::VectorXd modal;        ///< its modal coefficients
};

/// mu_1 <= 0 exactly when some nonzero trace makes M nonpositive.
RayleighResult rayleigh_min(const FracPower& fp, const ModalPotential& pot);

}  // namespace fraclab
