#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fraclab/fractional.hpp"

namespace fraclab {

struct LadderConfig {
  double y_factor = 14.0;  ///< truncation height Y = y_factor / sqrt(lambda_1)
  int ny = 64;             ///< number of y-intervals
  double gamma = 3.0;      ///< grading exponent, y_j = Y (j / ny)^gamma
};

/// The default ladder with the grading raised in steps of 1/2 until y_1^{2s} <= 1e-3.
LadderConfig ladder_config_for(double lambda_1, double s, int ny = 64);

/// Nodes 0 = y_0 < y_1 < ... < y_ny = Y of the truncated extension variable.
class YLadder {
public:
  /// Graded ladder for order s over a domain with principal eigenvalue lambda_1. Throws
  /// InvalidArgument ("ladder_too_coarse") unless y_1^{2s} <= 1e-3.
  static YLadder graded(double lambda_1, double s, const LadderConfig& config = {});
  /// Arbitrary strictly increasing nodes starting at 0.
  static YLadder from_nodes(std::vector<double> nodes);
  static YLadder uniform(double height, int intervals);

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  double operator[](std::size_t j) const { return nodes_[j]; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t intervals() const noexcept { return nodes_.size() - 1; }
  double height() const noexcept { return nodes_.back(); }

private:
  explicit YLadder(std::vector<double> nodes);
  std::vector<double> nodes_;
};

/// U(x_i, y_j) over interior dofs (rows) and ladder nodes (columns).
struct ExtensionField {
  std::shared_ptr<const Grid> grid;
  YLadder ladder;
  double s = 0.5;
  Eigen::MatrixXd values;

  GridFunction slice(std::size_t j) const { return values.col(static_cast<Eigen::Index>(j)); }
  GridFunction trace() const { return values.col(0); }
};

/// Integrals of the weight y^a against the linear hat products on [y0, y1]:
/// w0 = int y^a, w00 = int y^a (1-eta)^2, w01 = int y^a eta (1-eta), w11 = int y^a eta^2.
struct IntervalWeights {
  double w0, w00, w01, w11;
};
IntervalWeights weight_moments(double y0, double y1, double a);

/// Per-mode extension profile
///   rho_s(lambda, y) = y^{2s} / (4^s Gamma(s)) int_0^inf e^{-y^2/4t} e^{-lambda t} t^{-1-s} dt,
/// with rho_s(lambda, 0) = 1.
double kernel_profile(double s, double lambda, double y, const QuadratureConfig& config = {1e-13, 0.5, 16});

/// U(., y) = sum_k u_k rho_s(lambda_k, y) phi_k.
ExtensionField extend_spectral(const FracPower& fp, const GridFunction& u, const YLadder& ladder);

/// Conforming P1(x) x P1(y) solution of div(y^a B grad U) = 0 on the truncated cylinder:
/// U(., 0) = u, U = 0 on the lateral boundary, natural (zero flux) condition at y = Y.
/// The weight is integrated exactly against the hat functions on every y-interval.
ExtensionField extend_direct(const FracPower& fp, const AssembledOperator& op, const GridFunction& u,
                             const YLadder& ladder);

/// Weighted Dirichlet energy int int y^a (A grad_x U . grad_x U + U_y^2) of a field that is
/// piecewise linear in y between ladder nodes; `stiffness` is the x-stiffness of A.
double cylinder_energy(const Eigen::MatrixXd& values, const YLadder& ladder, double a,
                       const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass);
double cylinder_energy(const ExtensionField& field, const AssembledOperator& op);

struct TraceResult {
  GridFunction value;          ///< extrapolated c_s L^s u
  double error_estimate = 0;   ///< relative change between the two highest extrapolation orders
  bool monotone = true;        ///< false raises an accuracy warning
};

/// Richardson extrapolation to y -> 0 of -(U(., y_j) - U(., 0)) / y_j^{2s} over the first
/// `window` positive ladder nodes, fitting the expansion in y^{2-2s}, y^2, y^{4-2s}, ...
TraceResult neumann_trace(const ExtensionField& field, int window = 4);

/// Discrete conormal trace of a field solving the discrete extension problem (extend_direct):
/// M^{-1} a(U, psi_i chi_0) / (2s), where chi_0 is the hat function of the node y = 0 and a
/// the weighted bilinear form. Approximates c_s L^s u. The difference quotients used by
/// neumann_trace cannot resolve y^{2s} below the discretization error of a finite element
/// field, so direct fields use this variational form instead.
TraceResult flux_trace(const ExtensionField& field, const AssembledOperator& op);

/// CSV rows "i,j,x[,x2],y,U" for every interior dof and ladder node.
void write_field_csv(std::ostream& out, const ExtensionField& field);

}  // namespace fraclab
