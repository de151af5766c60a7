#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fraclab/picone.hpp"

namespace fraclab {

/// Two problems L_i^s u = C_i u, L_i = -div(A_i grad), on one grid at one order s.
/// Equation 1 is the one whose solutions are claimed to vanish; equation 2 supplies U.
struct ProblemPair {
  std::shared_ptr<const SpectralDecomposition> first;
  std::shared_ptr<const SpectralDecomposition> second;
  ScalarCoefficient C1;
  ScalarCoefficient C2;
  double s = 0.5;

  /// Assembles and decomposes both operators on `grid`.
  static ProblemPair build(std::shared_ptr<const Grid> grid, const MatrixCoefficient& A1,
                           const ScalarCoefficient& C1, const MatrixCoefficient& A2,
                           const ScalarCoefficient& C2, double s, const EigenOptions& options = {});

  const MatrixCoefficient& A1() const { return first->op->coefficient; }
  const MatrixCoefficient& A2() const { return second->op->coefficient; }
  CoefficientSet set1() const { return {CylinderCoefficient(A1()), C1}; }
  CoefficientSet set2() const { return {CylinderCoefficient(A2()), C2}; }
};

struct HypothesisFlags {
  bool b_ordered = false;    ///< B_2 - B_1 positive semidefinite at every centroid
  bool c_ordered = false;    ///< C_1 - C_2 >= -1e-12 at every node
  bool c1_positive = false;  ///< C_1 > 0 at every node
  double min_b_eigen = 0;    ///< smallest eigenvalue of A_2 - A_1 seen
  double min_c_gap = 0;      ///< smallest C_1 - C_2 seen

  bool hold() const noexcept { return b_ordered && c_ordered; }
};

HypothesisFlags check_hypotheses(const ProblemPair& pair);

/// C_0 + sigma_k with sigma_k the k-th (one-based) eigenvalue of Lambda^s - C~_0, so that
/// L^s - C has 0 as its k-th eigenvalue.
ScalarCoefficient calibrate(const FracPower& fp, const ScalarCoefficient& C0, std::size_t k);
/// The shift sigma_k itself.
double calibration_shift(const FracPower& fp, const ScalarCoefficient& C0, std::size_t k);

struct NodalReport {
  bool interior_zero = false;
  std::size_t sign_changes = 0;    ///< interior edges whose end values have opposite signs
  std::size_t near_zero_nodes = 0; ///< interior nodes with |u| <= tol ||u||_inf
  std::vector<Point> locations;    ///< crossings, linearly interpolated along the edge
};

/// Sign changes over interior edges; edges to the boundary are skipped since u vanishes
/// there. Throws InvalidArgument on the zero function.
NodalReport nodal_report(const Grid& grid, const GridFunction& u, double tol = 1e-6);

enum class Verdict { consistent, vacuous, violation };
std::string to_string(Verdict verdict);

/// Which premise licenses the conclusion: the pointwise hypotheses on the coefficients or
/// the sign of V(U) directly.
enum class ComparisonMode { hypotheses, variation };

struct ComparisonOptions {
  ComparisonMode mode = ComparisonMode::hypotheses;
  double kernel_gate = 1e-6;   ///< |mu| <= gate * lambda_1^s counts as a solution
  double zero_tol = 1e-6;
  double v_slack = 0.02;       ///< V(U) >= -v_slack * energy scale counts as nonnegative
  int ny = 64;
};

struct KernelSolution {
  std::size_t mode = 0;  ///< one-based position in the spectrum of L^s - C~
  double mu = 0;
  GridFunction u;
};

struct SolutionFinding {
  KernelSolution solution;
  NodalReport nodal;
  bool equality_case = false;  ///< no interior zero but proportional to an equation 2 solution
};

struct ComparisonReport {
  HypothesisFlags hypotheses;
  std::vector<KernelSolution> second_solutions;
  double v_value = 0;       ///< min of V over the equation 2 solutions
  double v_scale = 0;       ///< energy scale used for the slack
  double m2_residual = 0;   ///< max |M_2(U)| / scale; U solves equation 2, so M_2(U) ~ 0
  bool v_nonnegative = false;
  bool cross_check = true;  ///< hypotheses imply V >= 0 held
  std::vector<SolutionFinding> first_solutions;
  Verdict verdict = Verdict::vacuous;
  bool equality_case = false;
};

/// Eigenvectors of Lambda^s - C~ whose eigenvalue passes the gate.
std::vector<KernelSolution> kernel_solutions(const FracPower& fp, const ScalarCoefficient& C, double gate);

/// Runs the comparison. The verdict is a violation only when the premise holds, both
/// equations have solutions, and some equation 1 solution has no interior zero without
/// being a multiple of an equation 2 solution (the equality case, which is flagged).
ComparisonReport run_comparison(const ProblemPair& pair, const ComparisonOptions& options = {});

}  // namespace fraclab
