#include "fraclab/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "fraclab/errors.hpp"

namespace fraclab {

ProblemPair ProblemPair::build(std::shared_ptr<const Grid> grid, const MatrixCoefficient& A1,
                               const ScalarCoefficient& C1, const MatrixCoefficient& A2,
                               const ScalarCoefficient& C2, double s, const EigenOptions& options) {
  validate_order(s);
  auto op1 = std::make_shared<const AssembledOperator>(assemble(grid, A1));
  auto op2 = std::make_shared<const AssembledOperator>(assemble(grid, A2));
  auto dec1 = std::make_shared<const SpectralDecomposition>(eigendecompose(op1, options));
  auto dec2 = std::make_shared<const SpectralDecomposition>(eigendecompose(op2, options));
  return ProblemPair{std::move(dec1), std::move(dec2), C1, C2, s};
}

namespace {

void require_valid(const ProblemPair& pair) {
  if (!pair.first || !pair.second) throw InvalidArgument("problem pair is missing a decomposition");
  validate_order(pair.s);
  if (pair.first->op->grid != pair.second->op->grid) {
    throw DimensionMismatch("problem pair: the two operators live on different grids");
  }
}

Point centroid(const Grid& grid, const std::vector<std::size_t>& element) {
  Point c{0.0, 0.0};
  for (std::size_t node : element) {
    c[0] += grid.nodes()[node][0];
    c[1] += grid.nodes()[node][1];
  }
  c[0] /= static_cast<double>(element.size());
  c[1] /= static_cast<double>(element.size());
  return c;
}

}  // namespace

HypothesisFlags check_hypotheses(const ProblemPair& pair) {
  require_valid(pair);
  const Grid& grid = pair.first->grid();
  HypothesisFlags flags;

  double min_eigen = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  for (const auto& element : grid.elements()) {
    const Point x = centroid(grid, element);
    const Eigen::MatrixXd a1 = pair.A1()(x);
    const Eigen::MatrixXd a2 = pair.A2()(x);
    scale = std::max({scale, a1.norm(), a2.norm()});
    // the y-block of B_2 - B_1 is 1 - 1 = 0, so the spatial block decides
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a2 - a1, Eigen::EigenvaluesOnly);
    min_eigen = std::min(min_eigen, eig.eigenvalues().minCoeff());
  }
  flags.min_b_eigen = min_eigen;
  flags.b_ordered = min_eigen >= -1e-12 * scale;

  double min_gap = std::numeric_limits<double>::infinity();
  double min_c1 = std::numeric_limits<double>::infinity();
  for (const Point& x : grid.nodes()) {
    const double c1 = pair.C1(x);
    min_gap = std::min(min_gap, c1 - pair.C2(x));
    min_c1 = std::min(min_c1, c1);
  }
  flags.min_c_gap = min_gap;
  flags.c_ordered = min_gap >= -1e-12;
  flags.c1_positive = min_c1 > 0.0;
  return flags;
}

double calibration_shift(const FracPower& fp, const ScalarCoefficient& C0, std::size_t k) {
  const SpectralDecomposition& dec = fp.decomposition();
  if (k < 1 || k > dec.size()) {
    throw InvalidArgument(fmt::format("calibration mode {} outside 1..{}", k, dec.size()), "mode_out_of_range");
  }
  const FracSpectrum spectrum = frac_schroedinger_spectrum(fp, modal_potential(dec, C0));
  return spectrum.mu[static_cast<Eigen::Index>(k - 1)];
}

ScalarCoefficient calibrate(const FracPower& fp, const ScalarCoefficient& C0, std::size_t k) {
  return C0.shifted(calibration_shift(fp, C0, k));
}

NodalReport nodal_report(const Grid& grid, const GridFunction& u, double tol) {
  if (u.size() != static_cast<Eigen::Index>(grid.interior_count())) {
    throw DimensionMismatch(fmt::format("nodal_report: {} values for {} interior nodes", u.size(),
                                        grid.interior_count()));
  }
  const double peak = u.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw InvalidArgument("nodal_report: the zero function has no nodal structure");

  NodalReport report;
  for (const auto& [i, j] : grid.interior_edges()) {
    const double ui = u[static_cast<Eigen::Index>(i)];
    const double uj = u[static_cast<Eigen::Index>(j)];
    if (ui * uj >= 0.0) continue;
    ++report.sign_changes;
    const Point& xi = grid.nodes()[grid.interior_node(i)];
    const Point& xj = grid.nodes()[grid.interior_node(j)];
    const double t = ui / (ui - uj);
    report.locations.push_back({xi[0] + t * (xj[0] - xi[0]), xi[1] + t * (xj[1] - xi[1])});
  }
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) <= tol * peak) ++report.near_zero_nodes;
  }
  report.interior_zero = report.sign_changes > 0 || report.near_zero_nodes > 0;
  return report;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::consistent: return "consistent";
    case Verdict::vacuous: return "vacuous";
    case Verdict::violation: return "violation";
  }
  return "unknown";
}

std::vector<KernelSolution> kernel_solutions(const FracPower& fp, const ScalarCoefficient& C, double gate) {
  const SpectralDecomposition& dec = fp.decomposition();
  const FracSpectrum spectrum = frac_schroedinger_spectrum(fp, modal_potential(dec, C));
  const double threshold = gate * std::pow(dec.principal(), fp.s());
  std::vector<KernelSolution> out;
  for (Eigen::Index k = 0; k < spectrum.mu.size(); ++k) {
    if (std::abs(spectrum.mu[k]) <= threshold) {
      out.push_back({static_cast<std::size_t>(k) + 1, spectrum.mu[k], spectrum.functions.col(k)});
    }
  }
  return out;
}

ComparisonReport run_comparison(const ProblemPair& pair, const ComparisonOptions& options) {
  ComparisonReport report;
  report.hypotheses = check_hypotheses(pair);

  const FracPower fp1(pair.first, pair.s);
  const FracPower fp2(pair.second, pair.s);
  report.second_solutions = kernel_solutions(fp2, pair.C2, options.kernel_gate);

  const CoefficientSet set1 = pair.set1();
  const CoefficientSet set2 = pair.set2();
  const YLadder ladder =
      YLadder::graded(pair.second->principal(), pair.s, ladder_config_for(pair.second->principal(), pair.s, options.ny));
  report.v_value = std::numeric_limits<double>::infinity();
  for (const KernelSolution& sol : report.second_solutions) {
    const ExtensionField U = extend_spectral(fp2, sol.u, ladder);
    const FunctionalReport m2 = functional_M(U, set2.B, set2.C);
    const double v = functional_V(U, set1, set2);
    const double scale = std::max(m2.energy, std::abs(m2.trace_term));
    report.v_scale = std::max(report.v_scale, scale);
    report.m2_residual = std::max(report.m2_residual, std::abs(m2.total) / scale);
    report.v_value = std::min(report.v_value, v);
  }
  if (report.second_solutions.empty()) report.v_value = 0.0;
  report.v_nonnegative =
      !report.second_solutions.empty() && report.v_value >= -options.v_slack * report.v_scale;
  report.cross_check = !report.hypotheses.hold() || report.second_solutions.empty() || report.v_nonnegative;

  const Eigen::MatrixXd& mass = pair.first->mass();
  for (KernelSolution& sol : kernel_solutions(fp1, pair.C1, options.kernel_gate)) {
    SolutionFinding finding;
    finding.nodal = nodal_report(pair.first->grid(), sol.u, options.zero_tol);
    if (!finding.nodal.interior_zero) {
      const double n1 = std::sqrt(sol.u.dot(mass * sol.u));
      for (const KernelSolution& other : report.second_solutions) {
        const double n2 = std::sqrt(other.u.dot(mass * other.u));
        if (std::abs(sol.u.dot(mass * other.u)) >= (1.0 - 1e-6) * n1 * n2) finding.equality_case = true;
      }
    }
    finding.solution = std::move(sol);
    report.first_solutions.push_back(std::move(finding));
  }

  const bool premise = options.mode == ComparisonMode::hypotheses ? report.hypotheses.hold() : report.v_nonnegative;
  if (!premise || report.second_solutions.empty() || report.first_solutions.empty()) {
    report.verdict = Verdict::vacuous;
    return report;
  }
  report.verdict = Verdict::consistent;
  for (const SolutionFinding& f : report.first_solutions) {
    if (f.nodal.interior_zero) continue;
    if (f.equality_case) {
      report.equality_case = true;
    } else {
      report.verdict = Verdict::violation;
    }
  }
  return report;
}

}  // namespace fraclab
