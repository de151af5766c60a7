#include "fraclab/extension.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include <Eigen/Sparse>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "fraclab/errors.hpp"
#include "fraclab/special.hpp"

namespace fraclab {

YLadder::YLadder(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2 || nodes_.front() != 0.0) {
    throw InvalidArgument("ladder must start at y = 0 and contain at least two nodes");
  }
  for (std::size_t j = 1; j < nodes_.size(); ++j) {
    if (!(nodes_[j] > nodes_[j - 1]) || !std::isfinite(nodes_[j])) {
      throw InvalidArgument(fmt::format("ladder nodes must be strictly increasing (node {})", j));
    }
  }
}

YLadder YLadder::from_nodes(std::vector<double> nodes) { return YLadder(std::move(nodes)); }

YLadder YLadder::uniform(double height, int intervals) {
  if (!(height > 0.0) || intervals < 1) throw InvalidArgument("uniform ladder needs Y > 0, ny >= 1");
  std::vector<double> nodes(static_cast<std::size_t>(intervals) + 1);
  for (int j = 0; j <= intervals; ++j) nodes[static_cast<std::size_t>(j)] = height * j / intervals;
  nodes.back() = height;
  return YLadder(std::move(nodes));
}

LadderConfig ladder_config_for(double lambda_1, double s, int ny) {
  validate_order(s);
  if (!(lambda_1 > 0.0)) throw InvalidArgument("ladder_config_for needs lambda_1 > 0");
  LadderConfig config;
  config.ny = ny;
  const double height = config.y_factor / std::sqrt(lambda_1);
  while (std::pow(height * std::pow(1.0 / ny, config.gamma), 2.0 * s) > 1e-3) config.gamma += 0.5;
  return config;
}

YLadder YLadder::graded(double lambda_1, double s, const LadderConfig& config) {
  validate_order(s);
  if (!(lambda_1 > 0.0)) throw InvalidArgument("graded ladder needs lambda_1 > 0");
  if (!(config.y_factor > 0.0) || config.ny < 4 || !(config.gamma >= 1.0)) {
    throw InvalidArgument(fmt::format(
        "ladder parameters out of range (Y_factor = {}, Ny = {}, gamma = {}); need Y_factor > 0, "
        "Ny >= 4, gamma >= 1",
        config.y_factor, config.ny, config.gamma), "ladder_out_of_range");
  }
  const double height = config.y_factor / std::sqrt(lambda_1);
  std::vector<double> nodes(static_cast<std::size_t>(config.ny) + 1);
  for (int j = 0; j <= config.ny; ++j) {
    nodes[static_cast<std::size_t>(j)] =
        height * std::pow(static_cast<double>(j) / config.ny, config.gamma);
  }
  nodes.back() = height;
  const double layer = std::pow(nodes[1], 2.0 * s);
  if (layer > 1e-3) {
    throw InvalidArgument(
        fmt::format("ladder too coarse for s = {}: y_1^(2s) = {:.3e} exceeds 1e-3 (raise Ny or gamma)",
                    s, layer),
        "ladder_too_coarse");
  }
  return YLadder(std::move(nodes));
}

IntervalWeights weight_moments(double y0, double y1, double a) {
  const double d = y1 - y0;
  if (y0 == 0.0) {
    const double base = std::pow(y1, 1.0 + a);
    return {base / (1.0 + a), base * 2.0 / ((1.0 + a) * (2.0 + a) * (3.0 + a)),
            base / ((2.0 + a) * (3.0 + a)), base / (3.0 + a)};
  }
  if (y1 > 1.5 * y0) {
    // exact moments; cancellation is mild while the interval is wide relative to y0
    std::array<double, 3> m{};
    for (int p = 0; p < 3; ++p) {
      const double e = a + p + 1.0;
      m[static_cast<std::size_t>(p)] = (std::pow(y1, e) - std::pow(y0, e)) / e;
    }
    const double inv = 1.0 / (d * d);
    return {m[0], (y1 * y1 * m[0] - 2.0 * y1 * m[1] + m[2]) * inv,
            (-y0 * y1 * m[0] + (y0 + y1) * m[1] - m[2]) * inv,
            (y0 * y0 * m[0] - 2.0 * y0 * m[1] + m[2]) * inv};
  }
  // 8-point Gauss-Legendre in eta; the weight is analytic well beyond [y0, y1]
  static constexpr std::array<double, 4> x = {0.1834346424956498, 0.5255324099163290,
                                              0.7966664774136267, 0.9602898564975363};
  static constexpr std::array<double, 4> w = {0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};
  IntervalWeights r{0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < 4; ++i) {
    for (double sign : {-1.0, 1.0}) {
      const double eta = 0.5 * (1.0 + sign * x[i]);
      const double weight = 0.5 * w[i] * d * std::pow(y0 + d * eta, a);
      r.w0 += weight;
      r.w00 += weight * (1.0 - eta) * (1.0 - eta);
      r.w01 += weight * eta * (1.0 - eta);
      r.w11 += weight * eta * eta;
    }
  }
  return r;
}

double kernel_profile(double s, double lambda, double y, const QuadratureConfig& config) {
  validate_order(s);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument(fmt::format("kernel_profile: lambda must be positive (got {})", lambda));
  }
  if (!(y >= 0.0) || !std::isfinite(y)) {
    throw InvalidArgument(fmt::format("kernel_profile: y must be non-negative (got {})", y));
  }
  if (y == 0.0) return 1.0;
  // integrand in tau = log t: exp(log_prefactor - y^2/(4t) - lambda t - s tau)
  const double log_prefactor = 2.0 * s * std::log(y) - s * std::log(4.0) - std::log(gamma(s));
  const double quarter_y2 = 0.25 * y * y;
  const double peak = (-s + std::sqrt(s * s + lambda * y * y)) / (2.0 * lambda);
  const double anchor = std::log(peak);
  const double lo = anchor - 8.0;
  const double hi = std::max(anchor, std::log(40.0 / lambda)) + 3.0;
  const auto integrand = [&](double tau) {
    const double t = std::exp(tau);
    return std::exp(log_prefactor - quarter_y2 / t - lambda * t - s * tau);
  };
  const auto no_tails = [](double, double, double) { return 0.0; };
  const double peak_value = integrand(anchor);
  if (peak_value == 0.0) return 0.0;  // underflow: profile below the smallest double
  return nested_trapezoid(integrand, no_tails, anchor, lo, hi, 0.0, config).first;
}

ExtensionField extend_spectral(const FracPower& fp, const GridFunction& u, const YLadder& ladder) {
  const SpectralDecomposition& dec = fp.decomposition();
  const Eigen::VectorXd coeffs = project(dec, u);
  const auto n = static_cast<Eigen::Index>(dec.size());
  ExtensionField field{dec.op->grid, ladder, fp.s(), Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(ladder.size()))};
  field.values.col(0) = u;
  Eigen::VectorXd scaled(n);
  for (std::size_t j = 1; j < ladder.size(); ++j) {
    for (Eigen::Index k = 0; k < n; ++k) {
      scaled[k] = coeffs[k] == 0.0 ? 0.0 : coeffs[k] * kernel_profile(fp.s(), dec.eigenvalues[k], ladder[j]);
    }
    field.values.col(static_cast<Eigen::Index>(j)) = dec.modes * scaled;
  }
  return field;
}

ExtensionField extend_direct(const FracPower& fp, const AssembledOperator& op, const GridFunction& u,
                             const YLadder& ladder) {
  const SpectralDecomposition& dec = fp.decomposition();
  if (op.size() != dec.size()) {
    throw DimensionMismatch("extend_direct: operator and decomposition live on different grids");
  }
  if (static_cast<std::size_t>(u.size()) != op.size()) {
    throw DimensionMismatch("extend_direct: trace length differs from the interior dof count");
  }
  const double a = fp.a();
  const auto n = static_cast<Eigen::Index>(op.size());
  const auto ny = static_cast<Eigen::Index>(ladder.intervals());
  ExtensionField field{op.grid, ladder, fp.s(), Eigen::MatrixXd::Zero(n, ny + 1)};
  field.values.col(0) = u;
  if (u.isZero(0.0)) return field;

  // sparsity pattern shared by K and M
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pattern;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (op.stiffness(i, j) != 0.0 || op.mass(i, j) != 0.0) pattern.emplace_back(i, j);
    }
  }

  // unknowns: ladder nodes 1..ny, block (j - 1)
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(pattern.size() * static_cast<std::size_t>(4 * ny));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n * ny);
  for (Eigen::Index j = 1; j <= ny; ++j) {
    const double y0 = ladder[static_cast<std::size_t>(j - 1)];
    const double y1 = ladder[static_cast<std::size_t>(j)];
    const IntervalWeights w = weight_moments(y0, y1, a);
    const double flux = w.w0 / ((y1 - y0) * (y1 - y0));
    // local 2x2 pattern over (lower = j-1, upper = j)
    const double kw[2][2] = {{w.w00, w.w01}, {w.w01, w.w11}};
    const double mw[2][2] = {{flux, -flux}, {-flux, flux}};
    for (auto [r, c] : pattern) {
      const double kv = op.stiffness(r, c);
      const double mv = op.mass(r, c);
      for (int p = 0; p < 2; ++p) {
        const Eigen::Index row_level = j - 1 + p;
        if (row_level == 0) continue;
        for (int q = 0; q < 2; ++q) {
          const Eigen::Index col_level = j - 1 + q;
          const double value = kw[p][q] * kv + mw[p][q] * mv;
          if (col_level == 0) {
            rhs[(row_level - 1) * n + r] -= value * u[c];
          } else {
            triplets.emplace_back((row_level - 1) * n + r, (col_level - 1) * n + c, value);
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<double> system(n * ny, n * ny);
  system.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
  if (solver.info() != Eigen::Success) {
    throw LinearSolveError("extension system factorization failed");
  }
  const Eigen::VectorXd diag = solver.vectorD();
  const double dmin = diag.minCoeff();
  const double dmax = diag.cwiseAbs().maxCoeff();
  if (!(dmin > 0.0) || dmax / dmin > 1e15) {
    throw LinearSolveError(fmt::format(
        "extension system is numerically singular (pivot ratio {:.3e}); ladder too coarse or degenerate",
        dmin > 0.0 ? dmax / dmin : INFINITY));
  }
  const Eigen::VectorXd solution = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !solution.allFinite()) {
    throw LinearSolveError("extension system solve failed");
  }
  for (Eigen::Index j = 1; j <= ny; ++j) field.values.col(j) = solution.segment((j - 1) * n, n);
  return field;
}

double cylinder_energy(const Eigen::MatrixXd& values, const YLadder& ladder, double a,
                       const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass) {
  if (values.cols() != static_cast<Eigen::Index>(ladder.size()) || values.rows() != stiffness.rows()) {
    throw DimensionMismatch("cylinder_energy: field does not match ladder or grid");
  }
  double energy = 0.0;
  Eigen::VectorXd Klo = stiffness * values.col(0);
  for (std::size_t j = 1; j < ladder.size(); ++j) {
    const auto J = static_cast<Eigen::Index>(j);
    const double d = ladder[j] - ladder[j - 1];
    const IntervalWeights w = weight_moments(ladder[j - 1], ladder[j], a);
    const Eigen::VectorXd Khi = stiffness * values.col(J);
    const Eigen::VectorXd diff = values.col(J) - values.col(J - 1);
    energy += w.w00 * values.col(J - 1).dot(Klo) + 2.0 * w.w01 * values.col(J - 1).dot(Khi) +
              w.w11 * values.col(J).dot(Khi) + w.w0 / (d * d) * diff.dot(mass * diff);
    Klo = Khi;
  }
  return energy;
}

double cylinder_energy(const ExtensionField& field, const AssembledOperator& op) {
  return cylinder_energy(field.values, field.ladder, 1.0 - 2.0 * field.s, op.stiffness, op.mass);
}

TraceResult neumann_trace(const ExtensionField& field, int window) {
  if (window < 4) throw InvalidArgument("neumann_trace: extrapolation window needs at least 4 nodes");
  if (field.ladder.size() < static_cast<std::size_t>(window) + 1) {
    throw InvalidArgument(fmt::format("neumann_trace: ladder has fewer than {} positive nodes", window));
  }
  const double s = field.s;
  std::vector<double> exponents{0.0};
  for (int m = 1; static_cast<int>(exponents.size()) < window; ++m) {
    exponents.push_back(2.0 * m - 2.0 * s);
    if (static_cast<int>(exponents.size()) < window) exponents.push_back(2.0 * m);
  }
  const GridFunction base = field.values.col(0);
  Eigen::MatrixXd quotients(field.values.rows(), window);
  for (int j = 1; j <= window; ++j) {
    const double y = field.ladder[static_cast<std::size_t>(j)];
    quotients.col(j - 1) = -(field.values.col(j) - base) / std::pow(y, 2.0 * s);
  }
  // order-m extrapolation from the first m nodes; exact fit with rescaled abscissae
  const auto extrapolate = [&](int m) -> GridFunction {
    const double scale = field.ladder[static_cast<std::size_t>(m)];
    Eigen::MatrixXd basis(m, m);
    for (int r = 0; r < m; ++r) {
      const double y = field.ladder[static_cast<std::size_t>(r + 1)] / scale;
      for (int c = 0; c < m; ++c) basis(r, c) = std::pow(y, exponents[static_cast<std::size_t>(c)]);
    }
    // the first row of basis^{-1} maps the quotients to the y -> 0 value
    const Eigen::MatrixXd inv = basis.fullPivLu().inverse();
    return quotients.leftCols(m) * inv.row(0).transpose();
  };
  const GridFunction e2 = extrapolate(window - 2);
  const GridFunction e1 = extrapolate(window - 1);
  GridFunction e0 = extrapolate(window);
  TraceResult result;
  const double scale = std::max(e0.norm(), 1e-300);
  result.error_estimate = (e0 - e1).norm() / scale;
  // changes at the rounding floor of the quotients do not count as non-monotone
  result.monotone = (e0 - e1).norm() <= (e1 - e2).norm() || result.error_estimate <= 1e-8;
  if (e0.isZero(0.0)) result.error_estimate = 0.0;
  result.value = std::move(e0);
  return result;
}

TraceResult flux_trace(const ExtensionField& field, const AssembledOperator& op) {
  if (field.values.rows() != static_cast<Eigen::Index>(op.size())) {
    throw DimensionMismatch("flux_trace: field and operator live on different grids");
  }
  const double y1 = field.ladder[1];
  const IntervalWeights w = weight_moments(0.0, y1, 1.0 - 2.0 * field.s);
  const GridFunction lower = field.values.col(0);
  const GridFunction upper = field.values.col(1);
  const Eigen::VectorXd residual = op.stiffness * (w.w00 * lower + w.w01 * upper) +
                                   (w.w0 / (y1 * y1)) * (op.mass * (lower - upper));
  TraceResult result;
  result.value = op.mass.llt().solve(residual) / (2.0 * field.s);
  return result;
}

void write_field_csv(std::ostream& out, const ExtensionField& field) {
  const Grid& grid = *field.grid;
  out << (grid.dimension() == 1 ? "i,j,x,y,U\n" : "i,j,x1,x2,y,U\n");
  for (Eigen::Index i = 0; i < field.values.rows(); ++i) {
    const Point& x = grid.nodes()[grid.interior_node(static_cast<std::size_t>(i))];
    for (std::size_t j = 0; j < field.ladder.size(); ++j) {
      const double value = field.values(i, static_cast<Eigen::Index>(j));
      if (grid.dimension() == 1) {
        fmt::print(out, "{},{},{:.17g},{:.17g},{:.17g}\n", i, j, x[0], field.ladder[j], value);
      } else {
        fmt::print(out, "{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", i, j, x[0], x[1], field.ladder[j],
                   value);
      }
    }
  }
}

}  // namespace fraclab
