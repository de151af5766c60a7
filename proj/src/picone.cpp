#include "fraclab/picone.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fraclab/errors.hpp"
#include "fraclab/special.hpp"

namespace fraclab {

Eigen::MatrixXd CylinderCoefficient::operator()(const Point& x) const {
  const int n = A_.dimension();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + 1, n + 1);
  B.topLeftCorner(n, n) = A_(x);
  B(n, n) = 1.0;
  return B;
}

namespace {

void require_grid(const ExtensionField& U, int dimension, const char* what) {
  if (!U.grid) throw InvalidArgument(fmt::format("{}: field has no grid", what));
  if (U.grid->dimension() != dimension) {
    throw DimensionMismatch(fmt::format("{}: coefficient is {}-dimensional, grid is {}-dimensional", what,
                                        dimension, U.grid->dimension()));
  }
  if (U.values.rows() != static_cast<Eigen::Index>(U.grid->interior_count()) ||
      U.values.cols() != static_cast<Eigen::Index>(U.ladder.size())) {
    throw DimensionMismatch(fmt::format("{}: field values do not match grid and ladder", what));
  }
}

double weighted_energy(const ExtensionField& U, const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass) {
  return cylinder_energy(U.values, U.ladder, 1.0 - 2.0 * U.s, stiffness, mass);
}

/// Energy on the ladder with every other node removed, or a negative value when the ladder
/// cannot be halved.
double halved_energy(const ExtensionField& U, const Eigen::MatrixXd& stiffness, const Eigen::MatrixXd& mass) {
  const std::size_t m = U.ladder.intervals();
  if (m < 4 || m % 2 != 0) return -1.0;
  std::vector<double> nodes;
  Eigen::MatrixXd values(U.values.rows(), static_cast<Eigen::Index>(m / 2 + 1));
  for (std::size_t j = 0; j <= m; j += 2) {
    nodes.push_back(U.ladder[j]);
    values.col(static_cast<Eigen::Index>(j / 2)) = U.values.col(static_cast<Eigen::Index>(j));
  }
  return cylinder_energy(values, YLadder::from_nodes(std::move(nodes)), 1.0 - 2.0 * U.s, stiffness, mass);
}

Eigen::MatrixXd unit_mass(const Grid& grid) {
  return assemble_weighted_mass(grid, ScalarCoefficient::constant(1.0));
}

}  // namespace

FunctionalReport functional_M(const ExtensionField& U, const CylinderCoefficient& B,
                              const ScalarCoefficient& C) {
  require_grid(U, B.spatial().dimension(), "functional_M");
  validate_order(U.s);
  const Grid& grid = *U.grid;
  const Eigen::MatrixXd stiffness = assemble_stiffness(grid, B.spatial());
  const Eigen::MatrixXd mass = unit_mass(grid);
  const Eigen::MatrixXd potential = assemble_weighted_mass(grid, C);

  FunctionalReport report;
  report.energy = weighted_energy(U, stiffness, mass);
  const GridFunction u = U.trace();
  report.trace_term = 2.0 * U.s * trace_constant(U.s) * u.dot(potential * u);
  report.total = report.energy - report.trace_term;
  // second-order ladder rule: the halved ladder carries four times the error
  const double coarse = halved_energy(U, stiffness, mass);
  if (coarse >= 0.0) report.error_estimate = std::abs(report.energy - coarse) / 3.0;
  return report;
}

double functional_V(const ExtensionField& U, const CoefficientSet& first, const CoefficientSet& second) {
  return functional_M(U, second.B, second.C).total - functional_M(U, first.B, first.C).total;
}

double functional_V_direct(const ExtensionField& U, const CoefficientSet& first,
                           const CoefficientSet& second) {
  const int n = first.B.spatial().dimension();
  if (second.B.spatial().dimension() != n) {
    throw DimensionMismatch("functional_V_direct: coefficient sets differ in dimension");
  }
  require_grid(U, n, "functional_V_direct");
  validate_order(U.s);
  const Grid& grid = *U.grid;
  const MatrixCoefficient A1 = first.B.spatial();
  const MatrixCoefficient A2 = second.B.spatial();
  const MatrixCoefficient dA(n, [A1, A2](const Point& x) -> Eigen::MatrixXd { return A2(x) - A1(x); });
  const ScalarCoefficient C1 = first.C;
  const ScalarCoefficient C2 = second.C;
  const ScalarCoefficient dC([C1, C2](const Point& x) { return C1(x) - C2(x); });

  // the y-blocks of B_1 and B_2 coincide, so only the x-part of the energy survives
  const auto dofs = static_cast<Eigen::Index>(grid.interior_count());
  const double energy = weighted_energy(U, assemble_stiffness(grid, dA), Eigen::MatrixXd::Zero(dofs, dofs));
  const GridFunction u = U.trace();
  return energy + 2.0 * U.s * trace_constant(U.s) * u.dot(assemble_weighted_mass(grid, dC) * u);
}

TensorField TensorField::from_extension(const ExtensionField& field) {
  if (!field.grid) throw InvalidArgument("TensorField: field has no grid");
  const Grid& grid = *field.grid;
  TensorField out{field.grid, field.ladder,
                  Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.node_count()), field.values.cols())};
  for (std::size_t dof = 0; dof < grid.interior_count(); ++dof) {
    out.values.row(static_cast<Eigen::Index>(grid.interior_node(dof))) =
        field.values.row(static_cast<Eigen::Index>(dof));
  }
  return out;
}

TensorField TensorField::sample(std::shared_ptr<const Grid> grid, const YLadder& ladder, const Function& f) {
  if (!grid) throw InvalidArgument("TensorField: null grid");
  TensorField out{grid, ladder,
                  Eigen::MatrixXd(static_cast<Eigen::Index>(grid->node_count()),
                                  static_cast<Eigen::Index>(ladder.size()))};
  for (std::size_t i = 0; i < grid->node_count(); ++i) {
    for (std::size_t j = 0; j < ladder.size(); ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(grid->nodes()[i], ladder[j]);
    }
  }
  return out;
}

namespace {

constexpr std::size_t kStencil = 5;

/// Derivative at z[p] of the quartic through five consecutive nodes, centred when possible
/// and shifted inward at the ends. `value(q)` returns the sample at node q.
template <typename Value>
double stencil_derivative(const std::vector<double>& z, std::size_t p, Value value) {
  const std::size_t half = kStencil / 2;
  const std::size_t first = std::min(p > half ? p - half : 0, z.size() - kStencil);
  const double t = z[p];
  double result = 0.0;
  for (std::size_t j = first; j < first + kStencil; ++j) {
    // l_j'(t) = sum_{m != j} 1/(z_j - z_m) prod_{l != j, m} (t - z_l)/(z_j - z_l)
    double weight = 0.0;
    for (std::size_t m = first; m < first + kStencil; ++m) {
      if (m == j) continue;
      double term = 1.0 / (z[j] - z[m]);
      for (std::size_t l = first; l < first + kStencil; ++l) {
        if (l != j && l != m) term *= (t - z[l]) / (z[j] - z[l]);
      }
      weight += term;
    }
    result += weight * value(j);
  }
  return result;
}

/// Axis coordinates of a lattice grid plus the ladder, and the index arithmetic between
/// (node, ladder index) pairs and per-axis positions.
struct TensorLayout {
  int dim;
  std::array<std::size_t, 2> extent;
  std::array<std::vector<double>, 3> axes;

  TensorLayout(const Grid& grid, const YLadder& ladder) : dim(grid.dimension()), extent(grid.lattice()) {
    if (extent[0] * extent[1] != grid.node_count()) {
      throw InvalidArgument("picone_residual: grid is not a lattice grid");
    }
    if (extent[0] < kStencil || (dim == 2 && extent[1] < kStencil) || ladder.size() < kStencil) {
      throw InvalidArgument(fmt::format("picone_residual: every axis needs at least {} nodes", kStencil));
    }
    for (std::size_t i = 0; i < extent[0]; ++i) axes[0].push_back(grid.nodes()[i][0]);
    if (dim == 2) {
      for (std::size_t j = 0; j < extent[1]; ++j) axes[1].push_back(grid.nodes()[j * extent[0]][1]);
    }
    axes[static_cast<std::size_t>(dim)] = ladder.nodes();
  }

  /// Partial derivative along axis `d` (d = dim is y) of `field(node, k)` at (node, k).
  template <typename Field>
  double partial(const Field& field, int d, std::size_t node, std::size_t k) const {
    if (d == dim) return stencil_derivative(axes[d], k, [&](std::size_t q) { return field(node, q); });
    const std::size_t i = node % extent[0];
    const std::size_t j = node / extent[0];
    if (d == 0) {
      return stencil_derivative(axes[0], i, [&](std::size_t q) { return field(j * extent[0] + q, k); });
    }
    return stencil_derivative(axes[1], j, [&](std::size_t q) { return field(q * extent[0] + i, k); });
  }
};

void check_floor(double min_abs_v, double v_floor) {
  if (!(min_abs_v >= v_floor)) {
    throw DivisionHazard(
        fmt::format("picone_residual: min |v| = {:.3g} is below the floor {:.3g}", min_abs_v, v_floor));
  }
}

/// Terms of the identity at one node: lhs = quad_X + div_flux, rhs = quad_U + potential.
struct IdentityTerms {
  double quad_X, div_flux, quad_U, potential;
};

void accumulate(PiconeCheck& check, const IdentityTerms& t, const Point& x, double y) {
  const double lhs = t.quad_X + t.div_flux;
  const double rhs = t.quad_U + t.potential;
  const double diff = std::abs(lhs - rhs);
  const double terms = std::abs(t.quad_X) + std::abs(t.div_flux) + std::abs(t.quad_U) + std::abs(t.potential);
  const double rel = diff / (std::abs(lhs) + std::abs(rhs) + 1e-30);
  if (rel > check.residual || check.nodes == 0) {
    check.residual = rel;
    check.worst_x = x;
    check.worst_y = y;
  }
  check.residual_terms = std::max(check.residual_terms, diff / (terms + 1e-30));
  check.max_absolute = std::max(check.max_absolute, diff);
  ++check.nodes;
}

}  // namespace

PiconeCheck picone_residual(const TensorField& U, const TensorField& v, const CylinderCoefficient& B,
                            double s, double v_floor) {
  validate_order(s);
  if (!U.grid || U.grid != v.grid || U.ladder.nodes() != v.ladder.nodes()) {
    throw DimensionMismatch("picone_residual: U and v must share grid and ladder");
  }
  const Grid& grid = *U.grid;
  if (B.spatial().dimension() != grid.dimension()) {
    throw DimensionMismatch("picone_residual: coefficient dimension differs from grid dimension");
  }
  const auto N = grid.node_count();
  const auto K = U.ladder.size();
  if (U.values.rows() != static_cast<Eigen::Index>(N) || U.values.cols() != static_cast<Eigen::Index>(K) ||
      v.values.rows() != U.values.rows() || v.values.cols() != U.values.cols()) {
    throw DimensionMismatch("picone_residual: field values do not match grid and ladder");
  }
  const TensorLayout layout(grid, U.ladder);
  const int n = grid.dimension();
  const double a = 1.0 - 2.0 * s;

  PiconeCheck check;
  check.min_abs_v = v.values.cwiseAbs().minCoeff();
  check_floor(check.min_abs_v, v_floor);

  const auto flat = [K](std::size_t node, std::size_t k) { return static_cast<Eigen::Index>(node * K + k); };
  const auto Uf = [&](std::size_t node, std::size_t k) {
    return U.values(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(k));
  };
  const auto vf = [&](std::size_t node, std::size_t k) {
    return v.values(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(k));
  };

  std::vector<Eigen::MatrixXd> Bx(N);
  for (std::size_t node = 0; node < N; ++node) Bx[node] = B(grid.nodes()[node]);

  // gradients everywhere, then the unweighted fluxes B grad v and U^2 B grad v / v
  Eigen::MatrixXd gradU(n + 1, static_cast<Eigen::Index>(N * K));
  Eigen::MatrixXd gradV(n + 1, gradU.cols());
  for (std::size_t node = 0; node < N; ++node) {
    for (std::size_t k = 0; k < K; ++k) {
      for (int d = 0; d <= n; ++d) {
        gradU(d, flat(node, k)) = layout.partial(Uf, d, node, k);
        gradV(d, flat(node, k)) = layout.partial(vf, d, node, k);
      }
    }
  }
  Eigen::MatrixXd flux(n + 1, gradU.cols());
  Eigen::MatrixXd squared_flux(n + 1, gradU.cols());
  for (std::size_t node = 0; node < N; ++node) {
    for (std::size_t k = 0; k < K; ++k) {
      const Eigen::Index c = flat(node, k);
      flux.col(c) = Bx[node] * gradV.col(c);
      squared_flux.col(c) = flux.col(c) * (Uf(node, k) * Uf(node, k) / vf(node, k));
    }
  }

  // div(y^a F) = y^a div F + a y^{a-1} F_y
  const auto weighted_divergence = [&](const Eigen::MatrixXd& field, std::size_t node, std::size_t k, double y) {
    double div = 0.0;
    for (int d = 0; d <= n; ++d) {
      div += layout.partial([&](std::size_t q, std::size_t m) { return field(d, flat(q, m)); }, d, node, k);
    }
    return std::pow(y, a) * div + a * std::pow(y, a - 1.0) * field(n, flat(node, k));
  };

  for (std::size_t node = 0; node < N; ++node) {
    if (grid.boundary()[node]) continue;
    for (std::size_t k = 1; k + 1 < K; ++k) {
      const double y = U.ladder[k];
      const double ya = std::pow(y, a);
      const Eigen::Index c = flat(node, k);
      const double u = Uf(node, k);
      const double w = vf(node, k);
      const Eigen::VectorXd X = gradU.col(c) - (u / w) * gradV.col(c);
      accumulate(check,
                 {ya * X.dot(Bx[node] * X), weighted_divergence(squared_flux, node, k, y),
                  ya * gradU.col(c).dot(Bx[node] * gradU.col(c)), (u * u / w) * weighted_divergence(flux, node, k, y)},
                 grid.nodes()[node], y);
    }
  }
  return check;
}

PiconeCheck picone_residual(const SmoothField& U, const SmoothField& v, const CylinderCoefficient& B,
                            double s, const Grid& grid, const YLadder& ladder, double v_floor) {
  validate_order(s);
  const int n = grid.dimension();
  if (B.spatial().dimension() != n) {
    throw DimensionMismatch("picone_residual: coefficient dimension differs from grid dimension");
  }
  const double a = 1.0 - 2.0 * s;
  const MatrixCoefficient& A = B.spatial();

  PiconeCheck check;
  check.min_abs_v = std::numeric_limits<double>::infinity();
  for (const Point& x : grid.nodes()) {
    for (double y : ladder.nodes()) check.min_abs_v = std::min(check.min_abs_v, std::abs(v.value(x, y)));
  }
  check_floor(check.min_abs_v, v_floor);

  for (std::size_t node = 0; node < grid.node_count(); ++node) {
    if (grid.boundary()[node]) continue;
    const Point& x = grid.nodes()[node];
    const Eigen::MatrixXd Bx = B(x);
    const Eigen::MatrixXd Ax = A(x);
    // (div A)_j = sum_i d_i A_ij by central differences
    Eigen::VectorXd divA = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[static_cast<std::size_t>(i)]));
      Point lo = x, hi = x;
      lo[static_cast<std::size_t>(i)] -= h;
      hi[static_cast<std::size_t>(i)] += h;
      divA += ((A(hi) - A(lo)) / (2.0 * h)).row(i).transpose();
    }
    for (std::size_t k = 1; k + 1 < ladder.size(); ++k) {
      const double y = ladder[k];
      const double ya = std::pow(y, a);
      const double u = U.value(x, y);
      const double w = v.value(x, y);
      const Eigen::VectorXd gu = U.gradient(x, y);
      const Eigen::VectorXd gv = v.gradient(x, y);
      const Eigen::MatrixXd Hv = v.hessian(x, y);
      if (gu.size() != n + 1 || gv.size() != n + 1 || Hv.rows() != n + 1 || Hv.cols() != n + 1) {
        throw DimensionMismatch("picone_residual: derivative has the wrong size");
      }
      const Eigen::VectorXd F = ya * (Bx * gv);
      const double divF = ya * (divA.dot(gv.head(n)) + (Ax.array() * Hv.topLeftCorner(n, n).array()).sum() +
                                Hv(n, n)) +
                          a * std::pow(y, a - 1.0) * gv(n);
      const Eigen::VectorXd Y = F / w;
      const double divY = divF / w - F.dot(gv) / (w * w);
      const Eigen::VectorXd X = gu - (u / w) * gv;
      accumulate(check, {ya * X.dot(Bx * X), 2.0 * u * gu.dot(Y) + u * u * divY, ya * gu.dot(Bx * gu), (u * u / w) * divF},
                 x, y);
    }
  }
  return check;
}

RayleighResult rayleigh_min(const FracPower& fp, const ModalPotential& pot) {
  const FracSpectrum spectrum = frac_schroedinger_spectrum(fp, pot);
  return {spectrum.mu[0], spectrum.functions.col(0), spectrum.modal_vectors.col(0)};
}

}  // namespace fraclab
