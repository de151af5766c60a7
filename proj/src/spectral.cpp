#include "fraclab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "fraclab/errors.hpp"

namespace fraclab {

SpectralDecomposition eigendecompose(std::shared_ptr<const AssembledOperator> op,
                                     const EigenOptions& options) {
  if (!op) throw InvalidArgument("eigendecompose: null operator");
  EigenResult eig = generalized_eigen(op->stiffness, op->mass, options);
  if (!(eig.values.size() > 0 && eig.values[0] > 0.0)) {
    throw ConvergenceError("principal eigenvalue is not positive", eig.values.size() ? eig.values[0] : 0.0);
  }
  SpectralDecomposition dec;
  dec.op = std::move(op);
  dec.eigenvalues = std::move(eig.values);
  dec.modes = std::move(eig.vectors);
  dec.sweeps = eig.sweeps;
  return dec;
}

SpectralDecomposition eigendecompose(const AssembledOperator& op, const EigenOptions& options) {
  return eigendecompose(std::make_shared<const AssembledOperator>(op), options);
}

void require_size(const SpectralDecomposition& dec, const GridFunction& u, const char* what) {
  if (static_cast<std::size_t>(u.size()) != dec.size()) {
    throw DimensionMismatch(fmt::format("{}: grid function has {} entries, decomposition has {} dofs",
                                        what, u.size(), dec.size()));
  }
}

Eigen::VectorXd project(const SpectralDecomposition& dec, const GridFunction& u) {
  require_size(dec, u, "project");
  return dec.modes.transpose() * (dec.mass() * u);
}

GridFunction reconstruct(const SpectralDecomposition& dec, const Eigen::VectorXd& coeffs) {
  if (static_cast<std::size_t>(coeffs.size()) != dec.size()) {
    throw DimensionMismatch("reconstruct: coefficient count differs from mode count");
  }
  return dec.modes * coeffs;
}

GridFunction heat_apply(const SpectralDecomposition& dec, double t, const GridFunction& u) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw InvalidArgument(fmt::format("heat_apply: time must be finite and non-negative (got {})", t));
  }
  require_size(dec, u, "heat_apply");
  if (t == 0.0) return u;  // exact identity, no round trip through the modes
  const Eigen::VectorXd coeffs = project(dec, u);
  const Eigen::VectorXd decay = (-t * dec.eigenvalues.array()).exp();
  return dec.modes * (decay.array() * coeffs.array()).matrix();
}

GridFunction heat_increment(const SpectralDecomposition& dec, double t, const GridFunction& u) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw InvalidArgument(fmt::format("heat_increment: time must be finite and non-negative (got {})", t));
  }
  const Eigen::VectorXd coeffs = project(dec, u);
  const Eigen::VectorXd change = (-t * dec.eigenvalues.array()).unaryExpr([](double x) { return std::expm1(x); });
  return dec.modes * (change.array() * coeffs.array()).matrix();
}

double heat_kernel(const SpectralDecomposition& dec, double t, std::size_t i, std::size_t j) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw InvalidArgument(fmt::format("heat_kernel: time must be positive (got {})", t));
  }
  if (i >= dec.size() || j >= dec.size()) {
    throw DimensionMismatch("heat_kernel: node index out of range");
  }
  const auto I = static_cast<Eigen::Index>(i);
  const auto J = static_cast<Eigen::Index>(j);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < dec.modes.cols(); ++k) {
    sum += std::exp(-t * dec.eigenvalues[k]) * (dec.modes(I, k) * dec.modes(J, k));
  }
  return sum;
}

double eigen_residual(const SpectralDecomposition& dec, std::size_t k) {
  const auto K = static_cast<Eigen::Index>(k);
  const Eigen::VectorXd phi = dec.modes.col(K);
  return (dec.op->stiffness * phi - dec.eigenvalues[K] * (dec.mass() * phi)).norm();
}

void write_spectrum_csv(std::ostream& out, const Eigen::VectorXd& values, const char* header) {
  out << header << '\n';
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    fmt::print(out, "{},{:.17g}\n", k + 1, values[k]);
  }
}

void write_modes_csv(std::ostream& out, const SpectralDecomposition& dec, std::size_t count) {
  const Grid& grid = dec.grid();
  count = std::min(count, dec.size());
  out << (grid.dimension() == 1 ? "dof,x" : "dof,x,y");
  for (std::size_t k = 0; k < count; ++k) fmt::print(out, ",phi_{}", k + 1);
  out << '\n';
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const Point& x = grid.nodes()[grid.interior_node(i)];
    fmt::print(out, "{},{:.17g}", i, x[0]);
    if (grid.dimension() == 2) fmt::print(out, ",{:.17g}", x[1]);
    for (std::size_t k = 0; k < count; ++k) {
      fmt::print(out, ",{:.17g}", dec.modes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    }
    out << '\n';
  }
}

}  // namespace fraclab
