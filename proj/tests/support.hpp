#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "fraclab/assembly.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/spectral.hpp"

namespace testing {

inline constexpr double pi = std::numbers::pi;

/// Decomposition of -u'' on (0, pi) with n intervals, computed once per n.
inline std::shared_ptr<const fraclab::SpectralDecomposition> unit_interval(int n = 256) {
  static std::mutex guard;
  static std::map<int, std::shared_ptr<const fraclab::SpectralDecomposition>> cache;
  std::lock_guard<std::mutex> lock(guard);
  auto& slot = cache[n];
  if (!slot) {
    auto grid = std::make_shared<const fraclab::Grid>(fraclab::build_interval_grid(0.0, pi, n));
    auto op = std::make_shared<const fraclab::AssembledOperator>(
        fraclab::assemble(grid, fraclab::MatrixCoefficient::identity(1)));
    slot = std::make_shared<const fraclab::SpectralDecomposition>(fraclab::eigendecompose(op));
  }
  return slot;
}

/// Relative L2 (Euclidean) distance.
inline double rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / want.norm();
}

/// x coordinate of interior dof i.
inline double dof_x(const fraclab::Grid& grid, std::size_t i) {
  return grid.nodes()[grid.interior_node(i)][0];
}

}  // namespace testing
