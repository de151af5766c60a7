#include "fraclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {

void require_bounds(double lo, double hi, int n, const char* axis) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidArgument(fmt::format("{}-bounds must be finite", axis));
  }
  if (!(hi > lo)) {
    throw InvalidArgument(fmt::format("{}-bounds must satisfy lower < upper (got {} >= {})",
                                      axis, lo, hi));
  }
  if (n < 3) {
    throw InvalidArgument(fmt::format("{}-resolution must be at least 3 (got {})", axis, n));
  }
}

}  // namespace

double Grid::element_measure(std::size_t e) const {
  const auto& el = elements_.at(e);
  if (dimension_ == 1) {
    return nodes_[el[1]][0] - nodes_[el[0]][0];
  }
  const Point& p0 = nodes_[el[0]];
  const Point& p1 = nodes_[el[1]];
  const Point& p2 = nodes_[el[2]];
  return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
}

void Grid::finalize() {
  interior_index_.assign(nodes_.size(), npos);
  interior_nodes_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!boundary_[i]) {
      interior_index_[i] = interior_nodes_.size();
      interior_nodes_.push_back(i);
    }
  }
  mesh_width_ = 0.0;
  for (const auto& el : elements_) {
    for (std::size_t p = 0; p < el.size(); ++p) {
      for (std::size_t q = p + 1; q < el.size(); ++q) {
        const double dx = nodes_[el[p]][0] - nodes_[el[q]][0];
        const double dy = nodes_[el[p]][1] - nodes_[el[q]][1];
        mesh_width_ = std::max(mesh_width_, std::hypot(dx, dy));
      }
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> Grid::interior_edges() const {
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& el : elements_) {
    for (std::size_t p = 0; p < el.size(); ++p) {
      for (std::size_t q = p + 1; q < el.size(); ++q) {
        const std::size_t a = interior_index_[el[p]];
        const std::size_t b = interior_index_[el[q]];
        if (a == npos || b == npos) continue;
        edges.emplace(std::min(a, b), std::max(a, b));
      }
    }
  }
  return {edges.begin(), edges.end()};
}

void Grid::write_csv(std::ostream& out) const {
  out << (dimension_ == 1 ? "id,x,boundary\n" : "id,x,y,boundary\n");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (dimension_ == 1) {
      fmt::print(out, "{},{:.17g},{}\n", i, nodes_[i][0], boundary_[i] ? 1 : 0);
    } else {
      fmt::print(out, "{},{:.17g},{:.17g},{}\n", i, nodes_[i][0], nodes_[i][1],
                 boundary_[i] ? 1 : 0);
    }
  }
}

Grid build_interval_grid(double a, double b, int n) {
  require_bounds(a, b, n, "x");
  Grid g;
  g.dimension_ = 1;
  g.lattice_ = {static_cast<std::size_t>(n + 1), 1};
  const double h = (b - a) / n;
  for (int i = 0; i <= n; ++i) {
    // pin the last node to b exactly
    g.nodes_.push_back({i == n ? b : a + h * i, 0.0});
    g.boundary_.push_back(i == 0 || i == n);
  }
  for (int i = 0; i < n; ++i) {
    g.elements_.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1)});
  }
  g.finalize();
  return g;
}

Grid build_rectangle_grid(double ax, double bx, double ay, double by, int nx, int ny) {
  require_bounds(ax, bx, nx, "x");
  require_bounds(ay, by, ny, "y");
  Grid g;
  g.dimension_ = 2;
  g.lattice_ = {static_cast<std::size_t>(nx + 1), static_cast<std::size_t>(ny + 1)};
  const double hx = (bx - ax) / nx;
  const double hy = (by - ay) / ny;
  const auto id = [nx](int i, int j) { return static_cast<std::size_t>(j * (nx + 1) + i); };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      g.nodes_.push_back({i == nx ? bx : ax + hx * i, j == ny ? by : ay + hy * j});
      g.boundary_.push_back(i == 0 || i == nx || j == 0 || j == ny);
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // counter-clockwise triangles
      g.elements_.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      g.elements_.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  g.finalize();
  return g;
}

}  // namespace fraclab
