#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace fraclab {

/// Physical coordinates of one node. The second component is ignored in 1D.
using Point = std::array<double, 2>;

/// Conforming simplex mesh of an interval or a rectangle with a Dirichlet
/// boundary mask. Elements are segments (1D) or triangles (2D).
class Grid {
public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  int dimension() const noexcept { return dimension_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t element_count() const noexcept { return elements_.size(); }
  std::size_t interior_count() const noexcept { return interior_nodes_.size(); }

  const std::vector<Point>& nodes() const noexcept { return nodes_; }
  const std::vector<std::vector<std::size_t>>& elements() const noexcept { return elements_; }
  const std::vector<bool>& boundary() const noexcept { return boundary_; }

  /// Interior dof index of a node, or npos for boundary nodes.
  std::size_t interior_index(std::size_t node) const { return interior_index_.at(node); }
  /// Node id of interior dof `dof`.
  std::size_t interior_node(std::size_t dof) const { return interior_nodes_.at(dof); }
  const std::vector<std::size_t>& interior_nodes() const noexcept { return interior_nodes_; }

  /// Signed measure (length or area) of element `e`.
  double element_measure(std::size_t e) const;
  /// Nodes per axis of the underlying lattice; node (i, j) has id j * lattice()[0] + i.
  /// In 1D the second extent is 1.
  const std::array<std::size_t, 2>& lattice() const noexcept { return lattice_; }

  /// Largest element diameter.
  double mesh_width() const noexcept { return mesh_width_; }

  /// Pairs of interior dofs joined by an element edge, each pair once with first < second,
  /// in ascending order.
  std::vector<std::pair<std::size_t, std::size_t>> interior_edges() const;

  void write_csv(std::ostream& out) const;

  friend Grid build_interval_grid(double a, double b, int n);
  friend Grid build_rectangle_grid(double ax, double bx, double ay, double by, int nx, int ny);

private:
  Grid() = default;
  void finalize();

  int dimension_ = 1;
  std::vector<Point> nodes_;
  std::vector<std::vector<std::size_t>> elements_;
  std::vector<bool> boundary_;
  std::vector<std::size_t> interior_index_;
  std::vector<std::size_t> interior_nodes_;
  double mesh_width_ = 0.0;
  std::array<std::size_t, 2> lattice_{0, 1};
};

/// n+1 equispaced nodes on [a, b]; endpoints are boundary nodes.
Grid build_interval_grid(double a, double b, int n);

/// Tensor-product nodes on [ax,bx]x[ay,by], each cell split into two right triangles
/// along the (i,j)-(i+1,j+1) diagonal.
Grid build_rectangle_grid(double ax, double bx, double ay, double by, int nx, int ny);

}  // namespace fraclab
