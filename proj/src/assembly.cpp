#include "fraclab/assembly.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "fraclab/errors.hpp"

namespace fraclab {

MatrixCoefficient::MatrixCoefficient(int dimension, Field field)
    : dimension_(dimension), field_(std::move(field)) {
  if (dimension < 1 || dimension > 2) {
    throw InvalidArgument(fmt::format("coefficient dimension must be 1 or 2 (got {})", dimension));
  }
}

MatrixCoefficient MatrixCoefficient::identity(int dimension) {
  return constant(Eigen::MatrixXd::Identity(dimension, dimension));
}

MatrixCoefficient MatrixCoefficient::constant(const Eigen::MatrixXd& value) {
  return MatrixCoefficient(static_cast<int>(value.rows()), [value](const Point&) { return value; });
}

MatrixCoefficient MatrixCoefficient::scalar(int dimension,
                                            std::function<double(const Point&)> field) {
  return MatrixCoefficient(dimension, [dimension, field = std::move(field)](const Point& x) {
    return Eigen::MatrixXd(field(x) * Eigen::MatrixXd::Identity(dimension, dimension));
  });
}

Eigen::MatrixXd MatrixCoefficient::operator()(const Point& x) const {
  Eigen::MatrixXd value = field_(x);
  if (value.rows() != dimension_ || value.cols() != dimension_) {
    throw DimensionMismatch(fmt::format("coefficient returned a {}x{} matrix, expected {}x{}",
                                        value.rows(), value.cols(), dimension_, dimension_));
  }
  return value;
}

ScalarCoefficient ScalarCoefficient::constant(double value) {
  return ScalarCoefficient([value](const Point&) { return value; });
}

ScalarCoefficient ScalarCoefficient::shifted(double shift) const {
  return ScalarCoefficient([field = field_, shift](const Point& x) { return field(x) + shift; });
}

namespace {

std::string describe(const Point& x, int dimension) {
  return dimension == 1 ? fmt::format("x = {:.6g}", x[0])
                        : fmt::format("(x, y) = ({:.6g}, {:.6g})", x[0], x[1]);
}

void check_spd(const Eigen::MatrixXd& A, const Point& x, int dimension) {
  if (!A.allFinite()) {
    throw CoefficientViolation("coefficient is not finite at " + describe(x, dimension));
  }
  const double scale = A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw CoefficientViolation("coefficient is not symmetric at " + describe(x, dimension));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw CoefficientViolation(
        fmt::format("coefficient is not positive definite at {} (smallest eigenvalue {:.3e})",
                    describe(x, dimension), eig.eigenvalues().minCoeff()));
  }
}

Point centroid(const Grid& grid, const std::vector<std::size_t>& el) {
  Point c{0.0, 0.0};
  for (std::size_t node : el) {
    c[0] += grid.nodes()[node][0];
    c[1] += grid.nodes()[node][1];
  }
  c[0] /= static_cast<double>(el.size());
  c[1] /= static_cast<double>(el.size());
  return c;
}

/// Gradients of the P1 shape functions of element `el` (rows = local nodes).
Eigen::MatrixXd shape_gradients(const Grid& grid, const std::vector<std::size_t>& el,
                                double measure) {
  if (grid.dimension() == 1) {
    Eigen::MatrixXd g(2, 1);
    g << -1.0 / measure, 1.0 / measure;
    return g;
  }
  const Point& p0 = grid.nodes()[el[0]];
  const Point& p1 = grid.nodes()[el[1]];
  const Point& p2 = grid.nodes()[el[2]];
  Eigen::MatrixXd g(3, 2);
  const double inv2a = 1.0 / (2.0 * measure);
  g << (p1[1] - p2[1]) * inv2a, (p2[0] - p1[0]) * inv2a,
       (p2[1] - p0[1]) * inv2a, (p0[0] - p2[0]) * inv2a,
       (p0[1] - p1[1]) * inv2a, (p1[0] - p0[0]) * inv2a;
  return g;
}

template <typename LocalFn>
Eigen::MatrixXd scatter(const Grid& grid, LocalFn&& local) {
  const auto n = static_cast<Eigen::Index>(grid.interior_count());
  Eigen::MatrixXd global = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < grid.element_count(); ++e) {
    const auto& el = grid.elements()[e];
    const Eigen::MatrixXd block = local(e, el);
    for (std::size_t p = 0; p < el.size(); ++p) {
      const std::size_t I = grid.interior_index(el[p]);
      if (I == Grid::npos) continue;
      for (std::size_t q = 0; q < el.size(); ++q) {
        const std::size_t J = grid.interior_index(el[q]);
        if (J == Grid::npos) continue;
        global(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J)) +=
            block(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
      }
    }
  }
  return global;
}

Eigen::MatrixXd symmetrized(Eigen::MatrixXd m) {
  m = 0.5 * (m + m.transpose()).eval();
  return m;
}

Eigen::MatrixXd stiffness_impl(const Grid& grid, const MatrixCoefficient& A, bool check) {
  if (A.dimension() != grid.dimension()) {
    throw DimensionMismatch(fmt::format("{}D coefficient on a {}D grid", A.dimension(),
                                        grid.dimension()));
  }
  return symmetrized(scatter(grid, [&](std::size_t e, const std::vector<std::size_t>& el) {
    const double measure = grid.element_measure(e);
    if (!(measure > 0.0)) {
      throw InvalidArgument(fmt::format("element {} has non-positive measure", e));
    }
    const Point c = centroid(grid, el);
    const Eigen::MatrixXd a = A(c);
    if (check) check_spd(a, c, grid.dimension());
    const Eigen::MatrixXd g = shape_gradients(grid, el, measure);
    return Eigen::MatrixXd(measure * g * a * g.transpose());
  }));
}

struct QuadPoint {
  std::array<double, 3> bary;  // barycentric coordinates (only two used in 1D)
  double weight;               // fraction of the element measure
};

const std::vector<QuadPoint>& interval_rule() {
  static const std::vector<QuadPoint> rule = [] {
    const double r = std::sqrt(0.6);
    std::vector<QuadPoint> q;
    for (auto [t, w] : {std::pair{-r, 5.0 / 9.0}, std::pair{0.0, 8.0 / 9.0},
                        std::pair{r, 5.0 / 9.0}}) {
      const double l1 = 0.5 * (1.0 + t);
      q.push_back({{1.0 - l1, l1, 0.0}, 0.5 * w});
    }
    return q;
  }();
  return rule;
}

const std::vector<QuadPoint>& triangle_rule() {
  // symmetric 6-point rule, exact for degree 4
  static const std::vector<QuadPoint> rule = [] {
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    std::vector<QuadPoint> q;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      const double b = 1.0 - 2.0 * a;
      q.push_back({{b, a, a}, w});
      q.push_back({{a, b, a}, w});
      q.push_back({{a, a, b}, w});
    }
    return q;
  }();
  return rule;
}

}  // namespace

AssembledOperator assemble(std::shared_ptr<const Grid> grid, const MatrixCoefficient& A) {
  if (!grid) throw InvalidArgument("assemble: null grid");
  Eigen::MatrixXd K = stiffness_impl(*grid, A, /*check=*/true);
  Eigen::MatrixXd M = assemble_weighted_mass(*grid, ScalarCoefficient::constant(1.0));
  return AssembledOperator{std::move(grid), A, std::move(K), std::move(M)};
}

AssembledOperator assemble(const Grid& grid, const MatrixCoefficient& A) {
  return assemble(std::make_shared<const Grid>(grid), A);
}

Eigen::MatrixXd assemble_stiffness(const Grid& grid, const MatrixCoefficient& A) {
  return stiffness_impl(grid, A, /*check=*/false);
}

Eigen::MatrixXd assemble_weighted_mass(const Grid& grid, const ScalarCoefficient& C) {
  const auto& rule = grid.dimension() == 1 ? interval_rule() : triangle_rule();
  return symmetrized(scatter(grid, [&](std::size_t e, const std::vector<std::size_t>& el) {
    const double measure = grid.element_measure(e);
    const auto k = static_cast<Eigen::Index>(el.size());
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(k, k);
    for (const QuadPoint& qp : rule) {
      Point x{0.0, 0.0};
      for (Eigen::Index p = 0; p < k; ++p) {
        x[0] += qp.bary[p] * grid.nodes()[el[p]][0];
        x[1] += qp.bary[p] * grid.nodes()[el[p]][1];
      }
      const double c = C(x);
      if (!std::isfinite(c)) {
        throw CoefficientViolation("potential is not finite at " + describe(x, grid.dimension()));
      }
      for (Eigen::Index p = 0; p < k; ++p) {
        for (Eigen::Index q = 0; q < k; ++q) {
          block(p, q) += qp.weight * measure * c * qp.bary[p] * qp.bary[q];
        }
      }
    }
    return block;
  }));
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& matrix) {
  out << "i,j,value\n";
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (matrix(i, j) != 0.0) fmt::print(out, "{},{},{:.17g}\n", i, j, matrix(i, j));
    }
  }
}

}  // namespace fraclab
