#include <doctest.h>

#include <random>
#include <sstream>

#include "fraclab/assembly.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/grid.hpp"
#include "support.hpp"

using namespace fraclab;
using testing::pi;

TEST_SUITE("grid") {
  TEST_CASE("interval nodes are equispaced with flagged endpoints") {
    const Grid g = build_interval_grid(0.0, pi, 4);
    REQUIRE(g.node_count() == 5);
    for (int i = 0; i <= 4; ++i) CHECK(g.nodes()[i][0] == doctest::Approx(i * pi / 4).epsilon(1e-15));
    CHECK(g.boundary() == std::vector<bool>{true, false, false, false, true});
    CHECK(g.interior_count() == 3);
    CHECK(g.interior_index(0) == Grid::npos);
    CHECK(g.interior_index(2) == 1);
    CHECK(g.interior_node(2) == 3);
    CHECK(g.nodes().back()[0] == pi);
  }

  TEST_CASE("interval counts and validation") {
    CHECK(build_interval_grid(0.0, 1.0, 3).interior_count() == 2);
    CHECK_THROWS_AS(build_interval_grid(1.0, 0.0, 10), InvalidArgument);
    CHECK_THROWS_AS(build_interval_grid(0.0, 1.0, 2), InvalidArgument);
    CHECK_THROWS_AS(build_interval_grid(0.0, std::nan(""), 5), InvalidArgument);
    CHECK_THROWS_AS(build_interval_grid(0.0, INFINITY, 5), InvalidArgument);
  }

  TEST_CASE("rectangle counts") {
    const Grid g = build_rectangle_grid(0, 1, 0, 1, 3, 3);
    CHECK(g.node_count() == 16);
    CHECK(g.interior_count() == 4);
    CHECK(g.element_count() == 18);
    const Grid h = build_rectangle_grid(0, 2, 0, 1, 4, 3);
    CHECK(h.node_count() == 20);
    CHECK(h.interior_count() == 6);
    CHECK(h.lattice()[0] == 5);
    CHECK(h.lattice()[1] == 4);
    CHECK_THROWS_AS(build_rectangle_grid(0, 1, 1, 1, 3, 3), InvalidArgument);
  }

  TEST_CASE("rectangle invariants") {
    const Grid g = build_rectangle_grid(-1, 2, 0, 1.5, 7, 5);
    for (std::size_t e = 0; e < g.element_count(); ++e) CHECK(g.element_measure(e) > 0.0);
    std::size_t interior = 0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const Point& x = g.nodes()[i];
      const bool edge = x[0] == -1 || x[0] == 2 || x[1] == 0 || x[1] == 1.5;
      CHECK(g.boundary()[i] == edge);
      if (!edge) {
        CHECK(g.interior_node(g.interior_index(i)) == i);
        ++interior;
      }
    }
    CHECK(interior == g.interior_count());
    double area = 0.0;
    for (std::size_t e = 0; e < g.element_count(); ++e) area += g.element_measure(e);
    CHECK(area == doctest::Approx(4.5).epsilon(1e-14));
  }

  TEST_CASE("csv export") {
    std::ostringstream out;
    build_interval_grid(0, 1, 3).write_csv(out);
    CHECK(out.str().rfind("id,x,boundary\n0,0,1\n", 0) == 0);
    std::ostringstream out2;
    build_rectangle_grid(0, 1, 0, 1, 3, 3).write_csv(out2);
    CHECK(out2.str().rfind("id,x,y,boundary\n", 0) == 0);
  }
}

TEST_SUITE("assembly") {
  TEST_CASE("unit coefficient on the interval gives the closed-form tridiagonals") {
    const Grid g = build_interval_grid(0.0, pi, 4);
    const AssembledOperator op = assemble(g, MatrixCoefficient::identity(1));
    const double h = pi / 4;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(3, 3), M = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < 3; ++i) {
      K(i, i) = 2 / h;
      M(i, i) = 4 * h / 6;
      if (i > 0) {
        K(i, i - 1) = K(i - 1, i) = -1 / h;
        M(i, i - 1) = M(i - 1, i) = h / 6;
      }
    }
    CHECK((op.stiffness - K).cwiseAbs().maxCoeff() <= 1e-12 * K.cwiseAbs().maxCoeff());
    CHECK((op.mass - M).cwiseAbs().maxCoeff() <= 1e-12 * M.cwiseAbs().maxCoeff());
  }

  TEST_CASE("closed form at n = 256") {
    const Grid g = build_interval_grid(0.0, pi, 256);
    const AssembledOperator op = assemble(g, MatrixCoefficient::identity(1));
    const double h = pi / 256;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < op.stiffness.rows(); ++i) {
      for (Eigen::Index j = 0; j < op.stiffness.cols(); ++j) {
        const double want = i == j ? 2 / h : (std::abs(i - j) == 1 ? -1 / h : 0.0);
        worst = std::max(worst, std::abs(op.stiffness(i, j) - want) * h / 2);
      }
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("anisotropic rectangle operator is SPD and symmetric") {
    auto grid = std::make_shared<const Grid>(build_rectangle_grid(0, 1, 0, 1, 8, 8));
    Eigen::Matrix2d A;
    A << 1, 0, 0, 2;
    const AssembledOperator op = assemble(grid, MatrixCoefficient::constant(A));
    CHECK(op.stiffness.llt().info() == Eigen::Success);
    CHECK(op.mass.llt().info() == Eigen::Success);
    const double norm = op.stiffness.cwiseAbs().rowwise().sum().maxCoeff();
    CHECK((op.stiffness - op.stiffness.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * norm);
    CHECK((op.mass - op.mass.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // consistent mass reproduces the area integral of the interior hats
    const double total = op.mass.sum();
    CHECK(total > 0.0);
    CHECK(total < 1.0);
  }

  TEST_CASE("quadratic forms are positive for random vectors") {
    auto grid = std::make_shared<const Grid>(build_rectangle_grid(0, 2, 0, 1, 9, 6));
    const AssembledOperator op = assemble(grid, MatrixCoefficient::scalar(2, [](const Point& x) {
      return 1.0 + 0.5 * std::sin(3 * x[0]) * std::cos(2 * x[1]);
    }));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(op.size()));
      for (auto& e : v) e = normal(rng);
      CHECK(v.dot(op.stiffness * v) > 0.0);
      CHECK(v.dot(op.mass * v) > 0.0);
    }
  }

  TEST_CASE("variable coefficient matches centroid quadrature by hand") {
    const Grid g = build_interval_grid(0.0, 1.0, 3);
    const AssembledOperator op = assemble(g, MatrixCoefficient::scalar(1, [](const Point& x) { return 1 + x[0]; }));
    const double h = 1.0 / 3;
    // centroids 1/6, 1/2, 5/6
    const double a0 = 1 + 1.0 / 6, a1 = 1.5, a2 = 1 + 5.0 / 6;
    CHECK(op.stiffness(0, 0) == doctest::Approx((a0 + a1) / h).epsilon(1e-14));
    CHECK(op.stiffness(1, 1) == doctest::Approx((a1 + a2) / h).epsilon(1e-14));
    CHECK(op.stiffness(0, 1) == doctest::Approx(-a1 / h).epsilon(1e-14));
  }

  TEST_CASE("coefficient violations name the point") {
    const Grid g = build_interval_grid(0.0, 1.0, 4);
    CHECK_THROWS_AS(assemble(g, MatrixCoefficient::scalar(1, [](const Point& x) { return x[0] - 0.5; })),
                    CoefficientViolation);
    try {
      assemble(g, MatrixCoefficient::scalar(1, [](const Point&) { return -1.0; }));
      FAIL("expected a violation");
    } catch (const CoefficientViolation& e) {
      CHECK(std::string(e.what()).find("x = 0.125") != std::string::npos);
      CHECK(e.code() == "coefficient_violation");
    }
    const Grid r = build_rectangle_grid(0, 1, 0, 1, 3, 3);
    Eigen::Matrix2d skew;
    skew << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(assemble(r, MatrixCoefficient::constant(skew)), CoefficientViolation);
    CHECK_THROWS_AS(assemble(r, MatrixCoefficient::scalar(2, [](const Point&) { return std::nan(""); })),
                    CoefficientViolation);
  }

  TEST_CASE("weighted mass reduces to the mass for unit weight") {
    const Grid g = build_rectangle_grid(0, 1, 0, 2, 5, 4);
    const AssembledOperator op = assemble(g, MatrixCoefficient::identity(2));
    const Eigen::MatrixXd W = assemble_weighted_mass(g, ScalarCoefficient::constant(1.0));
    CHECK((W - op.mass).cwiseAbs().maxCoeff() <= 1e-15);
    const Eigen::MatrixXd W3 = assemble_weighted_mass(g, ScalarCoefficient::constant(3.0));
    CHECK((W3 - 3 * op.mass).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("matrix csv lists nonzeros") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 1) = 2.5;
    std::ostringstream out;
    write_matrix_csv(out, m);
    CHECK(out.str() == "i,j,value\n0,1,2.5\n");
  }
}
