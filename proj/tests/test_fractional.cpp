#include <doctest.h>

#include <random>

#include "fraclab/errors.hpp"
#include "fraclab/fractional.hpp"
#include "fraclab/special.hpp"
#include "support.hpp"

using namespace fraclab;
using testing::pi;

TEST_SUITE("gamma") {
  TEST_CASE("analytic values") {
    CHECK(fraclab::gamma(0.5) == doctest::Approx(1.77245385090552).epsilon(1e-14));
    CHECK(fraclab::gamma(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fraclab::gamma(-0.5) == doctest::Approx(-3.54490770181103).epsilon(1e-14));
    CHECK(fraclab::gamma(5.0) == doctest::Approx(24.0).epsilon(1e-14));
  }

  TEST_CASE("relative accuracy on (-5, 10) against the C library") {
    double worst = 0;
    for (double x = -4.995; x < 10; x += 0.01) {
      if (std::abs(x - std::round(x)) < 1e-9 && x <= 0) continue;
      worst = std::max(worst, std::abs(fraclab::gamma(x) / std::tgamma(x) - 1));
    }
    CHECK(worst <= 1e-10);
  }

  TEST_CASE("poles") {
    for (double x : {0.0, -1.0, -2.0, -4.0}) CHECK_THROWS_AS(fraclab::gamma(x), PoleError);
    try {
      fraclab::gamma(-3.0);
    } catch (const Error& e) {
      CHECK(e.code() == "gamma_pole");
    }
  }

  TEST_CASE("trace constant") {
    CHECK(trace_constant(0.5) == doctest::Approx(1.0).epsilon(1e-14));
    for (double s : {0.1, 0.25, 0.75, 0.9}) {
      const double want = std::tgamma(1 - s) / (std::pow(4.0, s) * std::tgamma(1 + s));
      CHECK(trace_constant(s) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_SUITE("fractional") {
  TEST_CASE("order validation") {
    const auto dec = testing::unit_interval(32);
    for (double s : {0.0, 1.0, -0.2, 1.5, std::nan("")}) {
      try {
        FracPower fp(dec, s);
        FAIL("accepted s = " << s);
      } catch (const InvalidArgument& e) {
        CHECK(e.code() == "s_out_of_range");
      }
    }
    const FracPower fp(dec, 0.3);
    CHECK(fp.a() == doctest::Approx(0.4));
  }

  TEST_CASE("modal power") {
    const auto dec = testing::unit_interval();
    const FracPower half(dec, 0.5);
    const GridFunction phi2 = dec->mode(1);
    const GridFunction got = frac_apply(half, phi2);
    CHECK(testing::rel_error(got, std::sqrt(dec->eigenvalues[1]) * phi2) <= 1e-10);
    CHECK(testing::rel_error(got, 2.0 * phi2) <= 1e-3);
    CHECK(frac_apply(half, GridFunction::Zero(255)).isZero(0.0));

    GridFunction u = GridFunction::LinSpaced(255, 0, 3).array().square().sin();
    const GridFunction Lu = dec->mass().llt().solve(dec->op->stiffness * u);
    CHECK(testing::rel_error(frac_apply_power(*dec, 1.0, u), Lu) <= 1e-10);
  }

  TEST_CASE("power law composition") {
    const auto dec = testing::unit_interval(64);
    std::mt19937_64 rng(21);
    std::normal_distribution<double> normal;
    GridFunction u(dec->size());
    for (auto& e : u) e = normal(rng);
    const Eigen::VectorXd coeffs = project(*dec, u);
    for (auto [s1, s2] : {std::pair{0.25, 0.5}, std::pair{0.3, 0.7}, std::pair{0.1, 0.2}}) {
      const FracPower f1(dec, s1), f2(dec, s2);
      const Eigen::VectorXd lhs = project(*dec, frac_apply(f1, frac_apply(f2, u)));
      const Eigen::VectorXd rhs = (dec->eigenvalues.array().pow(s1 + s2) * coeffs.array()).matrix();
      CHECK(testing::rel_error(lhs, rhs) <= 1e-12);
    }
  }

  TEST_CASE("scalar semigroup multiplier equals lambda^s") {
    for (double s : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      for (double lambda : {1e-3, 1.0, 7.5, 1e4}) {
        CHECK(semigroup_multiplier(lambda, s) == doctest::Approx(std::pow(lambda, s)).epsilon(1e-8));
      }
    }
  }

  TEST_CASE("semigroup formula matches the modal power") {
    const auto dec = testing::unit_interval();
    const GridFunction phi1 = dec->mode(0);
    const SemigroupResult r = frac_apply_semigroup(FracPower(dec, 0.5), phi1);
    CHECK(testing::rel_error(r.value, std::sqrt(dec->principal()) * phi1) <= 1e-6);
    const GridFunction u = dec->mode(0) + dec->mode(2);
    for (double s : {0.25, 0.5, 0.75}) {
      const FracPower fp(dec, s);
      const SemigroupResult q = frac_apply_semigroup(fp, u);
      CHECK(testing::rel_error(q.value, frac_apply(fp, u)) <= 1e-6);
      CHECK(q.report.nodes > 0);
      CHECK(q.report.error_estimate <= 1e-8);
    }
    CHECK(frac_apply_semigroup(FracPower(dec, 0.5), GridFunction::Zero(255)).value.isZero(0.0));
  }

  TEST_CASE("semigroup accuracy failure is reported") {
    const auto dec = testing::unit_interval(64);
    GridFunction u = GridFunction::Ones(dec->size());
    try {
      frac_apply_semigroup(FracPower(dec, 0.5), u, {1e-15, 1.0, 1});
      FAIL("expected an accuracy failure");
    } catch (const AccuracyError& e) {
      CHECK(e.code() == "accuracy_failure");
      CHECK(e.estimate() > 0);
    }
  }

  TEST_CASE("modal potential") {
    const auto dec = testing::unit_interval();
    const ModalPotential three = modal_potential(*dec, ScalarCoefficient::constant(3.0));
    CHECK((three.matrix - 3 * Eigen::MatrixXd::Identity(255, 255)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(modal_potential(*dec, ScalarCoefficient::constant(0.0)).matrix.isZero(0.0));
    const ModalPotential xpot = modal_potential(*dec, ScalarCoefficient([](const Point& x) { return x[0]; }));
    CHECK((xpot.matrix - xpot.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // oracle: 16-point Gauss-Legendre per element on the P1 interpolant of phi_1
    const Grid& g = dec->grid();
    const GridFunction phi = dec->mode(0);
    const auto nodal = [&](std::size_t node) {
      const std::size_t dof = g.interior_index(node);
      return dof == Grid::npos ? 0.0 : phi[static_cast<Eigen::Index>(dof)];
    };
    static const double xg[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
                                 0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
    static const double wg[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
                                 0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
    double oracle = 0;
    for (std::size_t e = 0; e + 1 < g.node_count(); ++e) {
      const double x0 = g.nodes()[e][0], x1 = g.nodes()[e + 1][0];
      const double f0 = nodal(e), f1 = nodal(e + 1);
      for (int q = 0; q < 16; ++q) {
        const double xi = q < 8 ? -xg[q] : xg[q - 8];
        const double eta = 0.5 * (1 + xi);
        const double x = x0 + eta * (x1 - x0);
        const double f = f0 + eta * (f1 - f0);
        oracle += 0.5 * (x1 - x0) * wg[q % 8] * x * f * f;
      }
    }
    CHECK(xpot.matrix(0, 0) == doctest::Approx(oracle).epsilon(1e-4));
    CHECK(xpot.matrix(0, 0) == doctest::Approx(pi / 2).epsilon(1e-4));
  }

  TEST_CASE("Schroedinger spectrum shifts") {
    const auto dec = testing::unit_interval(128);
    const FracPower fp(dec, 0.5);
    const Eigen::VectorXd ls = fp.powered_eigenvalues();

    const FracSpectrum free = frac_schroedinger_spectrum(fp, modal_potential(*dec, ScalarCoefficient::constant(0)));
    CHECK((free.mu - ls).cwiseAbs().maxCoeff() <= 1e-10 * ls.maxCoeff());

    const FracSpectrum one = frac_schroedinger_spectrum(fp, modal_potential(*dec, ScalarCoefficient::constant(ls[0])));
    CHECK(std::abs(one.mu[0]) <= 1e-10);

    const FracSpectrum two = frac_schroedinger_spectrum(fp, modal_potential(*dec, ScalarCoefficient::constant(ls[1])));
    CHECK(two.mu[0] == doctest::Approx(ls[0] - ls[1]).epsilon(1e-10));
    CHECK(std::abs(two.mu[1]) <= 1e-10);
    CHECK(std::abs(std::abs(two.modal_vectors(1, 1)) - 1) <= 1e-8);
    CHECK(testing::rel_error(two.functions.col(1), dec->mode(1)) <= 1e-8);
  }

  TEST_CASE("constant shift lowers every mu by the shift") {
    const auto dec = testing::unit_interval(96);
    const FracPower fp(dec, 0.3);
    const ScalarCoefficient C([](const Point& x) { return std::sin(x[0]) + 0.2 * x[0]; });
    const FracSpectrum base = frac_schroedinger_spectrum(fp, modal_potential(*dec, C));
    const FracSpectrum lifted = frac_schroedinger_spectrum(fp, modal_potential(*dec, C.shifted(1.0)));
    const Eigen::VectorXd drop = base.mu - lifted.mu;
    CHECK(drop.minCoeff() >= 1 - 1e-8);
    CHECK(drop.maxCoeff() <= 1 + 1e-8);
  }

  TEST_CASE("dimension checks") {
    const auto dec = testing::unit_interval(32);
    const auto other = testing::unit_interval(64);
    CHECK_THROWS_AS(frac_apply(FracPower(dec, 0.5), GridFunction::Zero(5)), DimensionMismatch);
    CHECK_THROWS_AS(frac_schroedinger_spectrum(FracPower(dec, 0.5),
                                               modal_potential(*other, ScalarCoefficient::constant(1))),
                    DimensionMismatch);
  }
}
