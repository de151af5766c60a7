#include <doctest.h>

#include <random>

#include "fraclab/comparison.hpp"
#include "fraclab/errors.hpp"
#include "support.hpp"

using namespace fraclab;
using testing::pi;

namespace {

ProblemPair same_operator(std::shared_ptr<const SpectralDecomposition> dec, ScalarCoefficient C1,
                          ScalarCoefficient C2, double s) {
  return ProblemPair{dec, dec, std::move(C1), std::move(C2), s};
}

std::shared_ptr<const SpectralDecomposition> decompose(std::shared_ptr<const Grid> grid, const MatrixCoefficient& A) {
  auto op = std::make_shared<const AssembledOperator>(assemble(grid, A));
  return std::make_shared<const SpectralDecomposition>(eigendecompose(op));
}

}  // namespace

TEST_SUITE("comparison") {
  TEST_CASE("hypothesis flags") {
    const auto dec = testing::unit_interval(32);
    const auto one = ScalarCoefficient::constant(1.0);
    HypothesisFlags f = check_hypotheses(same_operator(dec, one, one, 0.5));
    CHECK(f.b_ordered);
    CHECK(f.c_ordered);
    CHECK(f.c1_positive);
    CHECK(f.hold());

    auto grid = std::make_shared<const Grid>(build_interval_grid(0, pi, 32));
    const ProblemPair doubled = ProblemPair::build(grid, MatrixCoefficient::identity(1), one,
                                                   MatrixCoefficient::scalar(1, [](const Point&) { return 2.0; }), one, 0.5);
    f = check_hypotheses(doubled);
    CHECK(f.b_ordered);
    CHECK(f.min_b_eigen == doctest::Approx(1.0));

    const ProblemPair reversed = ProblemPair{doubled.second, doubled.first, one, one, 0.5};
    CHECK_FALSE(check_hypotheses(reversed).b_ordered);

    f = check_hypotheses(same_operator(dec, ScalarCoefficient::constant(0.0), one, 0.5));
    CHECK_FALSE(f.c_ordered);
    CHECK_FALSE(f.c1_positive);
    CHECK(f.min_c_gap == doctest::Approx(-1.0));
  }

  TEST_CASE("2D hypotheses test the full matrix") {
    auto grid = std::make_shared<const Grid>(build_rectangle_grid(0, 1, 0, 1, 6, 6));
    Eigen::Matrix2d a2;
    a2 << 2, 0.9, 0.9, 2;  // a2 - I has eigenvalues 0.1 and 1.9
    Eigen::Matrix2d a3;
    a3 << 2, 1.2, 1.2, 2;  // a3 - I has eigenvalue -0.2
    const auto one = ScalarCoefficient::constant(1.0);
    const auto I = MatrixCoefficient::identity(2);
    CHECK(check_hypotheses(ProblemPair::build(grid, I, one, MatrixCoefficient::constant(a2), one, 0.5)).b_ordered);
    const HypothesisFlags f = check_hypotheses(ProblemPair::build(grid, I, one, MatrixCoefficient::constant(a3), one, 0.5));
    CHECK_FALSE(f.b_ordered);
    CHECK(f.min_b_eigen == doctest::Approx(-0.2));
  }

  TEST_CASE("calibration") {
    const auto dec = testing::unit_interval();
    const FracPower fp(dec, 0.5);
    const ScalarCoefficient zero = ScalarCoefficient::constant(0.0);
    const ScalarCoefficient c1 = calibrate(fp, zero, 1);
    CHECK(c1({1.0, 0.0}) == doctest::Approx(std::sqrt(dec->eigenvalues[0])).epsilon(1e-12));
    const ScalarCoefficient c2 = calibrate(fp, zero, 2);
    CHECK(c2({0.3, 0.0}) == doctest::Approx(std::sqrt(dec->eigenvalues[1])).epsilon(1e-12));
    const auto kernel = kernel_solutions(fp, c2, 1e-6);
    REQUIRE(kernel.size() == 1);
    CHECK(kernel[0].mode == 2);
    CHECK(testing::rel_error(kernel[0].u, dec->mode(1)) <= 1e-8);

    const ScalarCoefficient sine([](const Point& x) { return std::sin(x[0]); });
    for (std::size_t k : {1u, 3u}) {
      const FracSpectrum sp = frac_schroedinger_spectrum(fp, modal_potential(*dec, calibrate(fp, sine, k)));
      CHECK(std::abs(sp.mu[static_cast<Eigen::Index>(k - 1)]) <= 1e-9);
    }
    CHECK_THROWS_AS(calibrate(fp, zero, 0), InvalidArgument);
    CHECK_THROWS_AS(calibrate(fp, zero, 256), InvalidArgument);
  }

  TEST_CASE("nodal report on the first modes") {
    const auto dec = testing::unit_interval();
    const Grid& g = dec->grid();
    const double h = g.mesh_width();

    const NodalReport first = nodal_report(g, dec->mode(0));
    CHECK_FALSE(first.interior_zero);
    CHECK(first.sign_changes == 0);

    const NodalReport second = nodal_report(g, dec->mode(1));
    CHECK(second.interior_zero);
    REQUIRE(second.sign_changes == 1);
    CHECK(std::abs(second.locations[0][0] - pi / 2) <= h);

    const NodalReport third = nodal_report(g, dec->mode(2));
    REQUIRE(third.sign_changes == 2);
    CHECK(std::abs(third.locations[0][0] - pi / 3) <= h);
    CHECK(std::abs(third.locations[1][0] - 2 * pi / 3) <= h);

    // an exact nodal zero is caught by the near-zero test alone
    GridFunction u = GridFunction::Ones(5);
    u[2] = 0.0;
    auto small = std::make_shared<const Grid>(build_interval_grid(0, 1, 6));
    const NodalReport touch = nodal_report(*small, u);
    CHECK(touch.sign_changes == 0);
    CHECK(touch.near_zero_nodes == 1);
    CHECK(touch.interior_zero);

    CHECK_THROWS_AS(nodal_report(g, GridFunction::Zero(255)), InvalidArgument);
    CHECK_THROWS_AS(nodal_report(g, GridFunction::Ones(4)), DimensionMismatch);
  }

  TEST_CASE("Sturm-Picone instance") {
    const auto dec = testing::unit_interval();
    const FracPower fp(dec, 0.5);
    const ScalarCoefficient zero = ScalarCoefficient::constant(0.0);
    const ScalarCoefficient C2 = calibrate(fp, zero, 1);
    const ScalarCoefficient C1 = calibrate(fp, zero, 2);
    CHECK(C1({0.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(C2({0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-3));

    const ComparisonReport r = run_comparison(same_operator(dec, C1, C2, 0.5));
    CHECK(r.hypotheses.hold());
    CHECK(r.hypotheses.c1_positive);
    REQUIRE(r.second_solutions.size() == 1);
    CHECK(r.second_solutions[0].mode == 1);
    CHECK(r.v_value >= 0.0);
    CHECK(r.v_nonnegative);
    CHECK(r.cross_check);
    CHECK(r.m2_residual <= 0.02);
    REQUIRE(r.first_solutions.size() == 1);
    CHECK(r.first_solutions[0].solution.mode == 2);
    CHECK(r.first_solutions[0].nodal.interior_zero);
    REQUIRE(r.first_solutions[0].nodal.locations.size() == 1);
    CHECK(std::abs(r.first_solutions[0].nodal.locations[0][0] - pi / 2) <= dec->grid().mesh_width());
    CHECK(r.verdict == Verdict::consistent);
    CHECK_FALSE(r.equality_case);

    ComparisonOptions variation;
    variation.mode = ComparisonMode::variation;
    CHECK(run_comparison(same_operator(dec, C1, C2, 0.5), variation).verdict == Verdict::consistent);
  }

  TEST_CASE("equality case is flagged, not failed") {
    const auto dec = testing::unit_interval(128);
    const FracPower fp(dec, 0.5);
    const ScalarCoefficient C = calibrate(fp, ScalarCoefficient::constant(0.0), 1);
    const ComparisonReport r = run_comparison(same_operator(dec, C, C, 0.5));
    REQUIRE(r.first_solutions.size() == 1);
    CHECK_FALSE(r.first_solutions[0].nodal.interior_zero);
    CHECK(r.first_solutions[0].equality_case);
    CHECK(r.equality_case);
    CHECK(r.verdict == Verdict::consistent);
    CHECK(std::abs(r.v_value) <= 1e-10 * r.v_scale);
  }

  TEST_CASE("empty kernels are vacuous") {
    const auto dec = testing::unit_interval(128);
    const FracPower fp(dec, 0.5);
    const ScalarCoefficient C2 = calibrate(fp, ScalarCoefficient::constant(0.0), 1);
    const ScalarCoefficient C1 = ScalarCoefficient::constant(std::sqrt(dec->principal()) + 0.1);
    const ComparisonReport r = run_comparison(same_operator(dec, C1, C2, 0.5));
    CHECK(r.first_solutions.empty());
    CHECK(r.verdict == Verdict::vacuous);

    const ComparisonReport none = run_comparison(same_operator(dec, C1, C1, 0.5));
    CHECK(none.second_solutions.empty());
    CHECK_FALSE(none.v_nonnegative);
    CHECK(none.verdict == Verdict::vacuous);

    // failing hypotheses make no claim
    const ComparisonReport flipped = run_comparison(same_operator(dec, C2, calibrate(fp, ScalarCoefficient::constant(0.0), 2), 0.5));
    CHECK_FALSE(flipped.hypotheses.hold());
    CHECK(flipped.verdict == Verdict::vacuous);
  }

  TEST_CASE("failed premises make no claim") {
    // A_1 = 1 + x exceeds A_2 = 1, so B_2 - B_1 is negative and V(U) = -int y^a x U_x^2 < 0
    auto grid = std::make_shared<const Grid>(build_interval_grid(0, pi, 64));
    const auto dec1 = decompose(grid, MatrixCoefficient::scalar(1, [](const Point& x) { return 1 + x[0]; }));
    const auto dec2 = decompose(grid, MatrixCoefficient::identity(1));
    const ScalarCoefficient C = calibrate(FracPower(dec2, 0.5), ScalarCoefficient::constant(0.0), 1);
    const ProblemPair pair{dec1, dec2, C, C, 0.5};
    const ComparisonReport r = run_comparison(pair);
    CHECK_FALSE(r.hypotheses.b_ordered);
    CHECK(r.verdict == Verdict::vacuous);
    ComparisonOptions variation;
    variation.mode = ComparisonMode::variation;
    const ComparisonReport v = run_comparison(pair, variation);
    CHECK(v.v_value < 0);
    CHECK_FALSE(v.v_nonnegative);
    CHECK(v.verdict == Verdict::vacuous);
  }

  TEST_CASE("randomized PSD perturbations never violate") {
    auto grid = std::make_shared<const Grid>(build_interval_grid(0, pi, 64));
    const auto dec1 = decompose(grid, MatrixCoefficient::identity(1));
    const FracPower fp1(dec1, 0.5);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0, 1);
    std::uniform_int_distribution<int> mode(1, 3);
    for (int trial = 0; trial < 20; ++trial) {
      const double amp = unit(rng), freq = 1 + 3 * unit(rng), phase = 2 * pi * unit(rng);
      const auto dec2 = decompose(grid, MatrixCoefficient::scalar(1, [=](const Point& x) {
        return 1 + amp * 0.5 * (1 + std::sin(freq * x[0] + phase));
      }));
      const FracPower fp2(dec2, 0.5);
      const double c1 = unit(rng), c2 = unit(rng);
      const ScalarCoefficient C0([=](const Point& x) { return c1 * std::sin(x[0]) + c2 * x[0]; });
      const std::size_t k2 = static_cast<std::size_t>(mode(rng));
      const ScalarCoefficient C2 = calibrate(fp2, C0, k2);

      const double bump = unit(rng), centre = pi * unit(rng);
      const ScalarCoefficient lifted([=](const Point& x) {
        return C2(x) + bump * std::exp(-(x[0] - centre) * (x[0] - centre));
      });
      // the first mode at or above 2 whose shift keeps C_1 >= C_2
      const FracSpectrum sp = frac_schroedinger_spectrum(fp1, modal_potential(*dec1, lifted));
      std::size_t k1 = 2;
      while (sp.mu[static_cast<Eigen::Index>(k1 - 1)] < 0) ++k1;
      const ScalarCoefficient C1 = lifted.shifted(sp.mu[static_cast<Eigen::Index>(k1 - 1)]);

      const ComparisonReport r = run_comparison(ProblemPair{dec1, dec2, C1, C2, 0.5});
      CAPTURE(trial);
      CHECK(r.hypotheses.hold());
      CHECK(r.v_nonnegative);
      CHECK(r.cross_check);
      CHECK(r.verdict == Verdict::consistent);
      REQUIRE_FALSE(r.first_solutions.empty());
      for (const auto& f : r.first_solutions) {
        CHECK(f.solution.mode >= 2);
        CHECK(f.nodal.interior_zero);
      }
    }
  }

  TEST_CASE("raising C never raises mu_1") {
    const auto dec = testing::unit_interval(64);
    const FracPower fp(dec, 0.4);
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> unit(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
      const double a = unit(rng), b = unit(rng), c = unit(rng);
      const ScalarCoefficient low([=](const Point& x) { return a * std::cos(x[0]) + b; });
      const ScalarCoefficient high([=](const Point& x) { return a * std::cos(x[0]) + b + c * x[0] * x[0]; });
      const double mu_low = frac_schroedinger_spectrum(fp, modal_potential(*dec, low)).mu[0];
      const double mu_high = frac_schroedinger_spectrum(fp, modal_potential(*dec, high)).mu[0];
      CHECK(mu_high <= mu_low + 1e-9);
    }
  }

  TEST_CASE("mismatched pair") {
    const auto a = testing::unit_interval(32);
    const auto b = testing::unit_interval(64);
    const auto one = ScalarCoefficient::constant(1.0);
    CHECK_THROWS_AS(check_hypotheses(ProblemPair{a, b, one, one, 0.5}), DimensionMismatch);
    CHECK_THROWS_AS(check_hypotheses(ProblemPair{a, a, one, one, 1.5}), InvalidArgument);
  }
}
