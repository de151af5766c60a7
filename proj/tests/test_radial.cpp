#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "fraclab/errors.hpp"
#include "fraclab/radial.hpp"

using namespace fraclab;

namespace {

constexpr double pi = std::numbers::pi;

Potential constant(double v) {
  return [v](double) { return v; };
}

}  // namespace

TEST_SUITE("radial") {
  TEST_CASE("reduction coefficients") {
    for (double s : {0.25, 0.5, 0.75}) {
      const RadialODE r2 = radial_reduce(1, s, 4);
      CHECK(r2.d == doctest::Approx(2 * (1 - s)));
      CHECK(r2.c == 4);
      CHECK(radial_reduce(1, s, -1).c == -1);
      CHECK(radial_reduce(3, s, 1).d == doctest::Approx(4 - 2 * s));
    }
    CHECK(radial_reduce(1, 1.0, 1).d == 0.0);
    try {
      radial_reduce(1, 1.5, 4);
      FAIL("accepted s = 1.5");
    } catch (const InvalidArgument& e) {
      CHECK(e.code() == "s_out_of_range");
    }
    CHECK_THROWS_AS(radial_reduce(1, 0.0, 4), InvalidArgument);
    CHECK_THROWS_AS(radial_reduce(0, 0.5, 4), InvalidArgument);
  }

  TEST_CASE("Liouville transform") {
    const TransformedODE q_osc = liouville_transform(radial_reduce(1, 0.5, 4));
    const TransformedODE q_decay = liouville_transform(radial_reduce(1, 0.5, -1));
    for (double r : {0.5, 1.0, 3.0, 50.0}) {
      CHECK(q_osc.q(r) == doctest::Approx((4 * r * r + 0.25) / (r * r)).epsilon(1e-15));
      CHECK(q_decay.q(r) == doctest::Approx((-r * r + 0.25) / (r * r)).epsilon(1e-15));
    }
    CHECK(q_osc.r_min == 0.0);
    for (double s : {0.25, 0.5, 0.75}) {
      for (double c : {4.0, -1.0}) CHECK(liouville_residual(radial_reduce(1, s, c), 1, 10) <= 1e-6);
    }
    try {
      liouville_transform(radial_reduce(2, 0.5, 4));
      FAIL("accepted n = 2");
    } catch (const InvalidArgument& e) {
      CHECK(e.code() == "unsupported_reduction");
    }
  }

  TEST_CASE("constant potentials") {
    const OscillationEvidence one = integrate_prufer(constant(1), 0, 10 * pi);
    REQUIRE(one.count() == 10);
    for (std::size_t k = 0; k < 10; ++k) CHECK(std::abs(one.zeros[k] - k * pi) <= 1e-8);
    CHECK(std::abs(one.spacing.min - pi) <= 1e-8);
    CHECK(std::abs(one.spacing.max - pi) <= 1e-8);

    const OscillationEvidence four = integrate_prufer(constant(4), 0, 10 * pi);
    REQUIRE(four.count() == 20);
    CHECK(std::abs(four.spacing.mean - pi / 2) <= 1e-8);
    CHECK(std::abs(four.spacing.max - four.spacing.min) <= 1e-8);

    // y = sin(r + 1): the first zero is pi - 1
    const OscillationEvidence shifted = integrate_prufer(constant(1), 0, 4, initial_phase(std::sin(1.0), std::cos(1.0)));
    REQUIRE(shifted.count() == 1);
    CHECK(std::abs(shifted.zeros[0] - (pi - 1)) <= 1e-9);
  }

  TEST_CASE("Euler equation y'' + y / 4r^2 = 0") {
    // y = sqrt(r) has no zeros; y(1) = 1, y'(1) = 0 gives sqrt(r)(1 - ln r / 2), zero at e^2
    const Potential q = [](double r) { return 1 / (4 * r * r); };
    CHECK(integrate_prufer(q, 1, 100, initial_phase(1, 0.5)).count() == 0);
    const OscillationEvidence flat = integrate_prufer(q, 1, 100, initial_phase(1, 0));
    REQUIRE(flat.count() == 1);
    CHECK(std::abs(flat.zeros[0] - std::exp(2.0)) <= 1e-8);
  }

  TEST_CASE("the transformation preserves zeros") {
    PrueferConfig tight;
    tight.rtol = 1e-14;
    tight.atol = 1e-14;
    tight.root_tol = 1e-12;
    for (double s : {0.25, 0.5, 0.75}) {
      const RadialODE ode = radial_reduce(1, s, 4);
      const TransformedODE t = liouville_transform(ode);
      const OscillationEvidence u = radial_zeros(ode, 1, 30, 0.0, tight);
      const OscillationEvidence y = integrate_prufer(t.q, 1, 30, 0.0, tight);
      REQUIRE(u.count() == y.count());
      CHECK(u.count() > 10);
      for (std::size_t k = 0; k < u.count(); ++k) CHECK(std::abs(u.zeros[k] - y.zeros[k]) <= 1e-10);
    }
  }

  TEST_CASE("Sturm separation on the sin/cos pair") {
    for (double q : {1.0, 4.0, 9.5}) {
      const OscillationEvidence a = integrate_prufer(constant(q), 0, 20);
      const OscillationEvidence b = integrate_prufer(constant(q), 0, 20, pi / 2);
      REQUIRE(a.count() >= 3);
      for (std::size_t k = 0; k + 1 < a.count(); ++k) {
        const auto between = std::count_if(b.zeros.begin(), b.zeros.end(),
                                           [&](double z) { return z > a.zeros[k] && z < a.zeros[k + 1]; });
        CHECK(between == 1);
      }
    }
  }

  TEST_CASE("larger potentials never give fewer zeros") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unit(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
      const double a = 1 + 3 * unit(rng), b = unit(rng), c = unit(rng), w = 1 + 2 * unit(rng);
      const Potential low = [=](double r) { return a + b * std::sin(w * r); };
      const Potential high = [=](double r) { return a + b * std::sin(w * r) + c * (1 + std::cos(r)); };
      const double theta0 = pi * unit(rng);
      CHECK(integrate_prufer(high, 1, 30, theta0).count() >= integrate_prufer(low, 1, 30, theta0).count());
    }
  }

  TEST_CASE("classical Sturm comparison") {
    const SturmResult classic = sturm_compare(constant(4), constant(1), 0, 2 * pi, 7);
    CHECK(classic.verdict == SturmVerdict::holds);
    CHECK(std::abs(classic.t1) <= 1e-12);
    CHECK(std::abs(classic.t2 - pi) <= 1e-8);
    REQUIRE(classic.witnesses.size() == 5);
    for (const auto& w : classic.witnesses) {
      CHECK(w.zero > classic.t1);
      CHECK(w.zero < classic.t2);
    }

    const Potential q_osc = liouville_transform(radial_reduce(1, 0.5, 4)).q;
    const SturmResult shifted = sturm_compare(q_osc, constant(4), 1, 20, 11);
    CHECK(shifted.verdict == SturmVerdict::holds);
    CHECK(std::abs(shifted.t2 - shifted.t1 - pi / 2) <= 1e-8);

    const SturmResult equal = sturm_compare(constant(4), constant(4), 0, 2 * pi);
    CHECK(equal.verdict == SturmVerdict::inconclusive);
    CHECK_FALSE(equal.reason.empty());
    CHECK(sturm_compare(constant(1), constant(0.01), 0, 2).verdict == SturmVerdict::inconclusive);
  }

  TEST_CASE("oscillation classification") {
    const Potential q_osc = liouville_transform(radial_reduce(1, 0.5, 4)).q;
    const OscillationEvidence osc = oscillation_classify(q_osc, 1, 256, 8);
    CHECK(osc.classification == OscillationClass::oscillatory);
    REQUIRE(osc.window_counts.size() == 8);
    for (std::size_t c : osc.window_counts) CHECK(c >= 1);
    CHECK(std::abs(osc.spacing.tail / (pi / 2) - 1) <= 0.02);
    for (std::size_t k = 1; k < osc.count(); ++k) CHECK(osc.zeros[k] > osc.zeros[k - 1]);

    const Potential q_decay = liouville_transform(radial_reduce(1, 0.5, -1)).q;
    const OscillationEvidence non = oscillation_classify(q_decay, 1, 256, 8);
    CHECK(non.classification == OscillationClass::non_oscillatory);
    for (std::size_t j = 1; j < 8; ++j) CHECK(non.window_counts[j] == 0);

    const OscillationEvidence flat = oscillation_classify(constant(0), 1, 256, 8);
    CHECK(flat.count() <= 1);
    CHECK(flat.classification == OscillationClass::non_oscillatory);

    CHECK_THROWS_AS(oscillation_classify(q_osc, 1, 256, 3), InvalidArgument);
    CHECK_THROWS_AS(oscillation_classify(q_osc, 1, 100, 8), InvalidArgument);
  }

  TEST_CASE("integration failures carry a location") {
    const Potential blowup = [](double r) { return r < 2 ? 1.0 : std::nan(""); };
    try {
      integrate_prufer(blowup, 0, 5);
      FAIL("expected an integration failure");
    } catch (const IntegrationError& e) {
      CHECK(e.code() == "integration_failure");
      CHECK(e.location() >= 2.0);
      CHECK(std::isnan(blowup(e.location())));
    }
    CHECK_THROWS_AS(integrate_prufer(constant(1), 3, 1), InvalidArgument);
    CHECK_THROWS_AS(initial_phase(0, 0), InvalidArgument);
  }

  TEST_CASE("evidence csv") {
    const OscillationEvidence ev = integrate_prufer(constant(1), 0, 2 * pi + 0.5);
    std::ostringstream out;
    write_evidence_csv(out, ev);
    CHECK(out.str() == "index,location,spacing\n1,0.0000000000,\n2,3.1415926536,3.1415926536\n3,6.2831853072,3.1415926536\n");
  }
}
