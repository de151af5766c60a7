#include "fraclab/special.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fraclab/errors.hpp"

namespace fraclab {

double gamma(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("gamma: argument must be finite");
  if (x <= 0.0 && x == std::floor(x)) {
    throw PoleError(fmt::format("gamma has a pole at {}", x));
  }
  constexpr double pi = std::numbers::pi;
  if (x < 0.5) {
    return pi / (std::sin(pi * x) * gamma(1.0 - x));
  }
  static constexpr std::array<double, 9> coefficients = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  constexpr double g = 7.0;
  const double z = x - 1.0;
  double series = coefficients[0];
  for (std::size_t i = 1; i < coefficients.size(); ++i) {
    series += coefficients[i] / (z + static_cast<double>(i));
  }
  const double t = z + g + 0.5;
  return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * series;
}

double trace_constant(double s) {
  return gamma(1.0 - s) / (std::pow(4.0, s) * gamma(1.0 + s));
}

}  // namespace fraclab
