#include "fraclab/fractional.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fraclab/errors.hpp"
#include "fraclab/special.hpp"

namespace fraclab {

void validate_order(double s) {
  if (!(s > 0.0 && s < 1.0)) {
    throw InvalidArgument(fmt::format("fractional order s must lie in (0, 1) (got {})", s),
                          "s_out_of_range");
  }
}

FracPower::FracPower(std::shared_ptr<const SpectralDecomposition> dec, double s)
    : dec_(std::move(dec)), s_(s) {
  if (!dec_) throw InvalidArgument("FracPower: null decomposition");
  validate_order(s);
}

Eigen::VectorXd FracPower::powered_eigenvalues() const {
  return dec_->eigenvalues.array().pow(s_).matrix();
}

GridFunction frac_apply(const FracPower& fp, const GridFunction& u) {
  return frac_apply_power(fp.decomposition(), fp.s(), u);
}

GridFunction frac_apply_power(const SpectralDecomposition& dec, double exponent,
                              const GridFunction& u) {
  const Eigen::VectorXd coeffs = project(dec, u);
  return dec.modes * (dec.eigenvalues.array().pow(exponent) * coeffs.array()).matrix();
}

namespace {

constexpr double kUpperCut = 40.0;   // t * lambda_1 beyond which e^{-tL} u is negligible
constexpr double kLowerCut = 1e-7;   // t * lambda_max below which e^{-tL} u ~ u - t L u

/// Sum over tau_j = start - j h, j >= 1, of h e^{rate tau_j}.
double geometric_tail(double start, double h, double rate) {
  const double q = std::exp(-rate * h);
  return h * std::exp(rate * start) * q / (1.0 - q);
}

}  // namespace

SemigroupResult frac_apply_semigroup(const FracPower& fp, const GridFunction& u,
                                     const QuadratureConfig& config) {
  const SpectralDecomposition& dec = fp.decomposition();
  require_size(dec, u, "frac_apply_semigroup");
  const double s = fp.s();
  const double lambda_min = dec.eigenvalues[0];
  const double lambda_max = dec.eigenvalues[dec.eigenvalues.size() - 1];

  if (u.isZero(0.0)) return {GridFunction::Zero(u.size()), {}};

  // generator applied to u, from the assembled matrices
  const Eigen::VectorXd Lu = dec.mass().llt().solve(dec.op->stiffness * u);

  const auto integrand = [&](double tau) -> Eigen::VectorXd {
    const double t = std::exp(tau);
    return heat_increment(dec, t, u) * std::exp(-s * tau);
  };
  const auto tails = [&](double first, double last, double h) -> Eigen::VectorXd {
    return -Lu * geometric_tail(first, h, 1.0 - s) - u * geometric_tail(-last, h, s);
  };
  const double anchor = -std::log(lambda_min);
  const double lo = std::log(kLowerCut / lambda_max);
  const double hi = std::log(kUpperCut / lambda_min);
  auto [integral, report] = nested_trapezoid(integrand, tails, anchor, lo, hi,
                                             Eigen::VectorXd(Eigen::VectorXd::Zero(u.size())),
                                             config);
  return {integral / gamma(-s), report};
}

double semigroup_multiplier(double lambda, double s, const QuadratureConfig& config) {
  validate_order(s);
  if (!(lambda > 0.0)) throw InvalidArgument("semigroup_multiplier: lambda must be positive");
  const auto integrand = [&](double tau) {
    const double t = std::exp(tau);
    return std::expm1(-lambda * t) * std::exp(-s * tau);
  };
  const auto tails = [&](double first, double last, double h) {
    return -lambda * geometric_tail(first, h, 1.0 - s) - geometric_tail(-last, h, s);
  };
  const double anchor = -std::log(lambda);
  auto [integral, report] = nested_trapezoid(integrand, tails, anchor,
                                             anchor + std::log(kLowerCut),
                                             anchor + std::log(kUpperCut), 0.0, config);
  return integral / gamma(-s);
}

ModalPotential modal_potential(const SpectralDecomposition& dec, const ScalarCoefficient& C) {
  const Eigen::MatrixXd weighted = assemble_weighted_mass(dec.grid(), C);
  Eigen::MatrixXd modal = dec.modes.transpose() * weighted * dec.modes;
  return {0.5 * (modal + modal.transpose())};
}

FracSpectrum frac_schroedinger_spectrum(const FracPower& fp, const ModalPotential& pot,
                                        const EigenOptions& options) {
  const SpectralDecomposition& dec = fp.decomposition();
  const auto n = static_cast<Eigen::Index>(dec.size());
  if (pot.matrix.rows() != n || pot.matrix.cols() != n) {
    throw DimensionMismatch("modal potential was built on a different decomposition");
  }
  Eigen::MatrixXd shifted = -pot.matrix;
  shifted.diagonal() += fp.powered_eigenvalues();
  EigenResult eig = symmetric_eigen(shifted, options);

  FracSpectrum spectrum;
  spectrum.mu = std::move(eig.values);
  spectrum.functions = dec.modes * eig.vectors;
  // sign convention on the nodal functions, carried over to the modal vectors
  Eigen::MatrixXd normalized = spectrum.functions;
  normalize_signs(normalized);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (normalized.col(k).dot(spectrum.functions.col(k)) < 0.0) eig.vectors.col(k) *= -1.0;
  }
  spectrum.functions = std::move(normalized);
  spectrum.modal_vectors = std::move(eig.vectors);
  return spectrum;
}

}  // namespace fraclab
