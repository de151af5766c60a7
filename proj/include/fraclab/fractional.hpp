#pragma once

#include <memory>

#include <Eigen/Dense>

#include "fraclab/quadrature.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

/// Spectral fractional power L^s over a fixed decomposition, 0 < s < 1.
class FracPower {
public:
  FracPower(std::shared_ptr<const SpectralDecomposition> dec, double s);

  double s() const noexcept { return s_; }
  /// Weight exponent a = 1 - 2s of the extension problem.
  double a() const noexcept { return 1.0 - 2.0 * s_; }
  const SpectralDecomposition& decomposition() const noexcept { return *dec_; }
  const std::shared_ptr<const SpectralDecomposition>& shared_decomposition() const noexcept {
    return dec_;
  }
  /// lambda_k^s
  Eigen::VectorXd powered_eigenvalues() const;

private:
  std::shared_ptr<const SpectralDecomposition> dec_;
  double s_;
};

/// Throws InvalidArgument (code "s_out_of_range") unless 0 < s < 1.
void validate_order(double s);

/// L^s u = sum_k lambda_k^s u_k phi_k
GridFunction frac_apply(const FracPower& fp, const GridFunction& u);

/// Modal multiplication by lambda_k^exponent for any real exponent; exponent 1 reproduces
/// M^{-1} K u.
GridFunction frac_apply_power(const SpectralDecomposition& dec, double exponent,
                              const GridFunction& u);

struct SemigroupResult {
  GridFunction value;
  QuadratureReport report;
};

/// L^s u from the heat-semigroup integral
///   1/Gamma(-s) * int_0^inf (e^{-tL} u - u) t^{-1-s} dt,
/// integrated in tau = log t on a grid anchored at t = 1/lambda_1. The nodes beyond
/// t = 40/lambda_1 and below t = 1e-7/lambda_max are summed in closed form from the
/// leading asymptotics (-u t^{-s} and -(Lu) t^{1-s}).
SemigroupResult frac_apply_semigroup(const FracPower& fp, const GridFunction& u,
                                     const QuadratureConfig& config = {});

/// Scalar version of the semigroup integral for one eigenvalue; equals lambda^s.
double semigroup_multiplier(double lambda, double s, const QuadratureConfig& config = {});

/// Modal matrix of multiplication by C: C~_km = phi_k^T M_C phi_m.
struct ModalPotential {
  Eigen::MatrixXd matrix;
};

ModalPotential modal_potential(const SpectralDecomposition& dec, const ScalarCoefficient& C);

/// Spectrum of the symmetric matrix diag(lambda^s) - C~.
struct FracSpectrum {
  Eigen::VectorXd mu;             ///< ascending
  Eigen::MatrixXd modal_vectors;  ///< columns in the phi basis
  Eigen::MatrixXd functions;      ///< columns mapped back to grid functions
};

FracSpectrum frac_schroedinger_spectrum(const FracPower& fp, const ModalPotential& pot,
                                        const EigenOptions& options = {});

}  // namespace fraclab
