#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fraclab {

using Potential = std::function<double(double)>;

/// u'' + d u'/r + c u = 0, the radial form of -(-Delta)^s u + c u = 0 in R^n.
struct RadialODE {
  double d = 0;
  double c = 0;
  int n = 1;
  double s = 0.5;
};

/// d = n + 1 - 2s. Accepts 0 < s <= 1; s = 1 gives the classical damping n - 1.
RadialODE radial_reduce(int n, double s, double c);

/// y'' + q(r) y = 0 on r > r_min.
struct TransformedODE {
  Potential q;
  double r_min = 0;
};

/// u = y r^{s-1} removes the damping of the n = 1 reduction (d = 2(1 - s)), leaving
/// q(r) = (c r^2 - s^2 + s) / r^2. Other dimensions throw InvalidArgument.
TransformedODE liouville_transform(const RadialODE& ode);

/// Relative residual of u = y r^{s-1} in the radial equation, with y integrated from the
/// transformed equation (y(r0) = 1, y'(r0) = 0) and y'' differenced from y'. The residual
/// is scaled by |u''| + |d u'/r| + |c u| at each of `samples` points of [r0, R].
double liouville_residual(const RadialODE& ode, double r0, double R, int samples = 50);

struct PrueferConfig {
  double rtol = 1e-12;
  double atol = 1e-12;
  double root_tol = 1e-10;   ///< bisection width on zero locations
  double min_step = 1e-14;   ///< relative to max(1, |r|)
  std::size_t max_steps = 10'000'000;
};

struct SpacingStats {
  double min = 0;
  double max = 0;
  double mean = 0;
  double tail = 0;  ///< mean over the last tenth of the spacings (at least one)
};

enum class OscillationClass { oscillatory, non_oscillatory, inconclusive };
std::string to_string(OscillationClass c);

struct OscillationEvidence {
  double r0 = 0;
  double R = 0;
  std::vector<double> zeros;  ///< strictly increasing, in [r0, R)
  SpacingStats spacing;
  std::vector<std::size_t> window_counts;  ///< filled by oscillation_classify
  OscillationClass classification = OscillationClass::inconclusive;

  std::size_t count() const noexcept { return zeros.size(); }
};

/// Initial phase of (y, p y') in [0, pi); the sign of the solution does not move zeros.
double initial_phase(double y0, double flux0);

/// Zeros in [r0, R) of y'' + q y = 0 from the phase equation theta' = cos^2 + q sin^2 with
/// theta(r0) = theta0. Zeros are the crossings theta = k pi, bisected to root_tol; a
/// crossing within 1e-9 of theta(R) counts as lying at R and is excluded. Throws
/// IntegrationError with the location when the step size underflows or q is not finite.
OscillationEvidence integrate_prufer(const Potential& q, double r0, double R, double theta0 = 0.0,
                                     const PrueferConfig& config = {});

/// Same for (p y')' + Q y = 0 with y = rho sin theta, p y' = rho cos theta:
/// theta' = cos^2 / p + Q sin^2.
OscillationEvidence integrate_prufer(const Potential& p, const Potential& Q, double r0, double R,
                                     double theta0, const PrueferConfig& config = {});

/// Zeros of the radial solution itself, written as (r^d u')' + c r^d u = 0 and scanned with
/// the modified phase u = rho sin theta, r^d u' = k rho cos theta, k = sqrt(c) r^d
/// (r^d when c <= 0); theta0 is that modified phase.
OscillationEvidence radial_zeros(const RadialODE& ode, double r0, double R, double theta0 = 0.0,
                                 const PrueferConfig& config = {});

/// Modified phase of radial_zeros for u(r0) = u0, u'(r0) = du0.
double radial_initial_phase(const RadialODE& ode, double u0, double du0);

enum class SturmVerdict { holds, fails, inconclusive };
std::string to_string(SturmVerdict v);

struct SturmWitness {
  double theta0 = 0;  ///< initial phase of the q1 solution at t1
  double zero = 0;    ///< its first zero after t1, or NaN
};

struct SturmResult {
  SturmVerdict verdict = SturmVerdict::inconclusive;
  std::string reason;
  double t1 = 0, t2 = 0;  ///< consecutive zeros of the q2 solution y(a) = 0, y'(a) = 1
  std::vector<SturmWitness> witnesses;
};

/// Classical comparison check: q1 > q2 is tested at 1000 points of [a, b]; between the
/// first two zeros of the q2 solution each of `trials` q1 solutions with random initial
/// phase in (0, pi) must vanish.
SturmResult sturm_compare(const Potential& q1, const Potential& q2, double a, double b,
                          std::uint64_t seed = 1, int trials = 5);

/// Zero counts per window [r0 2^j, r0 2^{j+1}), j < windows, of the solution started at
/// theta0. Oscillatory evidence when every window has a zero, non-oscillatory evidence when
/// the last 75% of the windows have none. Requires windows >= 4 and r0 2^windows <= R_max.
OscillationEvidence oscillation_classify(const Potential& q, double r0, double R_max, int windows,
                                         double theta0 = 0.0, const PrueferConfig& config = {});

/// r0 2^windows after checking windows >= 4 and that it does not pass R_max.
double window_end(double r0, double R_max, int windows);

/// Fills window_counts and classification of a scan that started at ev.r0.
void classify_windows(OscillationEvidence& ev, int windows);

/// "index,location,spacing" with ten decimals; the first spacing is empty.
void write_evidence_csv(std::ostream& out, const OscillationEvidence& evidence);

}  // namespace fraclab
