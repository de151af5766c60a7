#pragma once

namespace fraclab {

/// Gamma function via the Lanczos approximation (g = 7), with the reflection formula
/// for x < 1/2. Throws PoleError at non-positive integers.
double gamma(double x);

/// c_s = Gamma(1 - s) / (4^s Gamma(1 + s)), the constant relating the weighted Neumann
/// trace of the extension to L^s u.
double trace_constant(double s);

}  // namespace fraclab
