#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fraclab/errors.hpp"

namespace fraclab {

struct QuadratureConfig {
  double tolerance = 1e-8;    ///< stop when successive levels differ by at most this (relative)
  double initial_step = 1.0;  ///< node spacing of level 0
  int max_levels = 16;
};

struct QuadratureReport {
  int levels = 0;
  std::size_t nodes = 0;
  double step = 0.0;
  double error_estimate = 0.0;
};

namespace detail {
inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const Eigen::VectorXd& v) { return v.norm(); }
}  // namespace detail

/// Nested trapezoid sums on anchor + j h over [lo, hi], halving h until two successive
/// sums agree to `config.tolerance` relative to the latest sum. `f(tau)` is the integrand,
/// `tails(first_tau, last_tau, h)` the (possibly analytic) contribution of the nodes that
/// lie outside [lo, hi]. Intended for integrands that are smooth and decaying in tau, where
/// the trapezoid rule converges geometrically. Throws AccuracyError at `max_levels`.
template <typename Value, typename F, typename Tails>
std::pair<Value, QuadratureReport> nested_trapezoid(F&& f, Tails&& tails, double anchor, double lo,
                                                    double hi, Value zero,
                                                    const QuadratureConfig& config) {
  QuadratureReport report;
  double h = config.initial_step;
  Value raw = zero;
  long first = static_cast<long>(std::ceil((lo - anchor) / h));
  long last = static_cast<long>(std::floor((hi - anchor) / h));
  for (long j = first; j <= last; ++j) raw += f(anchor + static_cast<double>(j) * h);
  report.nodes = static_cast<std::size_t>(std::max(0L, last - first + 1));
  Value previous = h * raw + tails(anchor + static_cast<double>(first) * h,
                                   anchor + static_cast<double>(last) * h, h);
  for (int level = 1; level <= config.max_levels; ++level) {
    h *= 0.5;
    first = static_cast<long>(std::ceil((lo - anchor) / h));
    last = static_cast<long>(std::floor((hi - anchor) / h));
    for (long j = first; j <= last; ++j) {
      if (j % 2 != 0) {
        raw += f(anchor + static_cast<double>(j) * h);
        ++report.nodes;
      }
    }
    Value current = h * raw + tails(anchor + static_cast<double>(first) * h,
                                    anchor + static_cast<double>(last) * h, h);
    const double change = detail::magnitude(Value(current - previous));
    const double scale = detail::magnitude(current);
    report.levels = level;
    report.step = h;
    report.error_estimate = scale > 0.0 ? change / scale : change;
    if (change <= config.tolerance * scale || (scale == 0.0 && change == 0.0)) {
      return {current, report};
    }
    previous = std::move(current);
  }
  throw AccuracyError(fmt::format("quadrature did not converge in {} levels (estimate {:.3e})",
                                  config.max_levels, report.error_estimate),
                      report.error_estimate);
}

}  // namespace fraclab
