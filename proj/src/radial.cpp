#include "fraclab/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {

constexpr double kPi = std::numbers::pi;

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
State<N> axpy(const State<N>& y, double h, std::initializer_list<std::pair<double, const State<N>*>> terms) {
  State<N> out = y;
  for (const auto& [c, k] : terms) {
    for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
  }
  return out;
}

/// One Dormand-Prince 5(4) step; returns the fifth-order solution and the error estimate.
template <std::size_t N, class F>
std::pair<State<N>, State<N>> dp45_step(F&& f, double r, const State<N>& y, double h) {
  const State<N> k1 = f(r, y);
  const State<N> k2 = f(r + h / 5, axpy<N>(y, h, {{1.0 / 5, &k1}}));
  const State<N> k3 = f(r + 3 * h / 10, axpy<N>(y, h, {{3.0 / 40, &k1}, {9.0 / 40, &k2}}));
  const State<N> k4 = f(r + 4 * h / 5, axpy<N>(y, h, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}));
  const State<N> k5 = f(r + 8 * h / 9, axpy<N>(y, h, {{19372.0 / 6561, &k1}, {-25360.0 / 2187, &k2},
                                                      {64448.0 / 6561, &k3}, {-212.0 / 729, &k4}}));
  const State<N> k6 = f(r + h, axpy<N>(y, h, {{9017.0 / 3168, &k1}, {-355.0 / 33, &k2}, {46732.0 / 5247, &k3},
                                              {49.0 / 176, &k4}, {-5103.0 / 18656, &k5}}));
  const State<N> y5 = axpy<N>(y, h, {{35.0 / 384, &k1}, {500.0 / 1113, &k3}, {125.0 / 192, &k4},
                                     {-2187.0 / 6784, &k5}, {11.0 / 84, &k6}});
  const State<N> k7 = f(r + h, y5);
  State<N> err{};
  static constexpr std::array<double, 7> e{71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
                                           22.0 / 525, -1.0 / 40};
  for (std::size_t i = 0; i < N; ++i) {
    err[i] = h * (e[0] * k1[i] + e[2] * k3[i] + e[3] * k4[i] + e[4] * k5[i] + e[5] * k6[i] + e[6] * k7[i]);
  }
  return {y5, err};
}

template <std::size_t N>
double error_norm(const State<N>& y0, const State<N>& y1, const State<N>& err, const PrueferConfig& cfg) {
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double scale = cfg.atol + cfg.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    worst = std::max(worst, std::abs(err[i]) / scale);
  }
  return worst;
}

/// Adaptive stepping from r0 to R; `on_step(r, y_old, h, y_new)` sees every accepted step.
template <std::size_t N, class F, class OnStep>
State<N> integrate(F&& f, double r0, double R, State<N> y, const PrueferConfig& cfg, OnStep&& on_step) {
  double r = r0;
  double h = std::min(1e-3 * std::max(1.0, std::abs(R - r0)), R - r0);
  std::size_t steps = 0;
  while (r < R) {
    if (++steps > cfg.max_steps) throw IntegrationError(fmt::format("step limit reached at r = {}", r), r);
    h = std::min(h, R - r);
    const auto [y1, err] = dp45_step<N>(f, r, y, h);
    for (double v : y1) {
      if (!std::isfinite(v)) throw IntegrationError(fmt::format("non-finite solution at r = {}", r), r);
    }
    const double e = error_norm<N>(y, y1, err, cfg);
    if (e <= 1.0) {
      const double r1 = (R - r - h <= 1e-15 * std::max(1.0, std::abs(R))) ? R : r + h;
      on_step(r, y, r1 - r, y1);
      r = r1;
      y = y1;
    }
    const double factor = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < cfg.min_step * std::max(1.0, std::abs(r))) {
      throw IntegrationError(fmt::format("step size underflow at r = {}", r), r);
    }
  }
  return y;
}

SpacingStats spacing_stats(const std::vector<double>& zeros) {
  SpacingStats st;
  if (zeros.size() < 2) return st;
  std::vector<double> gaps(zeros.size() - 1);
  for (std::size_t i = 0; i + 1 < zeros.size(); ++i) gaps[i] = zeros[i + 1] - zeros[i];
  st.min = *std::min_element(gaps.begin(), gaps.end());
  st.max = *std::max_element(gaps.begin(), gaps.end());
  double sum = 0.0;
  for (double g : gaps) sum += g;
  st.mean = sum / static_cast<double>(gaps.size());
  const std::size_t tail = std::max<std::size_t>(1, gaps.size() / 10);
  double tail_sum = 0.0;
  for (std::size_t i = gaps.size() - tail; i < gaps.size(); ++i) tail_sum += gaps[i];
  st.tail = tail_sum / static_cast<double>(tail);
  return st;
}

}  // namespace

RadialODE radial_reduce(int n, double s, double c) {
  if (!(s > 0.0 && s <= 1.0)) {
    throw InvalidArgument(fmt::format("order s = {} outside (0, 1]", s), "s_out_of_range");
  }
  if (n < 1) throw InvalidArgument(fmt::format("dimension n = {} must be at least 1", n));
  if (!std::isfinite(c)) throw InvalidArgument("radial constant c must be finite");
  return RadialODE{n + 1 - 2 * s, c, n, s};
}

TransformedODE liouville_transform(const RadialODE& ode) {
  if (ode.n != 1 || std::abs(ode.d - 2 * (1 - ode.s)) > 1e-14) {
    throw InvalidArgument(
        fmt::format("Liouville transform implemented for n = 1 (d = 2(1 - s)); got n = {}, d = {}", ode.n, ode.d),
        "unsupported_reduction");
  }
  const double c = ode.c, s = ode.s;
  return TransformedODE{[c, s](double r) { return (c * r * r - s * s + s) / (r * r); }, 0.0};
}

double liouville_residual(const RadialODE& ode, double r0, double R, int samples) {
  const TransformedODE t = liouville_transform(ode);
  if (!(r0 > 0.0 && R > r0) || samples < 2) throw InvalidArgument("liouville_residual needs 0 < r0 < R, samples >= 2");
  const auto rhs = [&t](double r, const State<2>& y) { return State<2>{y[1], -t.q(r) * y[0]}; };
  PrueferConfig cfg;
  cfg.rtol = 1e-13;
  cfg.atol = 1e-14;

  // evaluation points with their +-h neighbours for differencing y'
  std::vector<double> where;
  std::vector<double> hs;
  for (int i = 0; i < samples; ++i) {
    const double r = r0 + (R - r0) * (0.05 + 0.9 * i / (samples - 1));
    const double h = 1e-4 * std::max(1.0, r);
    hs.push_back(h);
    where.insert(where.end(), {r - h, r, r + h});
  }
  std::vector<State<2>> values;
  State<2> y{1.0, 0.0};
  double r = r0;
  for (double target : where) {
    y = integrate<2>(rhs, r, target, y, cfg, [](double, const State<2>&, double, const State<2>&) {});
    r = target;
    values.push_back(y);
  }

  const double s = ode.s, m = s - 1.0;
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = where[3 * static_cast<std::size_t>(i) + 1];
    const double h = hs[static_cast<std::size_t>(i)];
    const State<2>& mid = values[3 * static_cast<std::size_t>(i) + 1];
    const double ypp = (values[3 * static_cast<std::size_t>(i) + 2][1] - values[3 * static_cast<std::size_t>(i)][1]) / (2 * h);
    const double rm = std::pow(x, m);
    const double u = mid[0] * rm;
    const double up = mid[1] * rm + m * mid[0] * rm / x;
    const double upp = ypp * rm + 2 * m * mid[1] * rm / x + m * (m - 1) * mid[0] * rm / (x * x);
    const double res = upp + ode.d * up / x + ode.c * u;
    const double scale = std::abs(upp) + std::abs(ode.d * up / x) + std::abs(ode.c * u);
    worst = std::max(worst, std::abs(res) / (scale + 1e-300));
  }
  return worst;
}

std::string to_string(OscillationClass c) {
  switch (c) {
    case OscillationClass::oscillatory: return "oscillatory-evidence";
    case OscillationClass::non_oscillatory: return "non-oscillatory-evidence";
    case OscillationClass::inconclusive: return "inconclusive";
  }
  return "unknown";
}

double initial_phase(double y0, double flux0) {
  if (y0 == 0.0 && flux0 == 0.0) throw InvalidArgument("the zero solution has no phase");
  double theta = std::atan2(y0, flux0);
  if (theta < 0.0) theta += kPi;
  if (theta >= kPi) theta -= kPi;
  return theta;
}

namespace {

/// Scan of theta' = (k/p) cos^2 + (Q/k) sin^2 + (k'/k) sin cos for y = rho sin theta,
/// p y' = k rho cos theta; zeros of y sit at theta = k pi for every scale k(r) > 0.
OscillationEvidence prufer_scan(const Potential& p, const Potential& Q, const Potential& kappa,
                                const Potential& kappa_log_slope, double r0, double R, double theta0,
                                const PrueferConfig& config) {
  if (!(R > r0) || !std::isfinite(r0) || !std::isfinite(R)) {
    throw InvalidArgument(fmt::format("Pruefer scan needs r0 < R, got [{}, {}]", r0, R));
  }
  const auto rhs = [&](double r, const State<1>& th) {
    const double c = std::cos(th[0]), s = std::sin(th[0]);
    const double pv = p(r), qv = Q(r), k = kappa(r);
    if (!std::isfinite(qv) || !std::isfinite(pv) || pv <= 0.0 || !(k > 0.0)) {
      throw IntegrationError(fmt::format("coefficients not finite (or p <= 0) at r = {}", r), r);
    }
    return State<1>{k / pv * c * c + qv / k * s * s + kappa_log_slope(r) * s * c};
  };

  OscillationEvidence ev;
  ev.r0 = r0;
  ev.R = R;
  std::vector<double> levels;  // k pi of every recorded zero
  double next = std::ceil(theta0 / kPi);
  if (next * kPi == theta0) {
    ev.zeros.push_back(r0);
    levels.push_back(theta0);
    next += 1.0;
  }
  const State<1> end = integrate<1>(rhs, r0, R, State<1>{theta0}, config,
                                    [&](double r, const State<1>& y0, double h, const State<1>& y1) {
    while (next * kPi <= y1[0]) {
      const double level = next * kPi;
      double lo = 0.0, hi = h;
      while (hi - lo > config.root_tol) {
        const double mid = 0.5 * (lo + hi);
        const double th = dp45_step<1>(rhs, r, y0, mid).first[0];
        (th < level ? lo : hi) = mid;
      }
      ev.zeros.push_back(r + 0.5 * (lo + hi));
      levels.push_back(level);
      next += 1.0;
    }
  });
  while (!levels.empty() && levels.back() > end[0] - 1e-9) {
    levels.pop_back();
    ev.zeros.pop_back();
  }
  ev.spacing = spacing_stats(ev.zeros);
  return ev;
}

}  // namespace

OscillationEvidence integrate_prufer(const Potential& p, const Potential& Q, double r0, double R, double theta0,
                                     const PrueferConfig& config) {
  return prufer_scan(p, Q, [](double) { return 1.0; }, [](double) { return 0.0; }, r0, R, theta0, config);
}

OscillationEvidence integrate_prufer(const Potential& q, double r0, double R, double theta0,
                                     const PrueferConfig& config) {
  return integrate_prufer([](double) { return 1.0; }, q, r0, R, theta0, config);
}

namespace {
double radial_scale(const RadialODE& ode) { return ode.c > 0.0 ? std::sqrt(ode.c) : 1.0; }
}  // namespace

double radial_initial_phase(const RadialODE& ode, double u0, double du0) {
  // tan theta = k u / (r^d u') with k = k0 r^d
  return initial_phase(radial_scale(ode) * u0, du0);
}

OscillationEvidence radial_zeros(const RadialODE& ode, double r0, double R, double theta0,
                                 const PrueferConfig& config) {
  if (!(r0 > 0.0)) throw InvalidArgument("radial scan must start at r0 > 0");
  // scale k = sqrt(c) r^d balances both phase terms; with k = 1 the phase drifts by
  // 5e-8 over [1, 30] at s = 0.25
  const double d = ode.d, c = ode.c;
  const double k0 = radial_scale(ode);
  return prufer_scan([d](double r) { return std::pow(r, d); }, [d, c](double r) { return c * std::pow(r, d); },
                     [d, k0](double r) { return k0 * std::pow(r, d); }, [d](double r) { return d / r; }, r0, R,
                     theta0, config);
}

std::string to_string(SturmVerdict v) {
  switch (v) {
    case SturmVerdict::holds: return "holds";
    case SturmVerdict::fails: return "fails";
    case SturmVerdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

SturmResult sturm_compare(const Potential& q1, const Potential& q2, double a, double b, std::uint64_t seed,
                          int trials) {
  SturmResult result;
  if (!(b > a)) throw InvalidArgument("sturm_compare needs a < b");
  for (int i = 0; i <= 1000; ++i) {
    const double r = a + (b - a) * i / 1000.0;
    if (!(q1(r) > q2(r))) {
      result.reason = fmt::format("q1 > q2 fails at r = {}", r);
      return result;
    }
  }
  const OscillationEvidence base = integrate_prufer(q2, a, b, 0.0);
  if (base.zeros.size() < 2) {
    result.reason = "the q2 solution has fewer than two zeros in range";
    return result;
  }
  result.t1 = base.zeros[0];
  result.t2 = base.zeros[1];

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kPi);
  result.verdict = SturmVerdict::holds;
  for (int t = 0; t < trials; ++t) {
    SturmWitness w;
    do {
      w.theta0 = phase(rng);
    } while (w.theta0 == 0.0);
    const OscillationEvidence ev = integrate_prufer(q1, result.t1, result.t2, w.theta0);
    w.zero = ev.zeros.empty() ? std::numeric_limits<double>::quiet_NaN() : ev.zeros.front();
    if (ev.zeros.empty()) {
      result.verdict = SturmVerdict::fails;
      result.reason = fmt::format("q1 solution with phase {} has no zero in ({}, {})", w.theta0, result.t1, result.t2);
    }
    result.witnesses.push_back(w);
  }
  return result;
}

void classify_windows(OscillationEvidence& ev, int windows) {
  if (windows < 4) throw InvalidArgument(fmt::format("need at least 4 windows, got {}", windows));
  ev.window_counts.assign(static_cast<std::size_t>(windows), 0);
  for (double z : ev.zeros) {
    const auto j = static_cast<std::size_t>(std::clamp(std::floor(std::log2(z / ev.r0)), 0.0, windows - 1.0));
    ++ev.window_counts[j];
  }
  const auto quiet_from = static_cast<std::size_t>(windows) - static_cast<std::size_t>(std::ceil(0.75 * windows));
  const bool all = std::all_of(ev.window_counts.begin(), ev.window_counts.end(), [](std::size_t c) { return c > 0; });
  const bool quiet = std::all_of(ev.window_counts.begin() + static_cast<std::ptrdiff_t>(quiet_from),
                                 ev.window_counts.end(), [](std::size_t c) { return c == 0; });
  ev.classification = all ? OscillationClass::oscillatory
                          : quiet ? OscillationClass::non_oscillatory : OscillationClass::inconclusive;
}

double window_end(double r0, double R_max, int windows) {
  if (!(r0 > 0.0)) throw InvalidArgument("window scan needs r0 > 0");
  if (windows < 4) throw InvalidArgument(fmt::format("need at least 4 windows, got {}", windows));
  const double R = r0 * std::ldexp(1.0, windows);
  if (R > R_max * (1 + 1e-12)) {
    throw InvalidArgument(fmt::format("{} dyadic windows from r0 = {} reach {} > R_max = {}", windows, r0, R, R_max));
  }
  return R;
}

OscillationEvidence oscillation_classify(const Potential& q, double r0, double R_max, int windows, double theta0,
                                         const PrueferConfig& config) {
  OscillationEvidence ev = integrate_prufer(q, r0, window_end(r0, R_max, windows), theta0, config);
  classify_windows(ev, windows);
  return ev;
}

void write_evidence_csv(std::ostream& out, const OscillationEvidence& evidence) {
  out << "index,location,spacing\n";
  for (std::size_t i = 0; i < evidence.zeros.size(); ++i) {
    if (i == 0) {
      fmt::print(out, "{},{:.10f},\n", i + 1, evidence.zeros[i]);
    } else {
      fmt::print(out, "{},{:.10f},{:.10f}\n", i + 1, evidence.zeros[i], evidence.zeros[i] - evidence.zeros[i - 1]);
    }
  }
}

}  // namespace fraclab
