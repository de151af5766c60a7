#include "fraclab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "fraclab/comparison.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/expression.hpp"
#include "fraclab/radial.hpp"
#include "fraclab/special.hpp"

namespace fraclab {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- schema

const std::set<std::string> kCommonKeys = {"name", "command", "seed", "description"};

const std::map<std::string, std::set<std::string>> kCommandKeys = {
    {"spectrum", {"domain", "n", "A", "eigen", "modes"}},
    {"frac", {"domain", "n", "A", "eigen", "s", "u", "method", "tolerance"}},
    {"extend", {"domain", "n", "A", "eigen", "s", "u", "method", "ladder", "tolerance"}},
    {"picone", {"domain", "n", "A", "s", "U", "v", "cylinder", "tolerance", "v_floor"}},
    {"compare", {"domain", "n", "eigen", "s", "A1", "C1", "A2", "C2", "mode", "kernel_gate", "zero_tol", "ladder_ny"}},
    {"radial", {"s", "c", "dimension", "q", "r0", "rmax", "windows", "y0", "dy0", "sturm"}},
};

[[noreturn]] void invalid(const std::string& message, const std::string& code = "config_invalid") {
  throw InvalidArgument(message, code);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) invalid(fmt::format("{} must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) invalid(fmt::format("unknown key '{}' in {}", key, where), "unknown_key");
  }
}

/// A number, or a string holding a constant expression such as "pi/2".
double number(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const Expression e = Expression::parse(v.get<std::string>(), {});
    return e(0.0);
  }
  invalid(fmt::format("'{}' must be a number or a constant expression", key));
}

double number_or(const json& obj, const std::string& key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), key) : fallback;
}

int integer_or(const json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) invalid(fmt::format("'{}' must be an integer", key));
  return v.get<int>();
}

std::string string_or(const json& obj, const std::string& key, const std::string& fallback,
                      const std::set<std::string>& choices) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) invalid(fmt::format("'{}' must be a string", key));
  const std::string v = obj.at(key).get<std::string>();
  if (!choices.contains(v)) invalid(fmt::format("'{}' = \"{}\" is not one of the accepted values", key, v));
  return v;
}

void require_range(bool ok, const std::string& message, const std::string& code = "config_invalid") {
  if (!ok) invalid(message, code);
}

double order(const json& obj, double fallback) {
  const double s = number_or(obj, "s", fallback);
  validate_order(s);
  return s;
}

// ---------------------------------------------------------------- grids and coefficients

struct GridSpec {
  int dimension = 1;
  double ax = 0, bx = std::numbers::pi, ay = 0, by = std::numbers::pi;
  int nx = 64, ny = 64;

  std::shared_ptr<const Grid> build() const {
    return std::make_shared<const Grid>(dimension == 1 ? build_interval_grid(ax, bx, nx)
                                                       : build_rectangle_grid(ax, bx, ay, by, nx, ny));
  }
  std::vector<std::string> variables() const {
    return dimension == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x", "y"};
  }
  json describe() const {
    if (dimension == 1) return {{"type", "interval"}, {"a", ax}, {"b", bx}, {"n", nx}};
    return {{"type", "rectangle"}, {"ax", ax}, {"bx", bx}, {"ay", ay}, {"by", by}, {"nx", nx}, {"ny", ny}};
  }
};

constexpr std::size_t kMaxDofs = 3000;

GridSpec grid_spec(const json& cfg) {
  GridSpec g;
  const json domain = cfg.value("domain", json{{"type", "interval"}});
  if (!domain.is_object()) invalid("'domain' must be an object");
  const std::string type = string_or(domain, "type", "interval", {"interval", "rectangle"});
  if (type == "interval") {
    check_keys(domain, {"type", "a", "b"}, "domain");
    g.ax = number_or(domain, "a", 0.0);
    g.bx = number_or(domain, "b", std::numbers::pi);
    g.nx = integer_or(cfg, "n", 256);
    require_range(g.bx > g.ax, "domain needs a < b");
    require_range(g.nx >= 2, "n must be at least 2");
    require_range(static_cast<std::size_t>(g.nx - 1) <= kMaxDofs,
                  fmt::format("n = {} exceeds the dense solver limit of {} unknowns", g.nx, kMaxDofs), "grid_too_large");
  } else {
    check_keys(domain, {"type", "ax", "bx", "ay", "by"}, "domain");
    g.dimension = 2;
    g.ax = number_or(domain, "ax", 0.0);
    g.bx = number_or(domain, "bx", std::numbers::pi);
    g.ay = number_or(domain, "ay", 0.0);
    g.by = number_or(domain, "by", std::numbers::pi);
    const json n = cfg.value("n", json::array({24, 24}));
    if (n.is_number_integer()) {
      g.nx = g.ny = n.get<int>();
    } else if (n.is_array() && n.size() == 2 && n[0].is_number_integer() && n[1].is_number_integer()) {
      g.nx = n[0].get<int>();
      g.ny = n[1].get<int>();
    } else {
      invalid("'n' must be an integer or [nx, ny] for a rectangle");
    }
    require_range(g.bx > g.ax && g.by > g.ay, "rectangle needs ax < bx and ay < by");
    require_range(g.nx >= 2 && g.ny >= 2, "nx and ny must be at least 2");
    require_range(static_cast<std::size_t>(g.nx - 1) * static_cast<std::size_t>(g.ny - 1) <= kMaxDofs,
                  fmt::format("{}x{} cells exceed the dense solver limit of {} unknowns", g.nx, g.ny, kMaxDofs),
                  "grid_too_large");
  }
  return g;
}

ScalarCoefficient scalar_coefficient(const json& v, const std::string& key, const std::vector<std::string>& vars) {
  if (v.is_number()) return ScalarCoefficient::constant(v.get<double>());
  if (!v.is_string()) invalid(fmt::format("'{}' must be a number or an expression", key));
  const Expression e = Expression::parse(v.get<std::string>(), vars);
  return ScalarCoefficient([e](const Point& x) { return e(x[0], x[1]); });
}

MatrixCoefficient matrix_coefficient(const json& cfg, const std::string& key, const GridSpec& g) {
  const int d = g.dimension;
  if (!cfg.contains(key)) return MatrixCoefficient::identity(d);
  const json& v = cfg.at(key);
  if (v.is_number() || v.is_string()) {
    const ScalarCoefficient c = scalar_coefficient(v, key, g.variables());
    return MatrixCoefficient::scalar(d, [c](const Point& x) { return c(x); });
  }
  if (!v.is_array() || v.size() != static_cast<std::size_t>(d)) {
    invalid(fmt::format("'{}' must be a scalar expression or a {}x{} array", key, d, d));
  }
  std::vector<ScalarCoefficient> entries;
  for (const json& row : v) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(d)) {
      invalid(fmt::format("'{}' must be a {}x{} array", key, d, d));
    }
    for (const json& e : row) entries.push_back(scalar_coefficient(e, key, g.variables()));
  }
  return MatrixCoefficient(d, [entries, d](const Point& x) {
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = entries[static_cast<std::size_t>(i * d + j)](x);
    }
    return m;
  });
}

EigenOptions eigen_options(const json& cfg) {
  EigenOptions o;
  if (!cfg.contains("eigen")) return o;
  const json& e = cfg.at("eigen");
  check_keys(e, {"method", "max_sweeps", "tolerance"}, "eigen");
  o.method = string_or(e, "method", "jacobi", {"jacobi", "tridiagonal_qr"}) == "jacobi" ? EigenMethod::jacobi
                                                                                       : EigenMethod::tridiagonal_qr;
  o.max_sweeps = integer_or(e, "max_sweeps", o.max_sweeps);
  o.tolerance = number_or(e, "tolerance", o.tolerance);
  require_range(o.max_sweeps >= 1, "eigen.max_sweeps must be positive");
  require_range(o.tolerance > 0 && o.tolerance < 1, "eigen.tolerance must lie in (0, 1)");
  return o;
}

GridFunction sample(const Grid& grid, const Expression& e) {
  GridFunction u(static_cast<Eigen::Index>(grid.interior_count()));
  for (std::size_t i = 0; i < grid.interior_count(); ++i) {
    const Point& x = grid.nodes()[grid.interior_node(i)];
    u[static_cast<Eigen::Index>(i)] = e(x[0], x[1]);
  }
  return u;
}

Expression required_expression(const json& cfg, const std::string& key, const std::vector<std::string>& vars) {
  if (!cfg.contains(key)) invalid(fmt::format("missing required key '{}'", key));
  const json& v = cfg.at(key);
  if (v.is_number()) return Expression::parse(fmt::format("{:.17g}", v.get<double>()), vars);
  if (!v.is_string()) invalid(fmt::format("'{}' must be an expression string", key));
  return Expression::parse(v.get<std::string>(), vars);
}

json vector_head(const Eigen::VectorXd& v, Eigen::Index count) {
  json out = json::array();
  for (Eigen::Index i = 0; i < std::min(count, v.size()); ++i) out.push_back(v[i]);
  return out;
}

std::string csv_of(const std::function<void(std::ostream&)>& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

// ---------------------------------------------------------------- pipelines

struct Outcome {
  int exit_code = exit_ok;
  std::string status = "ok";
  json result;
  json tolerances = json::object();
  std::vector<std::pair<std::string, std::string>> files;
  std::string verdict;
  double tolerance = 0.0;
};

using Pipeline = std::function<Outcome()>;

std::shared_ptr<const SpectralDecomposition> decompose(const std::shared_ptr<const Grid>& grid,
                                                       const MatrixCoefficient& A, const EigenOptions& o) {
  auto op = std::make_shared<const AssembledOperator>(assemble(grid, A));
  return std::make_shared<const SpectralDecomposition>(eigendecompose(op, o));
}

Pipeline plan_spectrum(const json& cfg) {
  const GridSpec g = grid_spec(cfg);
  const MatrixCoefficient A = matrix_coefficient(cfg, "A", g);
  const EigenOptions eo = eigen_options(cfg);
  const int modes = integer_or(cfg, "modes", 0);
  require_range(modes >= 0, "modes must be nonnegative");
  return [=] {
    const auto dec = decompose(g.build(), A, eo);
    require_range(static_cast<std::size_t>(modes) <= dec->size(), "modes exceeds the number of unknowns");
    Outcome o;
    const Eigen::MatrixXd G = dec->modes.transpose() * dec->mass() * dec->modes;
    double worst_residual = 0.0;
    for (std::size_t k = 0; k < dec->size(); ++k) {
      const double scale = dec->eigenvalues[static_cast<Eigen::Index>(k)] * dec->mode(k).norm();
      worst_residual = std::max(worst_residual, eigen_residual(*dec, k) / scale);
    }
    o.result = {{"grid", g.describe()},
                {"unknowns", dec->size()},
                {"sweeps", dec->sweeps},
                {"eigenvalues", vector_head(dec->eigenvalues, 10)},
                {"orthonormality_error",
                 (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff()},
                {"max_relative_residual", worst_residual}};
    o.tolerances = {{"jacobi_tolerance", eo.tolerance}};
    o.tolerance = eo.tolerance;
    o.files.emplace_back("spectrum.csv", csv_of([&](std::ostream& out) { write_spectrum_csv(out, dec->eigenvalues); }));
    if (modes > 0) {
      o.files.emplace_back("modes.csv", csv_of([&](std::ostream& out) {
        write_modes_csv(out, *dec, static_cast<std::size_t>(modes));
      }));
    }
    return o;
  };
}

Pipeline plan_frac(const json& cfg) {
  const GridSpec g = grid_spec(cfg);
  const MatrixCoefficient A = matrix_coefficient(cfg, "A", g);
  const EigenOptions eo = eigen_options(cfg);
  const double s = order(cfg, 0.5);
  const Expression u_expr = required_expression(cfg, "u", g.variables());
  const std::string method = string_or(cfg, "method", "both", {"modal", "semigroup", "both"});
  const double tol = number_or(cfg, "tolerance", 1e-6);
  require_range(tol > 0, "tolerance must be positive");
  return [=] {
    const auto dec = decompose(g.build(), A, eo);
    const FracPower fp(dec, s);
    const GridFunction u = sample(dec->grid(), u_expr);
    Outcome o;
    o.tolerances = {{"agreement", tol}, {"semigroup_quadrature", QuadratureConfig{}.tolerance}};
    o.tolerance = tol;
    o.result = {{"grid", g.describe()}, {"s", s}, {"method", method}, {"u_norm", u.norm()}};
    GridFunction modal, semi;
    if (method != "semigroup") {
      modal = frac_apply(fp, u);
      o.result["modal_norm"] = modal.norm();
    }
    if (method != "modal") {
      const SemigroupResult r = frac_apply_semigroup(fp, u);
      semi = r.value;
      o.result["semigroup_norm"] = semi.norm();
      o.result["semigroup"] = {{"levels", r.report.levels},
                               {"nodes", r.report.nodes},
                               {"step", r.report.step},
                               {"error_estimate", r.report.error_estimate}};
    }
    if (method == "both") {
      const double rel = (semi - modal).norm() / std::max(modal.norm(), 1e-300);
      o.result["relative_difference"] = rel;
      if (!(rel <= tol)) {
        o.exit_code = exit_accuracy;
        o.status = "accuracy_failure";
      }
    }
    const Grid& grid = dec->grid();
    o.files.emplace_back("frac.csv", csv_of([&](std::ostream& out) {
      out << (g.dimension == 1 ? "dof,x" : "dof,x1,x2") << ",u";
      if (modal.size() > 0) out << ",Lsu_modal";
      if (semi.size() > 0) out << ",Lsu_semigroup";
      out << '\n';
      for (std::size_t i = 0; i < grid.interior_count(); ++i) {
        const Point& x = grid.nodes()[grid.interior_node(i)];
        const auto k = static_cast<Eigen::Index>(i);
        out << fmt::format("{},{:.17g}", i, x[0]);
        if (g.dimension == 2) out << fmt::format(",{:.17g}", x[1]);
        out << fmt::format(",{:.17g}", u[k]);
        if (modal.size() > 0) out << fmt::format(",{:.17g}", modal[k]);
        if (semi.size() > 0) out << fmt::format(",{:.17g}", semi[k]);
        out << '\n';
      }
    }));
    return o;
  };
}

LadderConfig ladder_from(const json& cfg, double lambda_1, double s) {
  LadderConfig lc = ladder_config_for(lambda_1, s);
  if (!cfg.contains("ladder")) return lc;
  const json& l = cfg.at("ladder");
  check_keys(l, {"y_factor", "ny", "gamma"}, "ladder");
  lc.ny = integer_or(l, "ny", 64);
  if (l.contains("ny") && !l.contains("gamma")) lc = ladder_config_for(lambda_1, s, lc.ny);
  lc.y_factor = number_or(l, "y_factor", lc.y_factor);
  lc.gamma = number_or(l, "gamma", lc.gamma);
  return lc;
}

void check_ladder_keys(const json& cfg) {
  if (!cfg.contains("ladder")) return;
  const json& l = cfg.at("ladder");
  check_keys(l, {"y_factor", "ny", "gamma"}, "ladder");
  require_range(integer_or(l, "ny", 64) >= 4, "ladder.ny must be at least 4", "ladder_out_of_range");
  require_range(number_or(l, "y_factor", 14.0) > 0, "ladder.y_factor must be positive", "ladder_out_of_range");
  require_range(number_or(l, "gamma", 3.0) >= 1, "ladder.gamma must be at least 1", "ladder_out_of_range");
}

Pipeline plan_extend(const json& cfg) {
  const GridSpec g = grid_spec(cfg);
  const MatrixCoefficient A = matrix_coefficient(cfg, "A", g);
  const EigenOptions eo = eigen_options(cfg);
  const double s = order(cfg, 0.5);
  const Expression u_expr = required_expression(cfg, "u", g.variables());
  const std::string method = string_or(cfg, "method", "both", {"spectral", "direct", "both"});
  const double tol = number_or(cfg, "tolerance", 0.02);
  require_range(tol > 0, "tolerance must be positive");
  check_ladder_keys(cfg);
  return [=] {
    const auto dec = decompose(g.build(), A, eo);
    const FracPower fp(dec, s);
    const GridFunction u = sample(dec->grid(), u_expr);
    const LadderConfig lc = ladder_from(cfg, dec->principal(), s);
    const YLadder ladder = YLadder::graded(dec->principal(), s, lc);
    Outcome o;
    o.tolerance = tol;
    o.tolerances = {{"agreement", tol}};
    o.result = {{"grid", g.describe()},
                {"s", s},
                {"method", method},
                {"ladder", {{"height", ladder.height()}, {"intervals", ladder.intervals()}, {"gamma", lc.gamma},
                            {"first_node", ladder[1]}}}};
    const GridFunction target = trace_constant(s) * frac_apply(fp, u);
    const auto rel = [](const GridFunction& a, const GridFunction& b) {
      return (a - b).norm() / std::max(b.norm(), 1e-300);
    };
    std::optional<ExtensionField> spectral, direct;
    if (method != "direct") {
      spectral = extend_spectral(fp, u, ladder);
      const TraceResult t = neumann_trace(*spectral);
      o.result["spectral"] = {{"energy", cylinder_energy(*spectral, *dec->op)},
                              {"trace_error", rel(t.value, target)},
                              {"trace_estimate", t.error_estimate},
                              {"trace_monotone", t.monotone}};
    }
    if (method != "spectral") {
      direct = extend_direct(fp, *dec->op, u, ladder);
      const TraceResult t = flux_trace(*direct, *dec->op);
      o.result["direct"] = {{"energy", cylinder_energy(*direct, *dec->op)},
                            {"trace_error", rel(t.value, target)},
                            {"trace_estimate", t.error_estimate}};
    }
    o.result["modal_energy"] = 2 * s * trace_constant(s) * u.dot(dec->mass() * frac_apply(fp, u));
    if (spectral && direct) {
      const double es = o.result["spectral"]["energy"].get<double>();
      const double ed = o.result["direct"]["energy"].get<double>();
      const double energy_gap = std::abs(es - ed) / std::max(std::abs(es), 1e-300);
      const double trace_gap = rel(flux_trace(*direct, *dec->op).value, neumann_trace(*spectral).value);
      o.result["energy_difference"] = energy_gap;
      o.result["trace_difference"] = trace_gap;
      if (!(energy_gap <= tol && trace_gap <= tol)) {
        o.exit_code = exit_accuracy;
        o.status = "accuracy_failure";
      }
    }
    o.files.emplace_back("field.csv", csv_of([&](std::ostream& out) { write_field_csv(out, spectral ? *spectral : *direct); }));
    return o;
  };
}

Pipeline plan_picone(const json& cfg) {
  const GridSpec g = grid_spec(cfg);
  const MatrixCoefficient A = matrix_coefficient(cfg, "A", g);
  const double s = order(cfg, 0.5);
  std::vector<std::string> vars = g.variables();
  vars.push_back("z");
  const Expression U = required_expression(cfg, "U", vars);
  const Expression v = required_expression(cfg, "v", vars);
  double height = 4.0;
  int intervals = g.nx;
  if (cfg.contains("cylinder")) {
    const json& c = cfg.at("cylinder");
    check_keys(c, {"height", "intervals"}, "cylinder");
    height = number_or(c, "height", height);
    intervals = integer_or(c, "intervals", intervals);
  }
  require_range(height > 0, "cylinder.height must be positive");
  require_range(intervals >= 4 && intervals <= 1024, "cylinder.intervals must lie in [4, 1024]");
  const double tol = number_or(cfg, "tolerance", 1e-3);
  const double floor = number_or(cfg, "v_floor", 1e-8);
  require_range(tol > 0 && floor > 0, "tolerance and v_floor must be positive");
  return [=] {
    const auto grid = g.build();
    const YLadder ladder = YLadder::uniform(height, intervals);
    const bool planar = g.dimension == 1;
    const auto field = [&](const Expression& e) {
      return TensorField::sample(grid, ladder, [&e, planar](const Point& x, double y) {
        return planar ? e(x[0], y) : e(x[0], x[1], y);
      });
    };
    const PiconeCheck c = picone_residual(field(U), field(v), CylinderCoefficient(A), s, floor);
    Outcome o;
    o.tolerance = tol;
    o.tolerances = {{"residual", tol}, {"v_floor", floor}};
    o.result = {{"grid", g.describe()},
                {"s", s},
                {"cylinder", {{"height", height}, {"intervals", intervals}}},
                {"residual", c.residual},
                {"residual_terms", c.residual_terms},
                {"max_absolute", c.max_absolute},
                {"min_abs_v", c.min_abs_v},
                {"nodes", c.nodes},
                {"worst", {{"x", planar ? json(c.worst_x[0]) : json::array({c.worst_x[0], c.worst_x[1]})},
                           {"z", c.worst_y}}}};
    if (!(c.residual <= tol)) {
      o.exit_code = exit_accuracy;
      o.status = "accuracy_failure";
    }
    return o;
  };
}

struct PotentialSpec {
  ScalarCoefficient base = ScalarCoefficient::constant(0.0);
  std::size_t calibrate = 0;  ///< one-based mode, 0 for none
};

PotentialSpec potential_spec(const json& cfg, const std::string& key, const GridSpec& g) {
  PotentialSpec p;
  if (!cfg.contains(key)) return p;
  const json& v = cfg.at(key);
  if (v.is_object()) {
    check_keys(v, {"expr", "calibrate"}, key);
    p.base = v.contains("expr") ? scalar_coefficient(v.at("expr"), key, g.variables()) : ScalarCoefficient::constant(0.0);
    const int k = integer_or(v, "calibrate", 0);
    require_range(k >= 0, fmt::format("{}.calibrate must be a positive mode index", key), "mode_out_of_range");
    p.calibrate = static_cast<std::size_t>(k);
  } else {
    p.base = scalar_coefficient(v, key, g.variables());
  }
  return p;
}

json nodal_json(const NodalReport& r, int dimension) {
  json locations = json::array();
  for (const Point& x : r.locations) locations.push_back(dimension == 1 ? json(x[0]) : json::array({x[0], x[1]}));
  return {{"interior_zero", r.interior_zero},
          {"sign_changes", r.sign_changes},
          {"near_zero_nodes", r.near_zero_nodes},
          {"locations", locations}};
}

Pipeline plan_compare(const json& cfg) {
  const GridSpec g = grid_spec(cfg);
  const EigenOptions eo = eigen_options(cfg);
  const double s = order(cfg, 0.5);
  const MatrixCoefficient A1 = matrix_coefficient(cfg, "A1", g);
  const MatrixCoefficient A2 = matrix_coefficient(cfg, "A2", g);
  const bool shared = cfg.value("A1", json("1")) == cfg.value("A2", json("1"));
  const PotentialSpec C1 = potential_spec(cfg, "C1", g);
  const PotentialSpec C2 = potential_spec(cfg, "C2", g);
  ComparisonOptions opts;
  opts.mode = string_or(cfg, "mode", "hypotheses", {"hypotheses", "variation"}) == "hypotheses"
                  ? ComparisonMode::hypotheses
                  : ComparisonMode::variation;
  opts.kernel_gate = number_or(cfg, "kernel_gate", opts.kernel_gate);
  opts.zero_tol = number_or(cfg, "zero_tol", opts.zero_tol);
  opts.ny = integer_or(cfg, "ladder_ny", opts.ny);
  require_range(opts.kernel_gate > 0 && opts.zero_tol > 0, "kernel_gate and zero_tol must be positive");
  require_range(opts.ny >= 4, "ladder_ny must be at least 4", "ladder_out_of_range");
  return [=] {
    const auto grid = g.build();
    const auto dec1 = decompose(grid, A1, eo);
    const auto dec2 = shared ? dec1 : decompose(grid, A2, eo);
    const auto resolve = [&](const PotentialSpec& p, const std::shared_ptr<const SpectralDecomposition>& dec,
                             double& shift) {
      if (p.calibrate == 0) return p.base;
      shift = calibration_shift(FracPower(dec, s), p.base, p.calibrate);
      return p.base.shifted(shift);
    };
    double shift1 = 0, shift2 = 0;
    const ScalarCoefficient c1 = resolve(C1, dec1, shift1);
    const ScalarCoefficient c2 = resolve(C2, dec2, shift2);
    const ComparisonReport r = run_comparison(ProblemPair{dec1, dec2, c1, c2, s}, opts);

    Outcome o;
    o.tolerances = {{"kernel_gate", opts.kernel_gate}, {"zero_tol", opts.zero_tol}, {"v_slack", opts.v_slack}};
    o.tolerance = opts.kernel_gate;
    json second = json::array();
    for (const auto& k : r.second_solutions) second.push_back({{"mode", k.mode}, {"mu", k.mu}});
    json first = json::array();
    for (const auto& f : r.first_solutions) {
      first.push_back({{"mode", f.solution.mode},
                       {"mu", f.solution.mu},
                       {"nodal", nodal_json(f.nodal, g.dimension)},
                       {"equality_case", f.equality_case}});
    }
    const auto& h = r.hypotheses;
    o.result = {{"grid", g.describe()},
                {"s", s},
                {"mode", opts.mode == ComparisonMode::hypotheses ? "hypotheses" : "variation"},
                {"calibration", {{"C1_shift", shift1}, {"C2_shift", shift2}}},
                {"hypotheses", {{"b_ordered", h.b_ordered}, {"c_ordered", h.c_ordered}, {"c1_positive", h.c1_positive},
                                {"min_b_eigen", h.min_b_eigen}, {"min_c_gap", h.min_c_gap}}},
                {"second_solutions", second},
                {"V", r.v_value},
                {"V_scale", r.v_scale},
                {"M2_residual", r.m2_residual},
                {"V_nonnegative", r.v_nonnegative},
                {"cross_check", r.cross_check},
                {"first_solutions", first},
                {"verdict", to_string(r.verdict)},
                {"equality_case", r.equality_case}};
    o.verdict = to_string(r.verdict);
    if (r.verdict == Verdict::violation) {
      o.exit_code = exit_violation;
      o.status = "violation";
    } else if (!r.cross_check) {
      o.exit_code = exit_accuracy;
      o.status = "accuracy_failure";
    }
    o.files.emplace_back("zeros.csv", csv_of([&](std::ostream& out) {
      out << (g.dimension == 1 ? "solution,mode,zero,x\n" : "solution,mode,zero,x1,x2\n");
      for (std::size_t i = 0; i < r.first_solutions.size(); ++i) {
        const auto& f = r.first_solutions[i];
        for (std::size_t z = 0; z < f.nodal.locations.size(); ++z) {
          const Point& x = f.nodal.locations[z];
          out << fmt::format("{},{},{},{:.12g}", i + 1, f.solution.mode, z + 1, x[0]);
          if (g.dimension == 2) out << fmt::format(",{:.12g}", x[1]);
          out << '\n';
        }
      }
    }));
    return o;
  };
}

Pipeline plan_radial(const json& cfg, std::uint64_t seed) {
  const bool custom = cfg.contains("q");
  std::optional<Expression> q_expr;
  RadialODE ode;
  if (custom) {
    for (const char* k : {"s", "c", "dimension"}) {
      require_range(!cfg.contains(k), fmt::format("'{}' cannot be combined with an explicit 'q'", k));
    }
    q_expr = required_expression(cfg, "q", {"r"});
  } else {
    const double s = number_or(cfg, "s", 0.5);
    ode = radial_reduce(integer_or(cfg, "dimension", 1), s, number_or(cfg, "c", 4.0));
  }
  const double r0 = number_or(cfg, "r0", 1.0);
  const double rmax = number_or(cfg, "rmax", 256.0);
  require_range(r0 > 0 && rmax > r0, "radial scan needs 0 < r0 < rmax");
  const int windows = integer_or(cfg, "windows", static_cast<int>(std::floor(std::log2(rmax / r0) + 1e-12)));
  const double R = window_end(r0, rmax, windows);
  const double y0 = number_or(cfg, "y0", 0.0);
  const double dy0 = number_or(cfg, "dy0", 1.0);
  require_range(y0 != 0.0 || dy0 != 0.0, "initial data y0 = dy0 = 0 is the zero solution");

  struct Sturm {
    Expression q2;
    double a, b;
    int trials;
  };
  std::optional<Sturm> sturm;
  if (cfg.contains("sturm")) {
    const json& st = cfg.at("sturm");
    check_keys(st, {"q2", "a", "b", "trials"}, "sturm");
    sturm = Sturm{required_expression(st, "q2", {"r"}), number_or(st, "a", r0), number_or(st, "b", std::min(rmax, r0 + 20)),
                  integer_or(st, "trials", 5)};
    require_range(sturm->b > sturm->a && sturm->trials >= 1, "sturm needs a < b and trials >= 1");
  }

  return [=] {
    Outcome o;
    const PrueferConfig pc;
    o.tolerances = {{"rtol", pc.rtol}, {"atol", pc.atol}, {"root_tol", pc.root_tol}};
    o.tolerance = pc.root_tol;
    OscillationEvidence ev;
    json equation;
    if (custom) {
      const Expression e = *q_expr;
      const Potential q = [e](double r) { return e(r); };
      ev = integrate_prufer(q, r0, R, initial_phase(y0, dy0));
      equation = {{"form", "y'' + q(r) y = 0"}, {"q", e.text()}};
    } else if (ode.n == 1) {
      const TransformedODE t = liouville_transform(ode);
      // y = u r^{1-s}: y(r0) = u0 r0^{1-s}, y'(r0) = du0 r0^{1-s} + (1-s) u0 r0^{-s}
      const double m = 1 - ode.s;
      const double ty0 = y0 * std::pow(r0, m);
      const double tdy0 = dy0 * std::pow(r0, m) + m * y0 * std::pow(r0, m - 1);
      ev = integrate_prufer(t.q, r0, R, initial_phase(ty0, tdy0));
      equation = {{"form", "y'' + q(r) y = 0, u = y r^(s-1)"},
                  {"d", ode.d}, {"c", ode.c}, {"s", ode.s}, {"dimension", ode.n},
                  {"liouville_residual", liouville_residual(ode, r0, std::min(R, 10 * r0))}};
    } else {
      ev = radial_zeros(ode, r0, R, radial_initial_phase(ode, y0, dy0));
      equation = {{"form", "u'' + d u'/r + c u = 0"}, {"d", ode.d}, {"c", ode.c}, {"s", ode.s}, {"dimension", ode.n}};
    }
    classify_windows(ev, windows);
    json zeros = json::array();
    for (double z : ev.zeros) zeros.push_back(z);
    o.result = {{"equation", equation},
                {"r0", r0},
                {"R", R},
                {"initial", {{"y0", y0}, {"dy0", dy0}}},
                {"zero_count", ev.count()},
                {"zeros", zeros},
                {"spacing", {{"min", ev.spacing.min}, {"max", ev.spacing.max}, {"mean", ev.spacing.mean},
                             {"tail", ev.spacing.tail}}},
                {"window_counts", ev.window_counts},
                {"classification", to_string(ev.classification)}};
    o.verdict = to_string(ev.classification);
    if (sturm) {
      const Expression q2e = sturm->q2;
      const Potential q2 = [q2e](double r) { return q2e(r); };
      Potential q1;
      if (custom) {
        const Expression e = *q_expr;
        q1 = [e](double r) { return e(r); };
      } else {
        q1 = liouville_transform(ode).q;
      }
      const SturmResult sr = sturm_compare(q1, q2, sturm->a, sturm->b, seed, sturm->trials);
      json witnesses = json::array();
      for (const auto& w : sr.witnesses) witnesses.push_back({{"theta0", w.theta0}, {"zero", w.zero}});
      o.result["sturm"] = {{"verdict", to_string(sr.verdict)}, {"reason", sr.reason}, {"t1", sr.t1}, {"t2", sr.t2},
                           {"q2", q2e.text()}, {"witnesses", witnesses}};
    }
    o.files.emplace_back("zeros.csv", csv_of([&](std::ostream& out) { write_evidence_csv(out, ev); }));
    return o;
  };
}

Pipeline plan(const ExperimentConfig& c) {
  const json& j = c.raw;
  if (c.command == "spectrum") return plan_spectrum(j);
  if (c.command == "frac") return plan_frac(j);
  if (c.command == "extend") return plan_extend(j);
  if (c.command == "picone") return plan_picone(j);
  if (c.command == "compare") return plan_compare(j);
  return plan_radial(j, c.seed);
}

int exit_code_for(const Error& e) {
  static const std::set<std::string> numerical = {"accuracy_failure", "convergence_failure", "integration_failure",
                                                  "singular_mass", "linear_solve_failure", "division_hazard"};
  return numerical.contains(e.code()) ? exit_accuracy : exit_validation;
}

json provenance(const json& raw, const json& tolerances) {
  return {{"config_hash", fmt::format("fnv1a64:{:016x}", config_hash(raw))},
          {"version", std::string(kVersion)},
          {"tolerances", tolerances}};
}

RunResult error_result(const std::string& name, const std::string& command, const json& raw, int exit_code,
                       const std::string& code, const std::string& message) {
  RunResult r;
  r.name = name;
  r.command = command;
  r.exit_code = exit_code;
  r.report = {{"name", name},
              {"command", command},
              {"status", exit_code == exit_accuracy ? "accuracy_failure" : "validation_error"},
              {"exit_code", exit_code},
              {"error", {{"code", code}, {"message", message}}},
              {"provenance", provenance(raw, json::object())}};
  return r;
}

}  // namespace

std::uint64_t config_hash(const json& j) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& fallback_name) {
  if (!j.is_object()) invalid("a scenario config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  if (!j.contains("command") || !j.at("command").is_string()) invalid("missing required key 'command'");
  c.command = j.at("command").get<std::string>();
  const auto keys = kCommandKeys.find(c.command);
  if (keys == kCommandKeys.end()) invalid(fmt::format("unknown command '{}'", c.command), "unknown_command");
  std::set<std::string> allowed = kCommonKeys;
  allowed.insert(keys->second.begin(), keys->second.end());
  check_keys(j, allowed, "config");
  c.name = fallback_name;
  if (j.contains("name")) {
    if (!j.at("name").is_string() || j.at("name").get<std::string>().empty()) invalid("'name' must be a nonempty string");
    c.name = j.at("name").get<std::string>();
  }
  if (c.name.find_first_of("/\\") != std::string::npos) invalid("'name' must not contain path separators");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) invalid("'seed' must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot read {}", path.string()), "config_unreadable");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.filename().string(), e.what()), "config_parse");
  }
  return from_json(j, path.stem().string());
}

RunResult run(const ExperimentConfig& config) {
  RunResult r;
  try {
    // every key is read and range-checked here, before any assembly or solve
    const Pipeline pipeline = plan(config);
    Outcome o = pipeline();
    r.name = config.name;
    r.command = config.command;
    r.exit_code = o.exit_code;
    r.verdict = o.verdict;
    r.tolerance = o.tolerance;
    r.files = std::move(o.files);
    r.report = {{"name", config.name},
                {"command", config.command},
                {"status", o.status},
                {"exit_code", o.exit_code},
                {"seed", config.seed},
                {"result", std::move(o.result)},
                {"provenance", provenance(config.raw, o.tolerances)}};
  } catch (const Error& e) {
    r = error_result(config.name, config.command, config.raw, exit_code_for(e), e.code(), e.what());
  } catch (const json::exception& e) {
    r = error_result(config.name, config.command, config.raw, exit_validation, "config_invalid", e.what());
  }
  return r;
}

RunResult run_file(const std::filesystem::path& path) {
  ExperimentConfig config;
  try {
    config = ExperimentConfig::load(path);
  } catch (const Error& e) {
    return error_result(path.stem().string(), "", json::object(), exit_validation, e.code(), e.what());
  }
  return run(config);
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / (result.name + ".json")) << result.report.dump(2) << '\n';
  for (const auto& [suffix, content] : result.files) std::ofstream(dir / (result.name + "." + suffix)) << content;
}

CorpusResult run_corpus(const std::filesystem::path& dir, int threads) {
  CorpusResult corpus;
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    corpus.exit_code = exit_validation;
    corpus.summary_csv = "name,command,exit_code,status,verdict,tolerance,config_hash\n";
    return corpus;
  }
  std::sort(files.begin(), files.end());

  corpus.runs.resize(files.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) corpus.runs[i] = run_file(files[i]);
  };
  const int n = std::clamp(threads, 1, static_cast<int>(files.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::stable_sort(corpus.runs.begin(), corpus.runs.end(),
                   [](const RunResult& a, const RunResult& b) { return a.name < b.name; });
  std::ostringstream csv;
  csv << "name,command,exit_code,status,verdict,tolerance,config_hash\n";
  for (const RunResult& r : corpus.runs) {
    corpus.exit_code = std::max(corpus.exit_code, r.exit_code);
    csv << fmt::format("{},{},{},{},{},{:g},{}\n", r.name, r.command, r.exit_code,
                       r.report.value("status", std::string()), r.verdict, r.tolerance,
                       r.report["provenance"].value("config_hash", std::string()));
  }
  corpus.summary_csv = csv.str();
  return corpus;
}

}  // namespace fraclab
