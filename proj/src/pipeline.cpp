#include "twistguide/pipeline.hpp"

#include "twistguide/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <numbers>
#include <ostream>
#include <sstream>

namespace twg {

namespace {

constexpr double pi = std::numbers::pi;

[[noreturn]] void config_fail(const std::string& where, const std::string& what)
{
  throw ConfigError(where + ": " + what);
}

void require_range(bool ok, const std::string& where, const std::string& what)
{
  if (!ok) {
    config_fail(where, what);
  }
}

EdgeSide parse_side(const std::string& s, const std::string& where)
{
  if (s == "plus") {
    return EdgeSide::plus;
  }
  if (s == "minus") {
    return EdgeSide::minus;
  }
  config_fail(where, "side must be \"plus\" or \"minus\"");
}

GridConfig parse_grid(const json& j, const std::string& where)
{
  GridConfig g;
  json shape = j;
  for (const char* k : {"h", "grid", "n_r", "n_phi"}) {
    shape.erase(k);
  }
  g.shape = parse_shape(shape, where);
  g.h = get_number(j, "h", g.h, where);
  require_range(g.h > 0.0 && std::isfinite(g.h), where + ".h", "grid spacing must be positive");
  const std::string layout = get_string(j, "grid", "cartesian", where);
  if (layout == "polar") {
    if (!g.shape.is_centered_disk()) {
      config_fail(where + ".grid", "polar grids need a disk centred on the axis");
    }
    g.layout = GridLayout::polar;
    const double R = std::get<Ellipse>(g.shape.kind).a;
    g.n_r = get_int(j, "n_r", std::max(4, static_cast<int>(std::lround(R / g.h))), where);
    g.n_phi = get_int(j, "n_phi", std::max(8, static_cast<int>(std::lround(2.0 * pi * R / g.h))), where);
    require_range(g.n_r >= 2 && g.n_phi >= 4, where, "polar grid needs n_r >= 2 and n_phi >= 4");
  } else if (layout != "cartesian") {
    config_fail(where + ".grid", "grid must be \"cartesian\" or \"polar\"");
  }
  return g;
}

std::string iso_now()
{
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string edge_tag(int gap, EdgeSide side)
{
  return "g" + std::to_string(gap) + "_" + to_string(side);
}

void note(std::ostream* log, const std::string& msg)
{
  if (log != nullptr) {
    *log << msg << std::endl;
  }
}

struct LineFit
{
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> x;
  std::vector<double> residuals;
};

LineFit line_fit(const std::vector<double>& x, const std::vector<double>& y)
{
  LineFit f;
  f.x = x;
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) {
    return f;
  }
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    f.residuals.push_back(y[i] - (f.intercept + f.slope * x[i]));
  }
  return f;
}

// signed strength of a channel: positive means attractive
double channel_strength(const Channel& ch, const DecayProfile& eps)
{
  const double a = ch.mean_coupling();
  const double scale = std::abs(ch.coupling) * ch.periodic_bound();
  if (std::abs(a) <= 1e-10 * std::max(scale, 1e-300)) {
    return 0.0;
  }
  return a * (eps.amplitude() >= 0.0 ? 1.0 : -1.0);
}

bool is_log_family(const DecayProfile& eps)
{
  return eps.family() == DecayFamily::power_with_limit ||
         ((eps.family() == DecayFamily::power || eps.family() == DecayFamily::signed_power) && eps.alpha() == 2.0);
}

json fit_for_regime(const EffectiveModel& model, const CountCurve& curve, const std::string& regime)
{
  json fit;
  fit["regime"] = regime;
  fit["constant_over_final_decade"] = curve.constant_over_final_decade();
  fit["final_count"] = curve.counts.back();
  try {
    if (regime == "power law") {
      const PowerLawFit p = fit_power_law(curve, model);
      fit["kind"] = "power_law";
      fit["exponent"] = p.exponent;
      fit["expected"] = p.expected;
      fit["relative_error"] = std::abs(p.exponent - p.expected) / std::abs(p.expected);
      fit["ratio_at_min"] = p.ratio_at_min;
      fit["semiclassical_at_min"] = p.semiclassical_at_min;
      fit["points_used"] = p.points_used;
      fit["status"] = "ok";
    } else if (regime == "log law") {
      const DecayProfile& eps = model.eps;
      const double L = eps.limit_L();
      double predicted = 0.0;
      for (const auto& ch : model.channels) {
        predicted += std::sqrt(std::max(0.0, ch.mean_coupling() * L / ch.mu - 0.25)) / pi;
      }
      const Channel& ch0 = model.channels.front();
      const LogLawFit f = fit_log_law(curve, ch0.mu, ch0.mean_coupling(), L);
      fit["kind"] = "log_law";
      fit["slope"] = f.slope;
      fit["predicted"] = predicted;
      fit["relative_error"] = predicted > 0.0 ? std::abs(f.slope - predicted) / predicted : 0.0;
      fit["points_used"] = f.points_used;
      fit["status"] = "ok";
    } else {
      fit["kind"] = "bounded";
      fit["status"] = curve.constant_over_final_decade() ? "ok" : "growing";
    }
  } catch (const InsufficientGrowth& e) {
    fit["status"] = "insufficient resolution";
    fit["message"] = e.what();
  }
  return fit;
}

json chart_json(const BandChart& chart, const GapList& gaps)
{
  json bands = json::array();
  for (int l = 0; l < chart.band_count(); ++l) {
    std::vector<double> col(chart.bands.col(l).data(), chart.bands.col(l).data() + chart.sample_count());
    bands.push_back(col);
  }
  json gl = json::array();
  for (const Gap& g : gaps.gaps) {
    gl.push_back({{"index", g.index},
                  {"lower", g.lower},
                  {"upper", g.upper},
                  {"lower_band", g.lower_band},
                  {"upper_band", g.upper_band}});
  }
  return {{"k", chart.k_samples}, {"bands", bands}, {"gaps", gl}, {"suppressed", gaps.suppressed},
          {"window_top", gaps.window_top}};
}

json edge_json(const EdgeReport& e)
{
  json ex = json::array();
  for (const auto& x : e.extremizers) {
    ex.push_back({{"k", x.k},
                  {"value", x.value},
                  {"mu", x.mu},
                  {"mu_error", x.mu_error},
                  {"slope", x.slope},
                  {"neighbour_gap", x.neighbour_gap}});
  }
  return {{"gap", e.gap_index},
          {"side", to_string(e.side)},
          {"edge_value", e.edge_value},
          {"band", e.band_index},
          {"regular", e.regular()},
          {"unique_band", e.unique_band},
          {"finite_extremizers", e.finite_extremizers},
          {"nondegenerate", e.nondegenerate},
          {"stationary", e.stationary},
          {"extremizers", ex},
          {"diagnostics", e.diagnostics}};
}

json coupling_json(const EdgeCoupling& c)
{
  json f = json::array();
  for (int l = -c.eta.degree; l <= c.eta.degree; ++l) {
    const cplx v = c.eta.coefficient(l);
    f.push_back({l, v.real(), v.imag()});
  }
  double spread = 0.0;
  for (double v : c.eta.samples) {
    spread = std::max(spread, std::abs(v - c.eta.mean));
  }
  return {{"gap", c.gap},
          {"side", to_string(c.side)},
          {"extremizer", c.extremizer},
          {"k_star", c.psi.k_star},
          {"mu", c.mu},
          {"eigenvalue", c.psi.eigenvalue},
          {"residual", c.psi.residual},
          {"mean", c.eta.mean},
          {"effective_coefficient", 2.0 * pi * c.eta.mean},
          {"max_abs", c.eta.max_abs()},
          {"spread", spread},
          {"l1", c.l1.l1},
          {"tail_fraction", c.l1.tail_fraction},
          {"fourier", f}};
}

json model_json(const EffectiveModel& m)
{
  json ch = json::array();
  for (const auto& c : m.channels) {
    json j = {{"mu", c.mu}, {"coupling", c.coupling}, {"mean_coupling", c.mean_coupling()}};
    j["periodic"] = c.eta.has_value();
    ch.push_back(j);
  }
  return {{"channels", ch}, {"perturbation", to_json(m.eps)}, {"potential_scale", m.potential_scale()}};
}

json curve_json(const CountCurve& c)
{
  std::vector<int> conv;
  for (bool b : c.converged) {
    conv.push_back(b ? 1 : 0);
  }
  return {{"lambda", c.lambdas},          {"count", c.counts},
          {"R", c.radii},                 {"min_step", c.min_steps},
          {"converged", conv},            {"monotone", c.monotone()},
          {"all_converged", c.all_converged()}};
}

} // namespace

const std::vector<std::string>& stage_names()
{
  static const std::vector<std::string> names{"bands", "edges", "coupling", "count", "bs-check", "tube-check"};
  return names;
}

TransverseOperators build_operators(const GridConfig& grid)
{
  if (grid.layout == GridLayout::polar) {
    return assemble_transverse(build_polar_grid(grid.shape, grid.n_r, grid.n_phi));
  }
  return assemble_transverse(build_grid(grid.shape, grid.h));
}

RunConfig parse_config(const json& j)
{
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  check_keys(j,
             {"schema", "name", "description", "output_dir", "plots", "stages", "cross_section", "twist", "numerics",
              "edges", "perturbation", "effective", "count", "bs_check", "tube_check", "verify"},
             "config");
  const std::string schema = get_string(j, "schema", "", "config");
  if (schema != config_schema) {
    throw ConfigError("config.schema: expected \"" + std::string(config_schema) + "\", got \"" + schema + "\"");
  }
  RunConfig c;
  c.raw = j;
  c.name = get_string(j, "name", c.name, "config");
  c.output_dir = get_string(j, "output_dir", c.output_dir.string(), "config");
  c.plots = get_bool(j, "plots", c.plots, "config");

  if (j.contains("stages")) {
    if (!j.at("stages").is_array()) {
      config_fail("config.stages", "expected an array of stage names");
    }
    for (const auto& s : j.at("stages")) {
      if (!s.is_string() || std::find(stage_names().begin(), stage_names().end(), s.get<std::string>()) ==
                              stage_names().end()) {
        config_fail("config.stages", "unknown stage " + s.dump());
      }
      c.stages.push_back(s.get<std::string>());
    }
  }

  if (j.contains("cross_section")) {
    c.grid = parse_grid(j.at("cross_section"), "config.cross_section");
  }
  if (j.contains("twist")) {
    c.beta = parse_twist(j.at("twist"), "config.twist");
  }

  const json num = j.value("numerics", json::object());
  check_keys(num,
             {"bands", "n_k", "ell_max", "tol", "dense_threshold", "block_size", "max_basis", "gap_tol_rel", "mu_step",
              "band_tol_rel", "slope_tol", "refine_tol", "mu_floor"},
             "config.numerics");
  c.band_count = get_int(num, "bands", c.band_count, "config.numerics");
  c.n_k = get_int(num, "n_k", c.n_k, "config.numerics");
  c.ell_max = get_int(num, "ell_max", std::max(c.ell_max, c.beta.order()), "config.numerics");
  c.tol = get_number(num, "tol", c.tol, "config.numerics");
  c.solver.tol = c.tol;
  c.solver.dense_threshold = get_int(num, "dense_threshold", c.solver.dense_threshold, "config.numerics");
  c.solver.block_size = get_int(num, "block_size", c.solver.block_size, "config.numerics");
  c.solver.max_basis = get_int(num, "max_basis", c.solver.max_basis, "config.numerics");
  c.gap_options.gap_tol_rel = get_number(num, "gap_tol_rel", c.gap_options.gap_tol_rel, "config.numerics");
  require_range(c.band_count >= 1 && c.band_count <= 64, "config.numerics.bands", "must be in 1..64");
  require_range(c.n_k >= 16 && c.n_k % 2 == 0 && c.n_k <= 4096, "config.numerics.n_k", "must be even, 16..4096");
  require_range(c.ell_max >= c.beta.order() && c.ell_max <= 64, "config.numerics.ell_max",
                "must be at least the twist order and at most 64");
  require_range(c.tol > 0.0 && c.tol <= 1e-3, "config.numerics.tol", "must be in (0, 1e-3]");
  require_range(c.solver.dense_threshold >= 1, "config.numerics.dense_threshold", "must be positive");
  c.edge_options.ell_max = c.ell_max;
  c.edge_options.tol = c.tol;
  c.edge_options.solver = c.solver;
  c.edge_options.mu_step = get_number(num, "mu_step", c.edge_options.mu_step, "config.numerics");
  c.edge_options.band_tol_rel = get_number(num, "band_tol_rel", c.edge_options.band_tol_rel, "config.numerics");
  c.edge_options.slope_tol = get_number(num, "slope_tol", c.edge_options.slope_tol, "config.numerics");
  c.edge_options.refine_tol = get_number(num, "refine_tol", c.edge_options.refine_tol, "config.numerics");
  c.edge_options.mu_floor = get_number(num, "mu_floor", c.edge_options.mu_floor, "config.numerics");
  require_range(c.edge_options.mu_step > 0.0 && c.edge_options.mu_step < 0.25, "config.numerics.mu_step",
                "must be in (0, 0.25)");

  if (j.contains("edges")) {
    const json& e = j.at("edges");
    check_keys(e, {"gaps"}, "config.edges");
    for (double g : get_numbers(e, "gaps", "config.edges")) {
      require_range(g >= 0 && g == std::floor(g), "config.edges.gaps", "gap indices are nonnegative integers");
      c.edge_gaps.push_back(static_cast<int>(g));
    }
  }

  if (j.contains("perturbation")) {
    c.eps = parse_decay(j.at("perturbation"), "config.perturbation");
  }

  if (j.contains("effective")) {
    const json& e = j.at("effective");
    check_keys(e, {"channels"}, "config.effective");
    if (!e.contains("channels") || !e.at("channels").is_array() || e.at("channels").empty()) {
      config_fail("config.effective.channels", "expected a nonempty array");
    }
    int i = 0;
    for (const auto& ch : e.at("channels")) {
      const std::string where = "config.effective.channels[" + std::to_string(i++) + "]";
      check_keys(ch, {"mu", "coefficient", "eta"}, where);
      SyntheticChannel s;
      s.mu = get_number(ch, "mu", where);
      require_range(s.mu > 0.0, where + ".mu", "must be positive");
      s.coefficient = get_number(ch, "coefficient", 1.0, where);
      if (ch.contains("eta")) {
        s.eta = parse_periodic(ch.at("eta"), where + ".eta");
      }
      c.channels.push_back(std::move(s));
    }
  }

  const json cnt = j.value("count", json::object());
  check_keys(cnt,
             {"edge", "mode", "lambda_min", "lambda_max", "points", "relative", "resolution", "period_points",
              "decay_lengths", "rel_tol", "max_refinements", "max_points"},
             "config.count");
  if (cnt.contains("edge")) {
    const json& e = cnt.at("edge");
    check_keys(e, {"gap", "side"}, "config.count.edge");
    EdgeSelector s;
    s.gap = get_int(e, "gap", 0, "config.count.edge");
    s.side = parse_side(get_string(e, "side", "plus", "config.count.edge"), "config.count.edge.side");
    c.count_edge = s;
  }
  c.count_mode = get_string(cnt, "mode", c.count_mode, "config.count");
  require_range(c.count_mode == "mean" || c.count_mode == "full", "config.count.mode", "must be \"mean\" or \"full\"");
  c.lambda_min = get_number(cnt, "lambda_min", c.lambda_min, "config.count");
  c.lambda_max = get_number(cnt, "lambda_max", c.lambda_max, "config.count");
  c.points = get_int(cnt, "points", c.points, "config.count");
  c.relative_lambda = get_bool(cnt, "relative", c.relative_lambda, "config.count");
  require_range(c.lambda_min > 0.0 && c.lambda_min < c.lambda_max, "config.count",
                "need 0 < lambda_min < lambda_max");
  require_range(c.points >= 2 && c.points <= 400, "config.count.points", "must be in 2..400");
  auto& co = c.count_options;
  co.resolution = get_number(cnt, "resolution", co.resolution, "config.count");
  co.period_points = get_number(cnt, "period_points", co.period_points, "config.count");
  co.decay_lengths = get_number(cnt, "decay_lengths", co.decay_lengths, "config.count");
  co.rel_tol = get_number(cnt, "rel_tol", co.rel_tol, "config.count");
  co.max_refinements = get_int(cnt, "max_refinements", co.max_refinements, "config.count");
  co.max_points = static_cast<long>(get_number(cnt, "max_points", static_cast<double>(co.max_points), "config.count"));
  require_range(co.resolution >= 4.0 && co.period_points >= 4.0 && co.decay_lengths > 0.0 && co.rel_tol >= 0.0 &&
                  co.rel_tol < 0.5 && co.max_refinements >= 1 && co.max_points >= 1000,
                "config.count", "numerical knobs out of range");

  if (j.contains("bs_check")) {
    const json& b = j.at("bs_check");
    check_keys(b, {"lambdas", "cutoff_factor", "step_factor", "max_dimension", "max_refinements"}, "config.bs_check");
    c.bs_lambdas = get_numbers(b, "lambdas", "config.bs_check");
    for (double l : c.bs_lambdas) {
      require_range(l > 0.0, "config.bs_check.lambdas", "values must be positive");
    }
    auto& bo = c.bs_options;
    bo.cutoff_factor = get_number(b, "cutoff_factor", bo.cutoff_factor, "config.bs_check");
    bo.step_factor = get_number(b, "step_factor", bo.step_factor, "config.bs_check");
    bo.max_dimension = get_int(b, "max_dimension", bo.max_dimension, "config.bs_check");
    bo.max_refinements = get_int(b, "max_refinements", bo.max_refinements, "config.bs_check");
    require_range(bo.cutoff_factor >= 10.0 && bo.step_factor >= 5.0, "config.bs_check",
                  "cutoff_factor >= 10 and step_factor >= 5 are required by the grid preconditions");
    require_range(bo.max_dimension >= 10 && bo.max_dimension <= 4000, "config.bs_check.max_dimension",
                  "must be in 10..4000");
  }

  if (j.contains("tube_check")) {
    const json& t = j.at("tube_check");
    check_keys(t,
               {"h", "perturbation", "scales", "periods", "steps_per_period", "gap", "side", "depth", "margin",
                "allowance", "bands", "n_k"},
               "config.tube_check");
    if (t.contains("h")) {
      if (!c.grid) {
        config_fail("config.tube_check.h", "needs a cross_section");
      }
      GridConfig g = *c.grid;
      g.layout = GridLayout::cartesian;
      g.h = get_number(t, "h", "config.tube_check");
      require_range(g.h > 0.0, "config.tube_check.h", "must be positive");
      c.tube_grid = g;
    }
    if (t.contains("perturbation")) {
      c.tube_eps = parse_decay(t.at("perturbation"), "config.tube_check.perturbation");
    }
    auto& to = c.tube;
    const std::vector<double> scales = get_numbers(t, "scales", "config.tube_check");
    if (!scales.empty()) {
      to.scales = scales;
    }
    const int periods = get_int(t, "periods", 4, "config.tube_check");
    const int steps = get_int(t, "steps_per_period", 16, "config.tube_check");
    require_range(periods >= 1 && periods <= 256, "config.tube_check.periods", "must be in 1..256");
    require_range(steps >= 8 && steps <= 1024, "config.tube_check.steps_per_period", "must be in 8..1024");
    to.X = 2.0 * pi * periods;
    to.x3_step = 2.0 * pi / steps;
    to.gap_index = get_int(t, "gap", 0, "config.tube_check");
    to.side = parse_side(get_string(t, "side", "plus", "config.tube_check"), "config.tube_check.side");
    to.depth = get_number(t, "depth", to.depth, "config.tube_check");
    to.margin = get_number(t, "margin", to.margin, "config.tube_check");
    to.allowance = get_int(t, "allowance", static_cast<int>(to.allowance), "config.tube_check");
    to.band_count = get_int(t, "bands", to.band_count, "config.tube_check");
    to.n_k = get_int(t, "n_k", to.n_k, "config.tube_check");
    to.solver = c.solver;
    require_range(to.margin > 0.0 && to.depth > to.margin, "config.tube_check", "need depth > margin > 0");
    require_range(to.allowance >= 0, "config.tube_check.allowance", "must be nonnegative");
  }

  if (j.contains("verify")) {
    c.verify = j.at("verify");
    if (!c.verify.is_object()) {
      config_fail("config.verify", "expected an object");
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
  return parse_config(read_json_file(path));
}

std::vector<std::string> stages_for(const RunConfig& config, const std::string& target)
{
  const bool synthetic = !config.channels.empty();
  if (target == "bands") {
    return {"bands"};
  }
  if (target == "edges") {
    return {"bands", "edges"};
  }
  if (target == "coupling") {
    return {"bands", "edges", "coupling"};
  }
  if (target == "count" || target == "bs-check") {
    std::vector<std::string> s;
    if (!synthetic) {
      s = {"bands", "edges", "coupling"};
    }
    s.push_back(target);
    return s;
  }
  if (target == "tube-check") {
    return {"tube-check"};
  }
  throw ConfigError("unknown stage \"" + target + "\"");
}

void check_stage_chain(const RunConfig& config, const std::vector<std::string>& stages)
{
  auto has = [&](const char* s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  auto before = [&](const std::string& a, const std::string& b) {
    return std::find(stages.begin(), stages.end(), a) < std::find(stages.begin(), stages.end(), b);
  };
  if (stages.empty()) {
    throw ConfigError("no stages requested");
  }
  for (const auto& s : stages) {
    if (std::count(stages.begin(), stages.end(), s) > 1) {
      throw ConfigError("stage \"" + s + "\" listed twice");
    }
  }
  const bool synthetic = !config.channels.empty();
  if ((has("bands") || has("tube-check")) && !config.grid) {
    throw ConfigError("stages bands and tube-check need a cross_section block");
  }
  if (has("edges") && !(has("bands") && before("bands", "edges"))) {
    throw ConfigError("stage edges needs bands before it");
  }
  if (has("coupling") && !(has("edges") && before("edges", "coupling"))) {
    throw ConfigError("stage coupling needs edges before it");
  }
  for (const char* s : {"count", "bs-check"}) {
    if (!has(s)) {
      continue;
    }
    if (!config.eps) {
      throw ConfigError(std::string("stage ") + s + " needs a perturbation block");
    }
    if (!synthetic && !(has("coupling") && before("coupling", s))) {
      throw ConfigError(std::string("stage ") + s + " needs coupling before it or an effective block");
    }
  }
  if (has("bs-check") && config.bs_lambdas.empty()) {
    throw ConfigError("stage bs-check needs bs_check.lambdas");
  }
  if (has("tube-check") && !config.tube_eps && !config.eps) {
    throw ConfigError("stage tube-check needs a perturbation");
  }
}

std::filesystem::path resolve_output_dir(const RunConfig& config,
                                         const std::optional<std::filesystem::path>& override_dir)
{
  if (override_dir) {
    return *override_dir;
  }
  if (const char* env = std::getenv(output_dir_env); env != nullptr && *env != '\0') {
    return env;
  }
  return config.output_dir;
}

EffectiveModel edge_model(const std::vector<EdgeCoupling>& couplings, const EdgeSelector& edge,
                          const DecayProfile& eps, const std::string& mode)
{
  EffectiveModel model;
  model.eps = eps;
  const double sign = edge.side == EdgeSide::plus ? 1.0 : -1.0;
  for (const auto& c : couplings) {
    if (c.gap != edge.gap || c.side != edge.side) {
      continue;
    }
    if (mode == "full") {
      model.channels.push_back(full_channel(c.mu, c.eta, sign * 2.0 * pi));
    } else {
      model.channels.push_back(mean_field_channel(c.mu, sign * 2.0 * pi * c.eta.mean));
    }
  }
  if (model.channels.empty()) {
    throw EdgeUnresolved("no coupling data for edge " + edge_tag(edge.gap, edge.side));
  }
  return model;
}

std::string classify_regime(const EffectiveModel& model)
{
  const DecayProfile& eps = model.eps;
  std::vector<double> s;
  for (const auto& ch : model.channels) {
    s.push_back(channel_strength(ch, eps));
  }
  const bool any_pos = std::any_of(s.begin(), s.end(), [](double v) { return v > 0.0; });
  const bool any_zero = std::any_of(s.begin(), s.end(), [](double v) { return v == 0.0; });
  if (is_log_family(eps)) {
    const double L = std::abs(eps.limit_L());
    bool super = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] > 0.0 && 4.0 * s[i] * L >= model.channels[i].mu) {
        super = true;
      }
    }
    return super ? "log law" : "bounded (subcritical log law)";
  }
  const double alpha = eps.alpha();
  if (!(alpha < 2.0)) {
    return "bounded (fast decay)";
  }
  if (any_pos) {
    return "power law";
  }
  if (!any_zero) {
    return "bounded (repulsive mean)";
  }
  return alpha <= 1.0 ? "sub-power bound (zero mean)" : "bounded (zero mean)";
}

PipelineResults execute(const RunConfig& config, const std::vector<std::string>& stages, std::ostream* log)
{
  check_stage_chain(config, stages);
  PipelineResults r;
  r.stages = stages;
  for (const auto& stage : stages) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (stage == "bands") {
        r.ops = build_operators(*config.grid);
        if (config.grid->layout == GridLayout::cartesian && config.grid->shape.is_centered_disk()) {
          r.warnings.push_back("centered disk: twisting acts trivially on the first band and the Cartesian grid "
                               "breaks the rotation symmetry at O(h)");
        }
        SweepOptions so;
        so.ell_max = config.ell_max;
        so.tol = config.tol;
        so.solver = config.solver;
        r.chart = sweep_bands(*r.ops, config.beta, config.band_count, config.n_k, so);
        r.gaps = find_gaps(*r.chart, config.gap_options);
      } else if (stage == "edges") {
        for (const Gap& g : r.gaps->gaps) {
          if (!config.edge_gaps.empty() &&
              std::find(config.edge_gaps.begin(), config.edge_gaps.end(), g.index) == config.edge_gaps.end()) {
            continue;
          }
          std::vector<EdgeSide> sides{EdgeSide::plus};
          if (g.index > 0) {
            sides.insert(sides.begin(), EdgeSide::minus);
          }
          for (EdgeSide side : sides) {
            try {
              r.edges.push_back(analyze_edge(*r.chart, g, side, *r.ops, config.beta, config.edge_options));
            } catch (const Error& e) {
              EdgeReport bad;
              bad.gap_index = g.index;
              bad.side = side;
              bad.edge_value = side == EdgeSide::plus ? g.upper : g.lower;
              bad.diagnostics.push_back(e.what());
              r.edges.push_back(bad);
            }
          }
        }
      } else if (stage == "coupling") {
        for (const EdgeReport& e : r.edges) {
          if (!e.regular()) {
            r.warnings.push_back("edge " + edge_tag(e.gap_index, e.side) + " is not regular; no coupling computed");
            continue;
          }
          for (std::size_t m = 0; m < e.extremizers.size(); ++m) {
            EdgeCoupling c;
            c.gap = e.gap_index;
            c.side = e.side;
            c.extremizer = static_cast<int>(m);
            c.mu = e.extremizers[m].mu;
            c.psi = edge_eigenfunction(*r.ops, config.beta, e.extremizers[m].k, e.band_index, config.ell_max,
                                       config.tol, config.solver);
            c.eta = compute_eta(c.psi, config.beta, *r.ops);
            c.l1 = eta_l1_report(c.eta);
            r.couplings.push_back(std::move(c));
          }
        }
      } else if (stage == "count" || stage == "bs-check") {
        if (!r.model) {
          if (!config.channels.empty()) {
            EffectiveModel m;
            m.eps = *config.eps;
            for (const auto& s : config.channels) {
              m.channels.push_back(s.eta ? full_channel(s.mu, *s.eta, s.coefficient)
                                         : mean_field_channel(s.mu, s.coefficient));
            }
            r.model = m;
          } else {
            EdgeSelector sel;
            if (config.count_edge) {
              sel = *config.count_edge;
            } else {
              if (r.couplings.empty()) {
                throw EdgeUnresolved("no regular edge with coupling data to count at");
              }
              sel = {r.couplings.front().gap, r.couplings.front().side};
            }
            r.counted_edge = sel;
            r.model = edge_model(r.couplings, sel, *config.eps, config.count_mode);
          }
          r.model->validate();
          r.regime = classify_regime(*r.model);
        }
        const double scale = config.relative_lambda ? r.model->potential_scale() : 1.0;
        if (!(scale > 0.0)) {
          throw EdgeUnresolved("effective potential vanishes identically; relative lambda range is undefined");
        }
        if (stage == "count") {
          r.curve = count_curve(*r.model, config.lambda_min * scale, config.lambda_max * scale, config.points,
                                config.count_options);
          r.fit = fit_for_regime(*r.model, *r.curve, r.regime);
        } else {
          for (double l : config.bs_lambdas) {
            BSRow row;
            row.lambda = l * scale;
            row.bs_converged = true;
            for (const auto& ch : r.model->channels) {
              const BSCountResult b = bs_count_converged(ch, r.model->eps, row.lambda, config.bs_options);
              row.bs_count += b.count;
              row.bs_converged = row.bs_converged && b.converged;
              row.dimension = std::max(row.dimension, b.dimension);
            }
            const CountResult c = count_converged(*r.model, row.lambda, config.count_options);
            row.count = c.count;
            row.count_converged = c.converged;
            r.bs_rows.push_back(row);
          }
        }
      } else if (stage == "tube-check") {
        const TransverseOperators tops = build_operators(config.tube_grid ? *config.tube_grid : *config.grid);
        r.tube = tube_trend(tops, config.beta, config.tube_eps ? *config.tube_eps : *config.eps, config.tube);
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "stage " + stage + ": " + std::string(e.what()).substr(e.kind().size() + 2));
    } catch (const std::exception& e) {
      throw Error("StageFailure", "stage " + stage + ": " + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream msg;
    msg.precision(3);
    msg << "stage " << stage << " done in " << secs << " s";
    note(log, msg.str());
  }
  for (const auto& w : r.warnings) {
    note(log, "warning: " + w);
  }
  return r;
}

json make_report(const RunConfig& config, const PipelineResults& r)
{
  json rep;
  rep["schema"] = report_schema;
  rep["provenance"] = {{"tool", "twistguide"},
                       {"version", tool_version},
                       {"config_name", config.name},
                       {"config_hash", config_hash(config.raw)},
                       {"timestamp", iso_now()}};
  rep["stages"] = r.stages;
  rep["warnings"] = r.warnings;
  if (config.grid) {
    rep["cross_section"] = to_json(config.grid->shape);
    rep["cross_section"]["h"] = config.grid->h;
    rep["cross_section"]["grid"] = config.grid->layout == GridLayout::polar ? "polar" : "cartesian";
  }
  rep["twist"] = to_json(config.beta);
  if (r.ops) {
    rep["transverse_nodes"] = r.ops->size();
  }
  if (r.chart) {
    rep["bands"] = chart_json(*r.chart, *r.gaps);
  }
  if (!r.edges.empty()) {
    json e = json::array();
    for (const auto& x : r.edges) {
      e.push_back(edge_json(x));
    }
    rep["edges"] = e;
  }
  if (!r.couplings.empty()) {
    json c = json::array();
    for (const auto& x : r.couplings) {
      c.push_back(coupling_json(x));
    }
    rep["coupling"] = c;
  }
  json summary = json::array();
  if (r.model && r.curve) {
    json cnt;
    if (r.counted_edge) {
      cnt["edge"] = {{"gap", r.counted_edge->gap}, {"side", to_string(r.counted_edge->side)}};
    }
    cnt["mode"] = config.channels.empty() ? config.count_mode : "synthetic";
    cnt["model"] = model_json(*r.model);
    cnt["regime"] = r.regime;
    cnt["curve"] = curve_json(*r.curve);
    cnt["fit"] = r.fit;
    rep["count"] = cnt;
    if (r.fit.value("kind", "") == "power_law" && r.fit.value("status", "") == "ok") {
      summary.push_back({{"quantity", "count exponent"},
                         {"value", r.fit["exponent"]},
                         {"expected", r.fit["expected"]},
                         {"regime", r.regime}});
      summary.push_back({{"quantity", "count / semiclassical at lambda_min"},
                         {"value", r.fit["ratio_at_min"]},
                         {"expected", 1.0},
                         {"regime", r.regime}});
    } else if (r.fit.value("kind", "") == "log_law" && r.fit.value("status", "") == "ok") {
      summary.push_back({{"quantity", "count / |ln lambda| slope"},
                         {"value", r.fit["slope"]},
                         {"expected", r.fit["predicted"]},
                         {"regime", r.regime}});
    } else {
      summary.push_back({{"quantity", "final count"},
                         {"value", r.curve->counts.back()},
                         {"constant_over_final_decade", r.curve->constant_over_final_decade()},
                         {"regime", r.regime}});
    }
  }
  if (!r.bs_rows.empty()) {
    json rows = json::array();
    bool all = true;
    for (const auto& b : r.bs_rows) {
      rows.push_back({{"lambda", b.lambda},
                      {"bs_count", b.bs_count},
                      {"count", b.count},
                      {"bs_converged", b.bs_converged},
                      {"count_converged", b.count_converged},
                      {"dimension", b.dimension},
                      {"agrees", b.agrees()}});
      all = all && b.agrees();
    }
    rep["bs_check"] = {{"rows", rows}, {"all_agree", all}};
    summary.push_back({{"quantity", "Birman-Schwinger agreement"}, {"value", all}, {"regime", r.regime}});
  }
  if (r.tube) {
    const TubeTrend& t = *r.tube;
    json rows = json::array();
    for (const auto& x : t.rows) {
      rows.push_back({{"scale", x.scale},
                      {"count", x.count},
                      {"count_doubled", x.count_doubled},
                      {"stable", x.stable},
                      {"dimension", x.dimension},
                      {"retries", x.retries}});
    }
    rep["tube_check"] = {{"edge", t.edge},
                         {"window", {t.window.a, t.window.b}},
                         {"side", to_string(t.window.side)},
                         {"background", t.background},
                         {"background_doubled", t.background_doubled},
                         {"rows", rows},
                         {"nondecreasing", t.nondecreasing},
                         {"nonzero_at_max", t.nonzero_at_max},
                         {"stable", t.stable}};
    summary.push_back({{"quantity", "tube window counts nondecreasing in scale"},
                       {"value", t.passed()},
                       {"regime", "full operator"}});
  }
  rep["summary"] = summary;
  return rep;
}

std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& dir, const RunConfig& config,
                                                   const PipelineResults& r, const json& report)
{
  std::vector<std::filesystem::path> files;
  auto put = [&](const std::string& name, const std::string& text) {
    const auto p = dir / name;
    write_text_file(p, text);
    files.push_back(p);
  };
  put("report.json", dump_json(report));
  if (r.chart) {
    std::vector<std::string> header{"k"};
    std::vector<std::vector<double>> cols{r.chart->k_samples};
    for (int l = 0; l < r.chart->band_count(); ++l) {
      header.push_back("E" + std::to_string(l + 1));
      cols.emplace_back(r.chart->bands.col(l).data(), r.chart->bands.col(l).data() + r.chart->sample_count());
      if (config.plots) {
        put("plot_band_" + std::to_string(l + 1) + ".dat", format_columns({"k", header.back()}, {cols[0], cols.back()}));
      }
    }
    put("bands.txt", format_columns(header, cols));
  }
  if (!r.edges.empty()) {
    std::string t = "# gap side band regular extremizer k value mu mu_error slope neighbour_gap\n";
    for (const auto& e : r.edges) {
      for (std::size_t m = 0; m < e.extremizers.size(); ++m) {
        const auto& x = e.extremizers[m];
        t += std::to_string(e.gap_index) + " " + to_string(e.side) + " " + std::to_string(e.band_index) + " " +
             (e.regular() ? "1" : "0") + " " + std::to_string(m) + " " + format_number(x.k) + " " +
             format_number(x.value) + " " + format_number(x.mu) + " " + format_number(x.mu_error) + " " +
             format_number(x.slope) + " " + format_number(x.neighbour_gap) + "\n";
      }
    }
    put("edges.txt", t);
  }
  for (const auto& c : r.couplings) {
    const std::string tag = edge_tag(c.gap, c.side) + "_m" + std::to_string(c.extremizer);
    put("eta_" + tag + ".dat", format_columns({"x3", "eta"}, {c.eta.x3, c.eta.samples}));
    std::vector<double> l, re, im;
    for (int k = -c.eta.degree; k <= c.eta.degree; ++k) {
      l.push_back(k);
      re.push_back(c.eta.coefficient(k).real());
      im.push_back(c.eta.coefficient(k).imag());
    }
    put("eta_fourier_" + tag + ".txt", format_columns({"l", "re", "im"}, {l, re, im}));
  }
  if (r.curve) {
    const CountCurve& c = *r.curve;
    std::vector<double> n(c.counts.begin(), c.counts.end());
    std::vector<double> conv;
    for (bool b : c.converged) {
      conv.push_back(b ? 1.0 : 0.0);
    }
    put("count_curve.txt", format_columns({"lambda", "N", "R", "min_step", "converged"},
                                          {c.lambdas, n, c.radii, c.min_steps, conv}));
    if (config.plots) {
      put("plot_count_curve.dat", format_columns({"lambda", "N"}, {c.lambdas, n}));
      const std::string kind = r.fit.value("kind", "");
      if (r.fit.value("status", "") == "ok" && (kind == "power_law" || kind == "log_law")) {
        std::vector<double> x, y;
        for (std::size_t i = c.size() / 2; i < c.size(); ++i) {
          if (kind == "power_law" && c.counts[i] < 5) {
            continue;
          }
          x.push_back(kind == "power_law" ? std::log(c.lambdas[i]) : std::abs(std::log(c.lambdas[i])));
          y.push_back(kind == "power_law" ? std::log(static_cast<double>(c.counts[i])) : static_cast<double>(c.counts[i]));
        }
        const LineFit f = line_fit(x, y);
        put("plot_fit_residuals.dat",
            format_columns({kind == "power_law" ? "ln_lambda" : "abs_ln_lambda", "residual"}, {f.x, f.residuals}));
      }
    }
  }
  if (!r.bs_rows.empty()) {
    std::vector<double> l, b, n, bc, nc, d;
    for (const auto& x : r.bs_rows) {
      l.push_back(x.lambda);
      b.push_back(static_cast<double>(x.bs_count));
      n.push_back(static_cast<double>(x.count));
      bc.push_back(x.bs_converged ? 1 : 0);
      nc.push_back(x.count_converged ? 1 : 0);
      d.push_back(x.dimension);
    }
    put("bs_check.txt",
        format_columns({"lambda", "bs_count", "count", "bs_converged", "count_converged", "dimension"}, {l, b, n, bc, nc, d}));
  }
  if (r.tube) {
    put("tube_check.txt", format_tube_trend(*r.tube));
  }
  return files;
}

RunReport run(const RunConfig& config, const std::vector<std::string>& stages,
              const std::optional<std::filesystem::path>& output_override, std::ostream* log)
{
  const PipelineResults results = execute(config, stages, log);
  RunReport rep;
  rep.report = make_report(config, results);
  rep.output_dir = resolve_output_dir(config, output_override);
  rep.files = write_artifacts(rep.output_dir, config, results, rep.report);
  return rep;
}

} // namespace twg
