#include "twistguide/io.hpp"

#include "twistguide/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace twg {

std::string format_number(double x)
{
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void dump_value(const json& j, int indent, int depth, std::string& out)
{
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
  case json::value_t::object: {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{";
    out += nl;
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) {
        out += ",";
        out += nl;
      }
      first = false;
      out += pad;
      out += json(it.key()).dump();
      out += sep;
      dump_value(it.value(), indent, depth + 1, out);
    }
    out += nl;
    out += close_pad;
    out += "}";
    return;
  }
  case json::value_t::array: {
    if (j.empty()) {
      out += "[]";
      return;
    }
    // arrays of scalars stay on one line
    bool flat = true;
    for (const auto& v : j) {
      if (v.is_structured()) {
        flat = false;
        break;
      }
    }
    out += "[";
    if (!flat) {
      out += nl;
    }
    bool first = true;
    for (const auto& v : j) {
      if (!first) {
        out += flat ? (indent > 0 ? ", " : ",") : ",";
        if (!flat) {
          out += nl;
        }
      }
      first = false;
      if (!flat) {
        out += pad;
      }
      dump_value(v, indent, depth + 1, out);
    }
    if (!flat) {
      out += nl;
      out += close_pad;
    }
    out += "]";
    return;
  }
  case json::value_t::number_float: {
    const double x = j.get<double>();
    if (std::isfinite(x)) {
      out += format_number(x);
    } else {
      out += "\"" + format_number(x) + "\"";
    }
    return;
  }
  default: out += j.dump(); return;
  }
}

[[noreturn]] void config_fail(const std::string& where, const std::string& what)
{
  throw ConfigError(where + ": " + what);
}

const json& require_key(const json& j, const std::string& key, const std::string& where)
{
  if (!j.is_object() || !j.contains(key)) {
    config_fail(where, "missing key \"" + key + "\"");
  }
  return j.at(key);
}

} // namespace

std::string dump_json(const json& j, int indent)
{
  std::string out;
  dump_value(j, indent, 0, out);
  if (indent > 0) {
    out += "\n";
  }
  return out;
}

std::string config_hash(const json& j)
{
  const std::string text = dump_json(j, 0);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json read_json_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
}

std::string format_columns(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns)
{
  std::string out;
  if (!header.empty()) {
    out += "#";
    for (const auto& h : header) {
      out += " " + h;
    }
    out += "\n";
  }
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c > 0) {
        out += " ";
      }
      out += format_number(columns[c][r]);
    }
    out += "\n";
  }
  return out;
}

double get_number(const json& j, const std::string& key, const std::string& where)
{
  const json& v = require_key(j, key, where);
  if (!v.is_number()) {
    config_fail(where + "." + key, "expected a number");
  }
  return v.get<double>();
}

double get_number(const json& j, const std::string& key, double fallback, const std::string& where)
{
  if (!j.is_object() || !j.contains(key)) {
    return fallback;
  }
  return get_number(j, key, where);
}

int get_int(const json& j, const std::string& key, int fallback, const std::string& where)
{
  if (!j.is_object() || !j.contains(key)) {
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) {
    config_fail(where + "." + key, "expected an integer");
  }
  return v.get<int>();
}

bool get_bool(const json& j, const std::string& key, bool fallback, const std::string& where)
{
  if (!j.is_object() || !j.contains(key)) {
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_boolean()) {
    config_fail(where + "." + key, "expected true or false");
  }
  return v.get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& fallback, const std::string& where)
{
  if (!j.is_object() || !j.contains(key)) {
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_string()) {
    config_fail(where + "." + key, "expected a string");
  }
  return v.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const std::string& key, const std::string& where)
{
  if (!j.is_object() || !j.contains(key)) {
    return {};
  }
  const json& v = j.at(key);
  if (!v.is_array()) {
    config_fail(where + "." + key, "expected an array of numbers");
  }
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) {
      config_fail(where + "." + key, "expected an array of numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where)
{
  if (!j.is_object()) {
    config_fail(where, "expected an object");
  }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) {
      config_fail(where, "unknown key \"" + it.key() + "\"");
    }
  }
}

CrossSectionShape parse_shape(const json& j, const std::string& where)
{
  const std::string kind = get_string(j, "shape", "", where);
  if (kind == "rectangle") {
    check_keys(j, {"shape", "offset", "width", "height"}, where);
  } else if (kind == "ellipse") {
    check_keys(j, {"shape", "offset", "a", "b"}, where);
  } else if (kind == "disk") {
    check_keys(j, {"shape", "offset", "radius"}, where);
  } else if (kind == "polygon") {
    check_keys(j, {"shape", "offset", "vertices"}, where);
  }
  Vec2 offset = Vec2::Zero();
  const std::vector<double> off = get_numbers(j, "offset", where);
  if (!off.empty()) {
    if (off.size() != 2) {
      config_fail(where + ".offset", "expected two numbers");
    }
    offset = Vec2(off[0], off[1]);
  }
  CrossSectionShape shape;
  try {
    if (kind == "rectangle") {
      shape = CrossSectionShape::rectangle(get_number(j, "width", where), get_number(j, "height", where), offset);
    } else if (kind == "ellipse") {
      shape = CrossSectionShape::ellipse(get_number(j, "a", where), get_number(j, "b", where), offset);
    } else if (kind == "disk") {
      const double r = get_number(j, "radius", where);
      shape = CrossSectionShape::ellipse(r, r, offset);
    } else if (kind == "polygon") {
      const json& verts = require_key(j, "vertices", where);
      std::vector<Vec2> v;
      for (const auto& p : verts) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
          config_fail(where + ".vertices", "expected [[x, y], ...]");
        }
        v.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
      shape = CrossSectionShape::polygon(std::move(v), offset);
    } else {
      config_fail(where + ".shape", "unknown shape \"" + kind + "\" (rectangle, ellipse, disk, polygon)");
    }
    shape.validate();
  } catch (const DegenerateShape& e) {
    config_fail(where, e.what());
  } catch (const std::invalid_argument& e) {
    config_fail(where, e.what());
  }
  return shape;
}

TwistProfile parse_twist(const json& j, const std::string& where)
{
  if (j.is_number()) {
    return TwistProfile::constant(j.get<double>());
  }
  if (!j.is_object()) {
    config_fail(where, "expected a number or an object");
  }
  try {
    if (j.contains("coefficients")) {
      check_keys(j, {"coefficients"}, where);
      std::vector<cplx> c;
      for (const auto& p : j.at("coefficients")) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
          config_fail(where + ".coefficients", "expected [[re, im], ...]");
        }
        c.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
      return TwistProfile(std::move(c));
    }
    check_keys(j, {"mean", "cos", "sin"}, where);
    return TwistProfile::trigonometric(get_number(j, "mean", 0.0, where), get_numbers(j, "cos", where),
                                       get_numbers(j, "sin", where));
  } catch (const std::invalid_argument& e) {
    config_fail(where, e.what());
  }
}

DecayProfile parse_decay(const json& j, const std::string& where)
{
  const std::string family = get_string(j, "family", "", where);
  try {
    if (family == "power") {
      check_keys(j, {"family", "c", "alpha"}, where);
      return DecayProfile::power(get_number(j, "c", 1.0, where), get_number(j, "alpha", where));
    }
    if (family == "signed_power") {
      check_keys(j, {"family", "c", "alpha"}, where);
      return DecayProfile::signed_power(get_number(j, "c", where), get_number(j, "alpha", where));
    }
    if (family == "power_with_limit") {
      check_keys(j, {"family", "L"}, where);
      return DecayProfile::power_with_limit(get_number(j, "L", where));
    }
    if (family == "compact_bump") {
      check_keys(j, {"family", "c", "radius"}, where);
      return DecayProfile::compact_bump(get_number(j, "c", 1.0, where), get_number(j, "radius", where));
    }
    if (family == "square_well") {
      check_keys(j, {"family", "depth", "half_width"}, where);
      return DecayProfile::square_well(get_number(j, "depth", where), get_number(j, "half_width", where));
    }
    if (family == "gaussian") {
      check_keys(j, {"family", "c", "width"}, where);
      return DecayProfile::gaussian(get_number(j, "c", 1.0, where), get_number(j, "width", where));
    }
  } catch (const std::invalid_argument& e) {
    config_fail(where, e.what());
  }
  config_fail(where + ".family", "unknown family \"" + family +
                                   "\" (power, signed_power, power_with_limit, compact_bump, square_well, gaussian)");
}

CouplingFunction parse_periodic(const json& j, const std::string& where)
{
  check_keys(j, {"mean", "cos", "sin", "samples"}, where);
  const double mean = get_number(j, "mean", 0.0, where);
  const std::vector<double> a = get_numbers(j, "cos", where);
  const std::vector<double> b = get_numbers(j, "sin", where);
  const int degree = static_cast<int>(std::max(a.size(), b.size()));
  const int n = get_int(j, "samples", 4 * degree + 33, where);
  if (n < 2 * degree + 1) {
    config_fail(where + ".samples", "too few samples for the given harmonics");
  }
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = 2.0 * std::numbers::pi * i / n;
    double v = mean;
    for (std::size_t m = 0; m < a.size(); ++m) {
      v += a[m] * std::cos((m + 1.0) * x);
    }
    for (std::size_t m = 0; m < b.size(); ++m) {
      v += b[m] * std::sin((m + 1.0) * x);
    }
    s[static_cast<std::size_t>(i)] = v;
  }
  return coupling_from_samples(std::move(s), degree);
}

json to_json(const CrossSectionShape& shape)
{
  json j;
  if (const auto* r = std::get_if<Rectangle>(&shape.kind)) {
    j = {{"shape", "rectangle"}, {"width", r->width}, {"height", r->height}};
  } else if (const auto* e = std::get_if<Ellipse>(&shape.kind)) {
    j = {{"shape", "ellipse"}, {"a", e->a}, {"b", e->b}};
  } else {
    const auto& p = std::get<Polygon>(shape.kind);
    json v = json::array();
    for (const auto& x : p.vertices) {
      v.push_back({x.x(), x.y()});
    }
    j = {{"shape", "polygon"}, {"vertices", v}};
  }
  j["offset"] = {shape.offset.x(), shape.offset.y()};
  return j;
}

json to_json(const TwistProfile& beta)
{
  json c = json::array();
  for (const auto& z : beta.coefficients()) {
    c.push_back({z.real(), z.imag()});
  }
  return {{"coefficients", c}};
}

json to_json(const DecayProfile& eps)
{
  json j = {{"family", eps.name()}};
  switch (eps.family()) {
  case DecayFamily::power:
  case DecayFamily::signed_power:
    j["c"] = eps.amplitude();
    j["alpha"] = eps.alpha();
    break;
  case DecayFamily::power_with_limit: j["L"] = eps.amplitude(); break;
  case DecayFamily::compact_bump:
    j["c"] = eps.amplitude();
    j["radius"] = eps.width();
    break;
  case DecayFamily::square_well:
    j["depth"] = eps.amplitude();
    j["half_width"] = eps.width();
    break;
  case DecayFamily::gaussian:
    j["c"] = eps.amplitude();
    j["width"] = eps.width();
    break;
  }
  return j;
}

} // namespace twg
