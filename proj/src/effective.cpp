#include "twistguide/effective.hpp"

#include "twistguide/error.hpp"
#include "twistguide/linalg.hpp"

#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace twg {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double pi = std::numbers::pi;

void require(bool ok, const char* what)
{
  if (!ok) {
    throw std::invalid_argument(what);
  }
}

} // namespace

DecayProfile DecayProfile::power(double c, double alpha)
{
  require(c > 0.0 && std::isfinite(c), "power profile needs c > 0");
  require(alpha > 0.0 && std::isfinite(alpha), "power profile needs alpha > 0");
  return {DecayFamily::power, c, alpha, 1.0};
}

DecayProfile DecayProfile::power_with_limit(double L)
{
  require(std::isfinite(L), "power_with_limit needs a finite L");
  return {DecayFamily::power_with_limit, L, 2.0, 1.0};
}

DecayProfile DecayProfile::compact_bump(double c, double radius)
{
  require(std::isfinite(c), "compact_bump needs a finite amplitude");
  require(radius > 0.0 && std::isfinite(radius), "compact_bump needs a positive radius");
  return {DecayFamily::compact_bump, c, inf, radius};
}

DecayProfile DecayProfile::signed_power(double c, double alpha)
{
  require(std::isfinite(c), "signed_power needs a finite amplitude");
  require(alpha > 0.0 && std::isfinite(alpha), "signed_power needs alpha > 0");
  return {DecayFamily::signed_power, c, alpha, 1.0};
}

DecayProfile DecayProfile::square_well(double depth, double half_width)
{
  require(std::isfinite(depth), "square_well needs a finite depth");
  require(half_width > 0.0 && std::isfinite(half_width), "square_well needs a positive half width");
  return {DecayFamily::square_well, depth, inf, half_width};
}

DecayProfile DecayProfile::gaussian(double c, double width)
{
  require(std::isfinite(c), "gaussian needs a finite amplitude");
  require(width > 0.0 && std::isfinite(width), "gaussian needs a positive width");
  return {DecayFamily::gaussian, c, inf, width};
}

DecayProfile DecayProfile::scaled(double factor) const
{
  require(std::isfinite(factor), "scale factor must be finite");
  DecayProfile out = *this;
  out.c_ *= factor;
  if (out.family_ == DecayFamily::power && !(out.c_ > 0.0)) {
    out.family_ = DecayFamily::signed_power;
  }
  return out;
}

std::string DecayProfile::name() const
{
  switch (family_) {
  case DecayFamily::power: return "power";
  case DecayFamily::power_with_limit: return "power_with_limit";
  case DecayFamily::compact_bump: return "compact_bump";
  case DecayFamily::signed_power: return "signed_power";
  case DecayFamily::square_well: return "square_well";
  case DecayFamily::gaussian: return "gaussian";
  }
  return "unknown";
}

double DecayProfile::alpha() const { return alpha_; }

double DecayProfile::limit_L() const
{
  if (family_ == DecayFamily::power_with_limit) {
    return c_;
  }
  if ((family_ == DecayFamily::power || family_ == DecayFamily::signed_power) && alpha_ == 2.0) {
    return c_;
  }
  return 0.0;
}

namespace {

template <typename T>
T evaluate_family(DecayFamily f, double c, double alpha, double w, const T& x)
{
  using std::exp;
  using std::pow;
  switch (f) {
  case DecayFamily::power:
  case DecayFamily::signed_power: return c * pow(1.0 + x * x, -0.5 * alpha);
  case DecayFamily::power_with_limit: return c / (1.0 + x * x);
  case DecayFamily::gaussian: return c * exp(-(x * x) / (2.0 * w * w));
  case DecayFamily::compact_bump: {
    const T t = x / w;
    return c * exp(1.0 - 1.0 / (1.0 - t * t));
  }
  case DecayFamily::square_well: break;
  }
  return T(0.0);
}

} // namespace

double DecayProfile::operator()(double x) const
{
  switch (family_) {
  case DecayFamily::square_well: return std::abs(x) <= w_ ? c_ : 0.0;
  case DecayFamily::compact_bump:
    if (std::abs(x) >= w_) {
      return 0.0;
    }
    break;
  default: break;
  }
  return evaluate_family(family_, c_, alpha_, w_, x);
}

std::array<double, 5> DecayProfile::derivatives(double x) const
{
  std::array<double, 5> out{};
  if (family_ == DecayFamily::square_well) {
    out[0] = (*this)(x);
    return out;
  }
  if (family_ == DecayFamily::compact_bump && std::abs(x) >= w_) {
    return out;
  }
  using namespace boost::math::differentiation;
  const auto v = make_fvar<double, 4>(x);
  const auto y = evaluate_family(family_, c_, alpha_, w_, v);
  for (int l = 0; l <= 4; ++l) {
    out[static_cast<std::size_t>(l)] = y.derivative(static_cast<std::size_t>(l));
  }
  return out;
}

double DecayProfile::sup_abs() const { return std::abs(c_); }

double DecayProfile::envelope(double x) const { return std::abs((*this)(std::abs(x))); }

double DecayProfile::radius_below(double level) const
{
  const double a = std::abs(c_);
  if (a <= level) {
    return 0.0;
  }
  if (!(level > 0.0)) {
    return family_ == DecayFamily::square_well || family_ == DecayFamily::compact_bump ? w_ : inf;
  }
  switch (family_) {
  case DecayFamily::power:
  case DecayFamily::signed_power: return std::sqrt(std::max(0.0, std::pow(a / level, 2.0 / alpha_) - 1.0));
  case DecayFamily::power_with_limit: return std::sqrt(std::max(0.0, a / level - 1.0));
  case DecayFamily::gaussian: return w_ * std::sqrt(2.0 * std::log(a / level));
  case DecayFamily::square_well: return w_;
  case DecayFamily::compact_bump: {
    const double q = std::log(level / a); // < 0
    return w_ * std::sqrt(std::max(0.0, 1.0 - 1.0 / (1.0 - q)));
  }
  }
  return inf;
}

std::vector<double> DecayProfile::breakpoints() const
{
  if (family_ == DecayFamily::square_well || family_ == DecayFamily::compact_bump) {
    return {-w_, w_};
  }
  return {};
}

DecayClassCheck check_decay_class(const DecayProfile& eps, double alpha, int order)
{
  DecayClassCheck r;
  r.order = std::clamp(order, 0, 4);
  r.alpha = alpha;
  if (eps.family() == DecayFamily::square_well) {
    r.note = "square well is discontinuous";
    return r;
  }
  // geometric sample of [0, 1e8] plus the origin
  std::vector<double> xs{0.0};
  for (int i = 0; i <= 500; ++i) {
    xs.push_back(std::pow(10.0, -2.0 + 10.0 * i / 500.0));
  }
  std::array<double, 5> head{};
  std::array<double, 5> tail{};
  bool finite = true;
  for (double x : xs) {
    const auto d = eps.derivatives(x);
    for (int l = 0; l <= r.order; ++l) {
      const double v = std::abs(d[static_cast<std::size_t>(l)]) * std::pow(1.0 + x, alpha + l);
      finite = finite && std::isfinite(v);
      auto& slot = x <= 1e6 ? head : tail;
      slot[static_cast<std::size_t>(l)] = std::max(slot[static_cast<std::size_t>(l)], v);
      r.ratio[static_cast<std::size_t>(l)] = std::max(r.ratio[static_cast<std::size_t>(l)], v);
    }
  }
  r.in_s = finite;
  for (int l = 0; l <= r.order; ++l) {
    // a ratio still growing over the last two decades violates the bound
    if (tail[static_cast<std::size_t>(l)] > 2.0 * head[static_cast<std::size_t>(l)] + 1e-300) {
      r.in_s = false;
      r.note = "derivative of order " + std::to_string(l) + " decays slower than allowed";
    }
  }
  if (r.in_s) {
    const double ref = std::pow(1e4, alpha) * eps(1e4);
    bool plus = ref > 0.0;
    for (double x : {1e5, 1e6, 1e7, 1e8}) {
      plus = plus && std::pow(x, alpha) * eps(x) >= 0.5 * ref;
    }
    r.in_s_plus = plus;
  }
  return r;
}

double evaluate_periodic(const CouplingFunction& cf, double x)
{
  double sum = cf.coefficient(0).real();
  for (int l = 1; l <= cf.degree; ++l) {
    sum += 2.0 * (cf.coefficient(l) * std::polar(1.0, l * x)).real();
  }
  return sum / std::sqrt(2.0 * pi);
}

double Channel::periodic_factor(double x) const { return eta ? evaluate_periodic(*eta, x) : 1.0; }

double Channel::periodic_bound() const
{
  if (!eta) {
    return 1.0;
  }
  return eta_l1_report(*eta).l1 / std::sqrt(2.0 * pi);
}

double Channel::mean_coupling() const { return coupling * (eta ? eta->mean : 1.0); }

Channel mean_field_channel(double mu, double coupling) { return {mu, coupling, std::nullopt}; }

Channel full_channel(double mu, CouplingFunction eta, double coupling) { return {mu, coupling, std::move(eta)}; }

double EffectiveModel::potential(int channel, double x) const
{
  const Channel& ch = channels.at(static_cast<std::size_t>(channel));
  return ch.coupling * ch.periodic_factor(x) * eps(x);
}

double EffectiveModel::potential_scale() const
{
  double s = 0.0;
  for (const auto& ch : channels) {
    s = std::max(s, std::abs(ch.coupling) * ch.periodic_bound() * eps.sup_abs());
  }
  return s;
}

void EffectiveModel::validate() const
{
  for (const auto& ch : channels) {
    if (!(ch.mu > 0.0) || !std::isfinite(ch.mu)) {
      throw std::invalid_argument("effective channel needs mu > 0");
    }
    if (!std::isfinite(ch.coupling)) {
      throw std::invalid_argument("effective channel coupling must be finite");
    }
  }
}

namespace {

// V <= 0 everywhere makes -mu d^2 - V + lambda positive definite
bool repulsive(const EffectiveModel& model, int channel)
{
  const Channel& ch = model.channels[static_cast<std::size_t>(channel)];
  return !ch.eta && ch.coupling * model.eps.amplitude() <= 0.0;
}

double tail_radius(const EffectiveModel& model, const Channel& ch, double level)
{
  const double scale = std::abs(ch.coupling) * ch.periodic_bound();
  if (scale == 0.0) {
    return 0.0;
  }
  return model.eps.radius_below(level / scale);
}

} // namespace

void uniform_channel_matrix(const EffectiveModel& model, int channel, double lambda, double R, long n,
                            std::vector<double>& diag, std::vector<double>& off)
{
  require(n >= 1 && R > 0.0, "uniform grid needs n >= 1 and R > 0");
  const Channel& ch = model.channels.at(static_cast<std::size_t>(channel));
  const double h = 2.0 * R / static_cast<double>(n + 1);
  const double k = ch.mu / (h * h);
  diag.resize(static_cast<std::size_t>(n));
  off.assign(static_cast<std::size_t>(n - 1), -k);
  for (long i = 0; i < n; ++i) {
    const double x = -R + static_cast<double>(i + 1) * h;
    diag[static_cast<std::size_t>(i)] = 2.0 * k - model.potential(channel, x) + lambda;
  }
}

std::vector<long> count_below_fixed(const EffectiveModel& model, double lambda, double R, long n)
{
  std::vector<long> out;
  std::vector<double> diag;
  std::vector<double> off;
  for (int c = 0; c < static_cast<int>(model.channels.size()); ++c) {
    uniform_channel_matrix(model, c, lambda, R, n, diag, off);
    out.push_back(tridiagonal_negative_count(diag, off));
  }
  return out;
}

CountResult count_below(const EffectiveModel& model, double lambda, double R, long n)
{
  model.validate();
  require(lambda > 0.0, "count_below needs lambda > 0");
  require(R > 0.0 && n >= 1, "count_below needs R > 0 and n >= 1");
  double needed = R;
  for (const auto& ch : model.channels) {
    needed = std::max(needed, tail_radius(model, ch, 0.5 * lambda));
  }
  if (needed > R) {
    n = static_cast<long>(std::ceil(static_cast<double>(n + 1) * needed / R)) - 1;
    R = needed;
  }
  auto total = [&](double r, long m) {
    long s = 0;
    for (long c : count_below_fixed(model, lambda, r, m)) {
      s += c;
    }
    return s;
  };
  CountResult res;
  res.R = R;
  res.points = n;
  res.min_step = res.max_step = 2.0 * R / static_cast<double>(n + 1);
  res.count = total(R, n);
  const long check = total(2.0 * R, 4 * n + 3); // doubled R, halved step
  res.history = {res.count, check};
  res.converged = check == res.count;
  res.refinements = 1;
  return res;
}

namespace {

// Marches a graded mesh from -R to R, resolving the local wavelength
// 2 pi sqrt(mu / (|V| + lambda)), the period of eta where |V| is not small
// against sqrt(mu lambda), and landing exactly on the profile breakpoints.
class MeshWalker
{
public:
  MeshWalker(const EffectiveModel& model, const Channel& ch, double lambda, double R, const CountOptions& opt)
    : model_(model), ch_(ch), lambda_(lambda), R_(R), opt_(opt)
  {
    scale_ = std::abs(ch.coupling) * ch.periodic_bound();
    for (double b : model.eps.breakpoints()) {
      if (b > -R && b < R) {
        stops_.push_back(b);
      }
    }
    stops_.push_back(R);
    std::sort(stops_.begin(), stops_.end());
    x_ = -R;
    prev_h_ = target(-R);
  }

  double position() const { return x_; }
  bool done() const { return next_stop_ >= stops_.size(); }

  double advance()
  {
    double h = std::min({target(x_), target(x_ + target(x_)), 1.2 * prev_h_});
    const double stop = stops_[next_stop_];
    const double gap = stop - x_;
    if (gap <= 1.25 * h) {
      prev_h_ = gap;
      x_ = stop;
      ++next_stop_;
      return x_;
    }
    if (gap <= 2.2 * h) {
      h = 0.5 * gap;
    }
    x_ += h;
    prev_h_ = h;
    return x_;
  }

private:
  double target(double x) const
  {
    const double v = scale_ * model_.eps.envelope(x);
    const double kappa = std::sqrt((v + lambda_) / ch_.mu);
    double h = 2.0 * pi / (opt_.resolution * kappa);
    if (ch_.eta && v >= opt_.period_level * std::sqrt(ch_.mu * lambda_)) {
      h = std::min(h, 2.0 * pi / opt_.period_points);
    }
    return std::min(h, R_ / 64.0);
  }

  const EffectiveModel& model_;
  const Channel& ch_;
  double lambda_;
  double R_;
  const CountOptions& opt_;
  double scale_ = 0.0;
  std::vector<double> stops_;
  std::size_t next_stop_ = 0;
  double x_ = 0.0;
  double prev_h_ = 0.0;
};

// int_0^1 t^p e^{i theta t} dt for p = 0..3
std::array<cplx, 4> oscillatory_moments(double theta)
{
  std::array<cplx, 4> m{};
  if (std::abs(theta) < 4.0) {
    for (int p = 0; p < 4; ++p) {
      cplx term(1.0);
      cplx sum(0.0);
      for (int n = 0; n < 40; ++n) {
        sum += term / static_cast<double>(n + p + 1);
        term *= cplx(0.0, theta) / static_cast<double>(n + 1);
      }
      m[static_cast<std::size_t>(p)] = sum;
    }
    return m;
  }
  const cplx e = std::polar(1.0, theta);
  const cplx it(0.0, theta);
  m[0] = (e - 1.0) / it;
  for (int p = 1; p < 4; ++p) {
    m[static_cast<std::size_t>(p)] = (e - static_cast<double>(p) * m[static_cast<std::size_t>(p - 1)]) / it;
  }
  return m;
}

// Contributions of one element [xa, xa + h] to H + lambda. The potential is
// coupling * eta(x) * eps(x) with eps replaced by its linear fit through the
// two Gauss points and eta integrated exactly against the P1 products, so
// elements may be longer than the period of eta. The mass matrix is the
// average of the lumped and the consistent forms (diagonal 5h/12,
// off-diagonal h/12), which cancels the O(h^2) dispersion error of each.
struct ElementTerms
{
  double left;  // to the diagonal of the left node
  double right; // to the diagonal of the right node
  double off;
};

ElementTerms element_terms(const EffectiveModel& model, const Channel& ch, double lambda, double xa, double h)
{
  const double g = 0.5 / std::sqrt(3.0);
  const double em = model.eps(xa + (0.5 - g) * h);
  const double ep = model.eps(xa + (0.5 + g) * h);
  const double d = (ep - em) / (2.0 * g);
  const double e0 = em - d * (0.5 - g);

  // m_p = int_0^1 eta(xa + h t) t^p dt
  std::array<double, 4> m{1.0, 0.5, 1.0 / 3.0, 0.25};
  if (ch.eta) {
    const CouplingFunction& cf = *ch.eta;
    const double norm = 1.0 / std::sqrt(2.0 * pi);
    for (int p = 0; p < 4; ++p) {
      m[static_cast<std::size_t>(p)] = cf.coefficient(0).real() * norm / (p + 1);
    }
    for (int l = 1; l <= cf.degree; ++l) {
      const cplx c = cf.coefficient(l) * std::polar(1.0, l * xa);
      if (c == cplx(0.0)) {
        continue;
      }
      const auto I = oscillatory_moments(l * h);
      for (int p = 0; p < 4; ++p) {
        m[static_cast<std::size_t>(p)] += 2.0 * norm * (c * I[static_cast<std::size_t>(p)]).real();
      }
    }
  }
  const double scale = ch.coupling * h;
  const double va = scale * (e0 * (m[0] - m[1]) + d * (m[1] - m[2]));
  const double vb = scale * (e0 * m[1] + d * m[2]);
  const double vaa = scale * (e0 * (m[0] - 2.0 * m[1] + m[2]) + d * (m[1] - 2.0 * m[2] + m[3]));
  const double vbb = scale * (e0 * m[2] + d * m[3]);
  const double vab = scale * (e0 * (m[1] - m[2]) + d * (m[2] - m[3]));
  const double k = ch.mu / h;
  const double mass = 5.0 * h / 12.0 * lambda;
  return {k + mass - 0.5 * (va + vaa), k + mass - 0.5 * (vb + vbb), -k + h * lambda / 12.0 - 0.5 * vab};
}

struct MeshCount
{
  long count = 0;
  long points = 0;
  double min_step = inf;
  double max_step = 0.0;
};

MeshCount mesh_count(const EffectiveModel& model, int channel, double lambda, double R, const CountOptions& opt)
{
  MeshCount out;
  if (repulsive(model, channel)) {
    return out;
  }
  const Channel& ch = model.channels[static_cast<std::size_t>(channel)];
  MeshWalker walk(model, ch, lambda, R, opt);
  double xa = walk.position();
  double xb = walk.advance();
  ElementTerms prev = element_terms(model, ch, lambda, xa, xb - xa);
  out.min_step = out.max_step = xb - xa;
  double pivot = 1.0;
  bool first = true;
  constexpr double tiny = std::numeric_limits<double>::min();
  while (!walk.done()) {
    // node xb is interior; close its row with the element to its right
    xa = xb;
    xb = walk.advance();
    const ElementTerms cur = element_terms(model, ch, lambda, xa, xb - xa);
    const double diag = prev.right + cur.left;
    pivot = first ? diag : diag - prev.off * prev.off / pivot;
    first = false;
    if (pivot == 0.0) {
      pivot = -tiny;
    }
    if (pivot < 0.0) {
      ++out.count;
    }
    ++out.points;
    out.min_step = std::min(out.min_step, xb - xa);
    out.max_step = std::max(out.max_step, xb - xa);
    if (out.points > opt.max_points) {
      std::ostringstream msg;
      msg << "graded mesh exceeds " << opt.max_points << " points at lambda = " << lambda;
      throw NotConverged(msg.str());
    }
    prev = cur;
  }
  return out;
}

} // namespace

std::vector<double> channel_mesh(const EffectiveModel& model, int channel, double lambda, double R,
                                 const CountOptions& options)
{
  const Channel& ch = model.channels.at(static_cast<std::size_t>(channel));
  MeshWalker walk(model, ch, lambda, R, options);
  std::vector<double> mesh{walk.position()};
  while (!walk.done()) {
    mesh.push_back(walk.advance());
  }
  return mesh;
}

void mesh_channel_matrix(const EffectiveModel& model, int channel, double lambda, const std::vector<double>& mesh,
                         std::vector<double>& diag, std::vector<double>& off)
{
  require(mesh.size() >= 3, "mesh needs at least one interior node");
  const Channel& ch = model.channels.at(static_cast<std::size_t>(channel));
  const std::size_t n = mesh.size() - 2;
  diag.assign(n, 0.0);
  off.assign(n - 1, 0.0);
  for (std::size_t e = 0; e + 1 < mesh.size(); ++e) {
    const ElementTerms t = element_terms(model, ch, lambda, mesh[e], mesh[e + 1] - mesh[e]);
    // element e joins nodes e and e + 1; interior node j sits at mesh[j + 1]
    if (e >= 1) {
      diag[e - 1] += t.left;
    }
    if (e < n) {
      diag[e] += t.right;
    }
    if (e >= 1 && e < n) {
      off[e - 1] = t.off;
    }
  }
}

double channel_radius(const EffectiveModel& model, int channel, double lambda, const CountOptions& options)
{
  const Channel& ch = model.channels.at(static_cast<std::size_t>(channel));
  const double core = tail_radius(model, ch, options.tail_level * lambda);
  return core + options.decay_lengths * std::sqrt(ch.mu / lambda);
}

CountResult count_converged(const EffectiveModel& model, double lambda, const CountOptions& options)
{
  model.validate();
  require(lambda > 0.0, "count needs lambda > 0");
  CountOptions opt = options;
  CountResult res;
  std::vector<double> radii;
  for (int c = 0; c < static_cast<int>(model.channels.size()); ++c) {
    radii.push_back(channel_radius(model, c, lambda, opt));
  }
  double grow = 1.0;
  for (int r = 0; r <= options.max_refinements; ++r) {
    long total = 0;
    res.points = 0;
    res.min_step = inf;
    res.max_step = 0.0;
    res.R = 0.0;
    for (int c = 0; c < static_cast<int>(model.channels.size()); ++c) {
      const double R = grow * radii[static_cast<std::size_t>(c)];
      const MeshCount mc = mesh_count(model, c, lambda, R, opt);
      total += mc.count;
      res.points += mc.points;
      res.min_step = std::min(res.min_step, mc.min_step);
      res.max_step = std::max(res.max_step, mc.max_step);
      res.R = std::max(res.R, R);
    }
    res.history.push_back(total);
    res.count = total;
    res.refinements = r;
    if (r > 0) {
      const long prev = res.history[res.history.size() - 2];
      const long allowed = static_cast<long>(std::floor(options.rel_tol * static_cast<double>(total)));
      if (std::abs(total - prev) <= allowed) {
        res.converged = true;
        return res;
      }
    }
    grow *= 2.0;
    opt.resolution *= 2.0;
    opt.period_points *= 2.0;
  }
  return res;
}

bool CountCurve::monotone() const
{
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] < counts[i - 1]) {
      return false;
    }
  }
  return true;
}

bool CountCurve::all_converged() const
{
  return std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
}

bool CountCurve::constant_over_final_decade() const
{
  if (lambdas.empty()) {
    return false;
  }
  const double cut = 10.0 * lambdas.back();
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] <= cut * (1.0 + 1e-12) && counts[i] != counts.back()) {
      return false;
    }
  }
  return true;
}

CountCurve count_curve(const EffectiveModel& model, double lambda_min, double lambda_max, int points,
                       const CountOptions& options)
{
  require(lambda_min > 0.0 && lambda_min < lambda_max, "count_curve needs 0 < lambda_min < lambda_max");
  require(points >= 2, "count_curve needs at least two points");
  CountCurve curve;
  const double ratio = std::log(lambda_min / lambda_max);
  for (int j = 0; j < points; ++j) {
    const double lambda = j == points - 1 ? lambda_min : lambda_max * std::exp(ratio * j / (points - 1));
    const CountResult r = count_converged(model, lambda, options);
    curve.lambdas.push_back(lambda);
    curve.counts.push_back(r.count);
    curve.radii.push_back(r.R);
    curve.min_steps.push_back(r.min_step);
    curve.converged.push_back(r.converged);
  }
  return curve;
}

namespace {

// int_0^b f(x) dx for f with a square-root zero at b; [0, 1] directly and
// [1, b] in the variable t = ln x.
template <class F>
double half_line_integral(F f, double b)
{
  boost::math::quadrature::tanh_sinh<double> ts;
  if (!(b > 0.0)) {
    return 0.0;
  }
  const double split = std::min(1.0, b);
  double total = ts.integrate(f, 0.0, split);
  if (b > split) {
    auto g = [&](double t) {
      const double x = std::exp(t);
      return f(x) * x;
    };
    total += ts.integrate(g, 0.0, std::log(b));
  }
  return total;
}

} // namespace

SemiclassicalCount semiclassical_count(const EffectiveModel& model, double lambda)
{
  model.validate();
  require(lambda > 0.0, "semiclassical count needs lambda > 0");
  SemiclassicalCount out;
  const DecayProfile& eps = model.eps;
  for (const auto& ch : model.channels) {
    const double a = ch.mean_coupling();
    if (a * eps.amplitude() <= 0.0 || std::abs(a) * eps.sup_abs() <= lambda) {
      continue;
    }
    const double scale = std::abs(a);
    const double r = eps.radius_below(lambda / scale);
    auto integrand = [&](double x) {
      const double v = scale * std::abs(eps(x)) - lambda;
      return v > 0.0 ? std::sqrt(v) : 0.0;
    };
    out.value += 2.0 * half_line_integral(integrand, r) / (pi * std::sqrt(ch.mu));

    // phase-space volume: integrate the width of {x : a eps(x) > lambda + mu k^2}
    const double kmax = std::sqrt((scale * eps.sup_abs() - lambda) / ch.mu);
    auto width = [&](double k) { return 2.0 * eps.radius_below((lambda + ch.mu * k * k) / scale); };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double k1 = std::min(kmax, std::sqrt(lambda / ch.mu));
    double area = ts.integrate(width, 0.0, k1);
    if (kmax > k1) {
      auto g = [&](double t) {
        const double k = std::exp(t);
        return width(k) * k;
      };
      area += ts.integrate(g, std::log(k1), std::log(kmax));
    }
    out.phase_space += 2.0 * area / (2.0 * pi);
  }
  const double denom = std::max(std::abs(out.value), 1e-300);
  out.rel_diff = out.value == 0.0 && out.phase_space == 0.0 ? 0.0 : std::abs(out.value - out.phase_space) / denom;
  return out;
}

namespace {

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

} // namespace

double fit_loglog_slope(const CountCurve& curve, int* points_used)
{
  if (curve.size() < 2) {
    throw InsufficientGrowth("count curve has fewer than two points");
  }
  // the half of the curve with the largest counts (smallest lambda)
  const std::size_t start = curve.size() / 2;
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = start; i < curve.size(); ++i) {
    if (curve.counts[i] >= 5) {
      x.push_back(std::log(curve.lambdas[i]));
      y.push_back(std::log(static_cast<double>(curve.counts[i])));
    }
  }
  if (x.size() < 3) {
    throw InsufficientGrowth("fewer than three points with N >= 5 in the small-lambda half of the curve");
  }
  if (points_used) {
    *points_used = static_cast<int>(x.size());
  }
  return least_squares_slope(x, y);
}

PowerLawFit fit_power_law(const CountCurve& curve, const EffectiveModel& model)
{
  PowerLawFit fit;
  fit.exponent = fit_loglog_slope(curve, &fit.points_used);
  fit.expected = 0.5 - 1.0 / model.eps.alpha();
  fit.semiclassical_at_min = semiclassical_count(model, curve.lambdas.back()).value;
  fit.ratio_at_min = static_cast<double>(curve.counts.back()) / fit.semiclassical_at_min;
  return fit;
}

LogLawFit fit_log_law(const CountCurve& curve, double mu, double mean_coeff, double L)
{
  require(mu > 0.0, "fit_log_law needs mu > 0");
  LogLawFit fit;
  fit.predicted = std::sqrt(std::max(0.0, mean_coeff * L / mu - 0.25)) / pi;
  fit.subcritical = 4.0 * mean_coeff * L < mu;
  fit.bounded = curve.constant_over_final_decade();
  const std::size_t start = curve.size() / 2;
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = start; i < curve.size(); ++i) {
    x.push_back(std::abs(std::log(curve.lambdas[i])));
    y.push_back(static_cast<double>(curve.counts[i]));
  }
  if (x.size() < 3) {
    throw InsufficientGrowth("log-law fit needs at least three points in the small-lambda half");
  }
  if (!fit.subcritical && curve.counts.back() < 5) {
    throw InsufficientGrowth("supercritical log law but the count never reaches 5");
  }
  fit.points_used = static_cast<int>(x.size());
  fit.slope = least_squares_slope(x, y);
  return fit;
}

std::vector<RatioRow> compare_oscillating_vs_mean(const CouplingFunction& eta, const DecayProfile& eps, double mu,
                                                  double lambda_min, double lambda_max, int points,
                                                  const CountOptions& options)
{
  EffectiveModel full{{full_channel(mu, eta, 1.0)}, eps};
  EffectiveModel mean{{mean_field_channel(mu, eta.mean)}, eps};
  const CountCurve a = count_curve(full, lambda_min, lambda_max, points, options);
  const CountCurve b = count_curve(mean, lambda_min, lambda_max, points, options);
  std::vector<RatioRow> rows;
  for (std::size_t i = 0; i < a.size(); ++i) {
    RatioRow row{a.lambdas[i], a.counts[i], b.counts[i], 0.0};
    if (row.mean == 0) {
      row.ratio = row.full == 0 ? 1.0 : inf;
    } else {
      row.ratio = static_cast<double>(row.full) / static_cast<double>(row.mean);
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace twg
