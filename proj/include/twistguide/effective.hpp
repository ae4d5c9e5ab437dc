#pragma once

#include "twistguide/coupling.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace twg {

enum class DecayFamily
{
  power,            // c (1 + x^2)^{-alpha/2}
  power_with_limit, // L / (1 + x^2)
  compact_bump,     // c exp(1 - 1 / (1 - (x/R)^2)) on |x| < R
  signed_power,     // c (1 + x^2)^{-alpha/2}, any sign of c
  square_well,      // depth on |x| <= a, 0 outside
  gaussian          // c exp(-x^2 / (2 s^2))
};

/// Decaying perturbation epsilon(x).
class DecayProfile
{
public:
  static DecayProfile power(double c, double alpha);
  static DecayProfile power_with_limit(double L);
  static DecayProfile compact_bump(double c, double radius);
  static DecayProfile signed_power(double c, double alpha);
  static DecayProfile square_well(double depth, double half_width);
  static DecayProfile gaussian(double c, double width);

  /// factor * eps; a power profile with a negative result becomes signed_power
  DecayProfile scaled(double factor) const;

  DecayFamily family() const { return family_; }
  std::string name() const;
  double amplitude() const { return c_; }
  /// Decay rate; +infinity for compactly supported or Gaussian profiles.
  double alpha() const;
  /// lim x^2 eps(x) for the alpha = 2 family, 0 for faster decay.
  double limit_L() const;
  double width() const { return w_; }

  double operator()(double x) const;
  /// derivatives of order 0..4 at x (zero away from the jumps of the square well)
  std::array<double, 5> derivatives(double x) const;
  double sup_abs() const;
  /// sup_{|y| >= |x|} |eps(y)|
  double envelope(double x) const;
  /// Smallest r >= 0 with envelope(r) <= level (0 when sup <= level).
  double radius_below(double level) const;
  /// Points where eps is not smooth.
  std::vector<double> breakpoints() const;

private:
  DecayProfile(DecayFamily f, double c, double alpha, double w) : family_(f), c_(c), alpha_(alpha), w_(w) {}
  DecayFamily family_ = DecayFamily::power;
  double c_ = 1.0;
  double alpha_ = 1.0;
  double w_ = 1.0;
};

struct DecayClassCheck
{
  int order = 4;
  double alpha = 0.0;
  bool in_s = false;             // sampled ratio test for S_{order, alpha}
  bool in_s_plus = false;        // lim inf |x|^alpha eps(x) > 0
  std::array<double, 5> ratio{}; // sup |eps^(l)| (1 + |x|)^{alpha + l}
  std::string note;
};

/// Sampled membership test for the decay classes S_{n,alpha} and S^+_{n,alpha}.
DecayClassCheck check_decay_class(const DecayProfile& eps, double alpha, int order = 4);

/// One summand -mu d^2/dx^2 - V of the effective operator, with
/// V(x) = coupling * eta(x) * eps(x) when a periodic eta is attached and
/// V(x) = coupling * eps(x) otherwise.
struct Channel
{
  double mu = 1.0;
  double coupling = 1.0;
  std::optional<CouplingFunction> eta;

  double periodic_factor(double x) const;
  double periodic_bound() const; // max |eta|, 1 without eta
  double mean_coupling() const;  // coupling * <eta>
};

struct EffectiveModel
{
  std::vector<Channel> channels;
  DecayProfile eps = DecayProfile::power(1.0, 1.0);

  double potential(int channel, double x) const;
  /// sup_x |V| over all channels
  double potential_scale() const;
  void validate() const;
};

Channel mean_field_channel(double mu, double coupling);
Channel full_channel(double mu, CouplingFunction eta, double coupling = 1.0);
/// Evaluates sum_l eta_l e^{ilx} / sqrt(2 pi).
double evaluate_periodic(const CouplingFunction& cf, double x);

struct CountResult
{
  long count = 0;
  bool converged = false;
  double R = 0.0;
  double min_step = 0.0;
  double max_step = 0.0;
  long points = 0;
  int refinements = 0;
  std::vector<long> history; // counts at successive refinements
};

/// Uniform-grid count of eigenvalues below -lambda: n interior points on
/// [-R, R], Dirichlet ends, second-order differences. R is enlarged (with n
/// scaled to keep the step) when sup_{|x|>R} |V| >= lambda/2. `converged`
/// reports whether the count survives doubling R and halving the step.
CountResult count_below(const EffectiveModel& model, double lambda, double R, long n);

/// Uniform-grid counts without any checks (one entry per channel).
std::vector<long> count_below_fixed(const EffectiveModel& model, double lambda, double R, long n);

/// Symmetric tridiagonal matrix (diag, off) of H + lambda on the uniform grid.
void uniform_channel_matrix(const EffectiveModel& model, int channel, double lambda, double R, long n,
                            std::vector<double>& diag, std::vector<double>& off);

struct CountOptions
{
  double resolution = 40.0;    // mesh points per local wavelength
  double period_points = 16.0; // mesh points per period of eta ...
  double period_level = 0.1;   // ... where |V| >= period_level * sqrt(mu lambda)
  double tail_level = 0.25;    // |V| < tail_level * lambda beyond the core
  double decay_lengths = 8.0;  // extra sqrt(mu/lambda) margins past the core
  double rel_tol = 1e-3;       // allowed change: floor(rel_tol * N)
  int max_refinements = 3;
  long max_points = 60'000'000;
};

/// Graded-mesh nodes for one channel (boundary nodes included).
std::vector<double> channel_mesh(const EffectiveModel& model, int channel, double lambda, double R,
                                 const CountOptions& options);

/// Symmetric tridiagonal form of H + lambda in the P1 finite-element basis
/// on the given mesh (interior nodes).
void mesh_channel_matrix(const EffectiveModel& model, int channel, double lambda, const std::vector<double>& mesh,
                         std::vector<double>& diag, std::vector<double>& off);

/// Truncation radius for one channel: core radius where |V| drops below
/// tail_level * lambda plus decay margins.
double channel_radius(const EffectiveModel& model, int channel, double lambda, const CountOptions& options);

/// Converged count N_{(-inf, -lambda)} on graded meshes, refining (2R, 2x
/// resolution) until the integer is stable.
CountResult count_converged(const EffectiveModel& model, double lambda, const CountOptions& options = {});

struct CountCurve
{
  std::vector<double> lambdas; // descending
  std::vector<long> counts;
  std::vector<double> radii;
  std::vector<double> min_steps;
  std::vector<bool> converged;

  std::size_t size() const { return lambdas.size(); }
  bool monotone() const;
  bool all_converged() const;
  /// True when every count with lambda <= 10 lambda_min equals the last one.
  bool constant_over_final_decade() const;
};

CountCurve count_curve(const EffectiveModel& model, double lambda_min, double lambda_max, int points,
                       const CountOptions& options = {});

struct SemiclassicalCount
{
  double value = 0.0;       // (1/pi) sum mu^{-1/2} int (a eps - lambda)_+^{1/2}
  double phase_space = 0.0; // (1/2pi) |{mu k^2 - a eps < -lambda}|
  double rel_diff = 0.0;
};

/// Mean-field semiclassical count; channels with a periodic eta use
/// coupling * <eta>.
SemiclassicalCount semiclassical_count(const EffectiveModel& model, double lambda);

struct PowerLawFit
{
  double exponent = 0.0;
  double expected = 0.0; // 1/2 - 1/alpha
  double ratio_at_min = 0.0;
  double semiclassical_at_min = 0.0;
  int points_used = 0;
};

PowerLawFit fit_power_law(const CountCurve& curve, const EffectiveModel& model);
/// Fit of log N against log lambda only (no semiclassical ratio).
double fit_loglog_slope(const CountCurve& curve, int* points_used = nullptr);

struct LogLawFit
{
  double slope = 0.0;
  double predicted = 0.0; // (1/pi) (coef L / mu - 1/4)_+^{1/2}
  bool subcritical = false;
  bool bounded = false; // constant over the final decade
  int points_used = 0;
};

LogLawFit fit_log_law(const CountCurve& curve, double mu, double mean_coeff, double L);

struct RatioRow
{
  double lambda = 0.0;
  long full = 0;
  long mean = 0;
  double ratio = 0.0;
};

/// Counts -mu d^2 - eta eps against -mu d^2 - <eta> eps on a log grid.
std::vector<RatioRow> compare_oscillating_vs_mean(const CouplingFunction& eta, const DecayProfile& eps, double mu,
                                                  double lambda_min, double lambda_max, int points,
                                                  const CountOptions& options = {});

} // namespace twg
