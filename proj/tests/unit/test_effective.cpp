#include "twistguide/coupling.hpp"
#include "twistguide/effective.hpp"
#include "twistguide/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace twg;

constexpr double pi = std::numbers::pi;

namespace {

// bound states of -mu u'' - V0 1_{|x| <= a} below -lambda, by sign changes
// of the even and odd matching conditions
long square_well_states(double V0, double a, double mu, double lambda)
{
  auto even = [&](double E) {
    const double k = std::sqrt((V0 + E) / mu), q = std::sqrt(-E / mu);
    return k * std::sin(k * a) - q * std::cos(k * a);
  };
  auto odd = [&](double E) {
    const double k = std::sqrt((V0 + E) / mu), q = std::sqrt(-E / mu);
    return k * std::cos(k * a) + q * std::sin(k * a);
  };
  long count = 0;
  const int n = 200000;
  for (auto f : {std::function<double(double)>(even), std::function<double(double)>(odd)}) {
    double prev = f(-V0 + 1e-12);
    for (int i = 1; i <= n; ++i) {
      const double E = -V0 + (V0 - lambda) * i / n;
      const double v = f(E);
      if ((v > 0.0) != (prev > 0.0)) {
        ++count;
      }
      prev = v;
    }
  }
  return count;
}

} // namespace

TEST_CASE("decay profiles")
{
  const auto p = DecayProfile::power(2.0, 1.5);
  CHECK(p(1.0) == doctest::Approx(2.0 * std::pow(2.0, -0.75)));
  CHECK(p.sup_abs() == doctest::Approx(2.0));
  CHECK(p.alpha() == doctest::Approx(1.5));
  const auto L = DecayProfile::power_with_limit(1.25);
  CHECK(L.limit_L() == doctest::Approx(1.25));
  CHECK(L(3.0) == doctest::Approx(0.125));
  const auto g = DecayProfile::gaussian(5.0, 1.5);
  CHECK(g(1.5) == doctest::Approx(5.0 * std::exp(-0.5)));
  CHECK(std::isinf(g.alpha()));
  const auto b = DecayProfile::compact_bump(6.0, 3.0);
  CHECK(b(0.0) == doctest::Approx(6.0));
  CHECK(b(3.0) == 0.0);
  const auto w = DecayProfile::square_well(4.0, 2.0);
  CHECK(w(1.9) == 4.0);
  CHECK(w(2.1) == 0.0);
  CHECK(p.scaled(-1.0).family() == DecayFamily::signed_power);
  CHECK_THROWS(DecayProfile::power(1.0, -1.0));
}

TEST_CASE("decay class membership")
{
  CHECK(check_decay_class(DecayProfile::power(1.0, 0.8), 0.8).in_s_plus);
  CHECK(check_decay_class(DecayProfile::power(1.0, 0.8), 0.8).in_s);
  CHECK_FALSE(check_decay_class(DecayProfile::power(1.0, 0.8), 1.5).in_s);
  CHECK_FALSE(check_decay_class(DecayProfile::gaussian(1.0, 1.0), 2.0).in_s_plus);
}

TEST_CASE("square well count matches the matching conditions")
{
  const double V0 = 4.0, a = 2.0, mu = 1.0;
  const EffectiveModel model{{mean_field_channel(mu, 1.0)}, DecayProfile::square_well(V0, a)};
  for (double lambda : {0.05, 0.5, 1.7, 3.1}) {
    const CountResult r = count_converged(model, lambda);
    CHECK(r.converged);
    CHECK(r.count == square_well_states(V0, a, mu, lambda));
  }
}

TEST_CASE("semiclassical count against a midpoint rule")
{
  const double c = 1.3, alpha = 0.9, mu = 0.7, lambda = 1e-3;
  const EffectiveModel model{{mean_field_channel(mu, 1.0)}, DecayProfile::power(c, alpha)};
  const double R = std::sqrt(std::pow(c / lambda, 2.0 / alpha) - 1.0);
  const long n = 1'000'000;
  const double dx = 2.0 * R / n;
  double sum = 0.0;
  for (long i = 0; i < n; ++i) {
    const double x = -R + (i + 0.5) * dx;
    sum += std::sqrt(std::max(0.0, c * std::pow(1.0 + x * x, -alpha / 2.0) - lambda));
  }
  const double expected = sum * dx / (pi * std::sqrt(mu));
  CHECK(semiclassical_count(model, lambda).value == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("graded mesh count agrees with a fine uniform grid")
{
  const EffectiveModel model{{mean_field_channel(1.0, 1.0)}, DecayProfile::gaussian(3.0, 2.0)};
  const double lambda = 0.1;
  const CountResult graded = count_converged(model, lambda);
  const CountResult uniform = count_below(model, lambda, 40.0, 40000);
  CHECK(graded.converged);
  CHECK(graded.count == uniform.count);
}

TEST_CASE("count curves are monotone in lambda")
{
  const EffectiveModel model{{mean_field_channel(1.0, 1.0)}, DecayProfile::power(1.0, 0.8)};
  const CountCurve c = count_curve(model, 1e-4, 1e-1, 7);
  CHECK(c.monotone());
  CHECK(c.all_converged());
  CHECK(c.counts.back() >= c.counts.front());
}

TEST_CASE("repulsive mean gives no eigenvalues")
{
  const EffectiveModel model{{mean_field_channel(1.0, -1.0)}, DecayProfile::power(1.0, 0.8)};
  CHECK(count_converged(model, 1e-5).count == 0);
}

TEST_CASE("periodic coupling with zero mean is handled in the full channel")
{
  std::vector<double> s(64);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::cos(2.0 * pi * i / 64.0);
  }
  const Channel ch = full_channel(1.0, coupling_from_samples(s));
  CHECK(ch.mean_coupling() == doctest::Approx(0.0).scale(1.0));
  CHECK(ch.periodic_bound() == doctest::Approx(1.0));
  CHECK(ch.periodic_factor(0.0) == doctest::Approx(1.0));
  CHECK(ch.periodic_factor(pi) == doctest::Approx(-1.0));
}

TEST_CASE("log law prediction")
{
  const EffectiveModel model{{mean_field_channel(1.0, 1.0)}, DecayProfile::power_with_limit(1.25)};
  const CountCurve c = count_curve(model, 1e-30, 1e-3, 10);
  const LogLawFit f = fit_log_law(c, 1.0, 1.0, 1.25);
  CHECK(f.predicted == doctest::Approx(1.0 / pi));
  CHECK_FALSE(f.subcritical);
  CHECK(f.slope == doctest::Approx(f.predicted).epsilon(0.15));
}
