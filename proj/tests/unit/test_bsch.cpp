#include "twistguide/bsch.hpp"
#include "twistguide/effective.hpp"
#include "twistguide/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace twg;

constexpr double pi = std::numbers::pi;

namespace {

// (2 pi)^{-1/2} int cos(q x) eps(x) dx by the midpoint rule on [-R, R]
double midpoint_transform(const DecayProfile& eps, double q, double R, long n)
{
  const double dx = 2.0 * R / n;
  double s = 0.0;
  for (long i = 0; i < n; ++i) {
    const double x = -R + (i + 0.5) * dx;
    s += std::cos(q * x) * eps(x);
  }
  return s * dx / std::sqrt(2.0 * pi);
}

} // namespace

TEST_CASE("Fourier transforms of the decay families")
{
  for (const auto& eps : {DecayProfile::gaussian(5.0, 1.5), DecayProfile::square_well(4.0, 2.0),
                          DecayProfile::compact_bump(6.0, 3.0)}) {
    for (double q : {0.0, 0.4, 1.3, 3.0}) {
      CHECK(decay_transform(eps, q) == doctest::Approx(midpoint_transform(eps, q, 20.0, 400000)).epsilon(1e-7).scale(1e-6));
    }
  }
  // alpha = 2: (2 pi)^{-1/2} pi e^{-|q|}
  const auto L = DecayProfile::power(1.0, 2.0);
  CHECK(decay_transform(L, 0.7) == doctest::Approx(std::sqrt(pi / 2.0) * std::exp(-0.7)).epsilon(1e-10));
}

TEST_CASE("Birman-Schwinger count equals the direct count")
{
  const Channel ch = mean_field_channel(1.0, 1.0);
  const auto eps = DecayProfile::gaussian(5.0, 1.5);
  const EffectiveModel model{{ch}, eps};
  for (double lambda : {0.2, 1.5}) {
    const BSCountResult b = bs_count_converged(ch, eps, lambda);
    const CountResult c = count_converged(model, lambda);
    REQUIRE(b.converged);
    REQUIRE(c.converged);
    CHECK(b.count == c.count);
  }
}

TEST_CASE("thresholds above the spectrum give a zero count")
{
  const Channel ch = mean_field_channel(1.0, 1.0);
  const BSOperator bs = assemble_bs(ch, DecayProfile::gaussian(2.0, 1.0), 0.5, 16.0, 0.1);
  const Eigen::VectorXd ev = bs_eigenvalues(bs);
  CHECK(bs_count(bs, ev.maxCoeff() + 1e-9) == 0);
  CHECK(bs_count(bs, ev.minCoeff() - 1e-9) == bs.dimension());
}

TEST_CASE("largest Birman-Schwinger eigenvalue is grid converged")
{
  const Channel ch = mean_field_channel(1.0, 1.0);
  const auto eps = DecayProfile::compact_bump(1.0, 2.0);
  const double lambda = 1e-2;
  const double K = 12.0, dk = 0.02;
  const double a = bs_eigenvalues(assemble_bs(ch, eps, lambda, K, dk)).maxCoeff();
  const double b = bs_eigenvalues(assemble_bs(ch, eps, lambda, 2.0 * K, dk / 2.0)).maxCoeff();
  CHECK(a == doctest::Approx(b).epsilon(1e-4));
}

TEST_CASE("transform decay ratio for a smooth bump")
{
  CHECK(transform_decay_check(DecayProfile::gaussian(1.0, 1.0)).consistent);
}
