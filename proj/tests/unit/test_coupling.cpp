#include "twistguide/coupling.hpp"
#include "twistguide/error.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace twg;

constexpr double pi = std::numbers::pi;

namespace {

TransverseOperators offset_rectangle()
{
  return assemble_transverse(build_grid(CrossSectionShape::rectangle(1.0, 0.6, Vec2(0.15, 0.05)), 0.1));
}

} // namespace

TEST_CASE("eta mean is the derivative of the band in a constant twist shift")
{
  const auto ops = offset_rectangle();
  const auto beta = TwistProfile::trigonometric(0.7, {0.3});
  const int ell_max = 5;
  const double k = 0.0;
  const EdgeEigenfunction psi = edge_eigenfunction(ops, beta, k, 0, ell_max, 1e-12);
  const CouplingFunction eta = compute_eta(psi, beta, ops);
  const double d = 1e-4;
  auto E = [&](double shift) {
    const auto b = TwistProfile::trigonometric(0.7 + shift, {0.3});
    return fiber_eigenvalues(ops, b, k, ell_max, 1, 1e-13)[0];
  };
  const double derivative = (E(d) - E(-d)) / (2.0 * d);
  CHECK(2.0 * pi * eta.mean == doctest::Approx(derivative).epsilon(1e-6));
}

TEST_CASE("eta is invariant under a constant phase")
{
  const auto ops = offset_rectangle();
  const auto beta = TwistProfile::trigonometric(0.5, {0.2}, {0.1});
  EdgeEigenfunction psi = edge_eigenfunction(ops, beta, 0.0, 0, 4, 1e-12);
  const CouplingFunction a = compute_eta(psi, beta, ops);
  psi.coefficients *= std::polar(1.0, 0.77);
  const CouplingFunction b = compute_eta(psi, beta, ops);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(b.samples[i] == doctest::Approx(a.samples[i]).epsilon(1e-12).scale(a.max_abs()));
  }
}

TEST_CASE("eigenfunction is normalized on omega x T")
{
  const auto ops = offset_rectangle();
  const auto beta = TwistProfile::trigonometric(0.5, {0.2});
  const EdgeEigenfunction psi = edge_eigenfunction(ops, beta, 0.0, 0, 4, 1e-12);
  CHECK(psi.coefficients.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(psi.norm_squared() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("untwisted guide has vanishing coupling")
{
  const auto ops = offset_rectangle();
  const auto beta = TwistProfile::constant(0.0);
  const EdgeEigenfunction psi = edge_eigenfunction(ops, beta, 0.0, 0, 2, 1e-12);
  const CouplingFunction eta = compute_eta(psi, beta, ops);
  CHECK(eta.max_abs() <= 1e-10 * psi.eigenvalue);
}

TEST_CASE("coupling from samples recovers Fourier data")
{
  const int n = 32;
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) {
    const double x = 2.0 * pi * i / n;
    s[i] = 1.5 + 2.0 * std::cos(x) - 0.5 * std::sin(3.0 * x);
  }
  const CouplingFunction cf = coupling_from_samples(s);
  CHECK(cf.mean == doctest::Approx(1.5));
  // eta_l = (2 pi)^{-1/2} int eta e^{-ilx}
  const double unit = std::sqrt(2.0 * pi);
  CHECK(std::abs(cf.coefficient(1) - cplx(unit, 0.0)) <= 1e-12);
  CHECK(std::abs(cf.coefficient(3) - cplx(0.0, 0.25 * unit)) <= 1e-12);
  CHECK(cf.max_abs() >= 3.0);
  const L1Report r = eta_l1_report(cf);
  CHECK(r.l1 == doctest::Approx(unit * (1.5 + 2.0 + 0.5)).epsilon(1e-12));
}
