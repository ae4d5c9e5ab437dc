#include "twistguide/bands.hpp"
#include "twistguide/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace twg;

constexpr double pi = std::numbers::pi;

namespace {

// E1 = 1 + sin^2(pi k): minimum at k = 0, maximum 2 at k = 1/2
// E2 = 3 + cos^2(pi k): minimum 3 at k = 1/2
Eigen::VectorXd cos2_bands(double k, int count)
{
  Eigen::VectorXd v(count);
  for (int i = 0; i < count; ++i) {
    v[i] = i == 0 ? 1.0 + std::pow(std::sin(pi * k), 2) : (i == 1 ? 3.0 + std::pow(std::cos(pi * k), 2) : 5.0 * i);
  }
  return v;
}

// minima at k = +-0.2
Eigen::VectorXd shifted_band(double k, int count)
{
  Eigen::VectorXd v(count);
  for (int i = 0; i < count; ++i) {
    v[i] = i == 0 ? 1.0 + std::pow(std::cos(2.0 * pi * k) - std::cos(0.4 * pi), 2) : 10.0 * i;
  }
  return v;
}

} // namespace

TEST_CASE("gaps of a synthetic two-band chart")
{
  const BandChart chart = chart_from_evaluator(cos2_bands, 2, 32);
  const GapList gl = find_gaps(chart);
  REQUIRE(gl.gaps.size() == 2);
  CHECK(gl.gaps[0].upper == doctest::Approx(1.0));
  CHECK(gl.gaps[1].lower == doctest::Approx(2.0));
  CHECK(gl.gaps[1].upper == doctest::Approx(3.0));
}

TEST_CASE("effective masses of the synthetic cos^2 bands")
{
  const BandChart chart = chart_from_evaluator(cos2_bands, 2, 32);
  const GapList gl = find_gaps(chart);
  EdgeOptions opt;
  const EdgeReport bottom = analyze_edge(chart, gl.gaps[0], EdgeSide::plus, cos2_bands, opt);
  REQUIRE(bottom.regular());
  REQUIRE(bottom.multiplicity() == 1);
  CHECK(std::abs(bottom.extremizers[0].k) <= 1e-7);
  CHECK(bottom.extremizers[0].mu == doctest::Approx(pi * pi).epsilon(1e-6));

  const EdgeReport lower = analyze_edge(chart, gl.gaps[1], EdgeSide::minus, cos2_bands, opt);
  REQUIRE(lower.regular());
  CHECK(std::abs(lower.extremizers[0].k) == doctest::Approx(0.5));
  CHECK(lower.extremizers[0].mu == doctest::Approx(pi * pi).epsilon(1e-6));
  CHECK(lower.edge_value == doctest::Approx(2.0).epsilon(1e-12));

  const EdgeReport upper = analyze_edge(chart, gl.gaps[1], EdgeSide::plus, cos2_bands, opt);
  REQUIRE(upper.regular());
  CHECK(upper.edge_value == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(upper.band_index == 1);
}

TEST_CASE("extremizers away from k = 0 come in mirror pairs")
{
  const BandChart chart = chart_from_evaluator(shifted_band, 2, 32);
  const GapList gl = find_gaps(chart);
  const EdgeReport e = analyze_edge(chart, gl.gaps[0], EdgeSide::plus, shifted_band, EdgeOptions{});
  REQUIRE(e.multiplicity() == 2);
  CHECK(e.extremizers[0].k == doctest::Approx(-e.extremizers[1].k).epsilon(1e-9));
  CHECK(std::abs(e.extremizers[1].k) == doctest::Approx(0.2).epsilon(1e-7));
  const double mu = 4.0 * pi * pi * std::pow(std::sin(0.4 * pi), 2);
  CHECK(e.extremizers[0].mu == doctest::Approx(mu).epsilon(1e-5));
  CHECK(e.extremizers[1].mu == doctest::Approx(mu).epsilon(1e-5));
  CHECK(e.edge_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("straight tube band is lambda_1 + k^2 with unit mass")
{
  const auto ops = assemble_transverse(build_grid(CrossSectionShape::rectangle(1.0, 1.0), 0.1));
  SweepOptions so;
  so.ell_max = 1;
  const auto beta = TwistProfile::constant(0.0);
  const BandChart chart = sweep_bands(ops, beta, 2, 16, so);
  const double l1 = transverse_eigenvalues(ops, 1)[0];
  for (int i = 0; i < chart.sample_count(); ++i) {
    const double k = chart.k_samples[i];
    CHECK(chart.bands(i, 0) == doctest::Approx(l1 + k * k).epsilon(1e-10));
  }
  const GapList gl = find_gaps(chart);
  EdgeOptions eo;
  eo.ell_max = 1;
  const EdgeReport e = analyze_edge(chart, gl.gaps[0], EdgeSide::plus, ops, beta, eo);
  REQUIRE(e.regular());
  CHECK(e.extremizers[0].mu == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("flat band edges are reported as degenerate")
{
  auto flat = [](double, int count) {
    Eigen::VectorXd v(count);
    for (int i = 0; i < count; ++i) {
      v[i] = 1.0 + 4.0 * i;
    }
    return v;
  };
  const BandChart chart = chart_from_evaluator(flat, 2, 16);
  const GapList gl = find_gaps(chart);
  const EdgeReport e = analyze_edge(chart, gl.gaps[0], EdgeSide::plus, flat, EdgeOptions{});
  CHECK_FALSE(e.regular());
}
