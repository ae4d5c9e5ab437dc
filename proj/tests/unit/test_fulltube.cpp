#include "twistguide/error.hpp"
#include "twistguide/fulltube.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace twg;

constexpr double pi = std::numbers::pi;

namespace {

TransverseOperators rect(double w, double h)
{
  return assemble_transverse(build_grid(CrossSectionShape::rectangle(w, 1.0), h));
}

Eigen::VectorXd dense_eigenvalues(const Eigen::SparseMatrix<double>& H)
{
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Eigen::MatrixXd(H), Eigen::EigenvaluesOnly).eigenvalues();
}

} // namespace

TEST_CASE("untwisted tube spectrum is separable")
{
  const auto ops = rect(1.0, 0.25);
  const double X = 2.0 * pi, step = pi / 4.0;
  const TubeOperator tube = assemble_tube(ops, TwistProfile::constant(0.0), std::nullopt, X, step);
  const int cells = static_cast<int>(std::lround(2.0 * X / step));
  REQUIRE(tube.dimension() == (cells - 1) * ops.size());
  const auto lt = transverse_eigenvalues(ops, ops.size());
  std::vector<double> expected;
  for (double l : lt) {
    for (int n = 1; n < cells; ++n) {
      expected.push_back(l + 4.0 / (step * step) * std::pow(std::sin(n * pi / (2.0 * cells)), 2));
    }
  }
  std::sort(expected.begin(), expected.end());
  const Eigen::VectorXd ev = dense_eigenvalues(tube.matrix);
  for (int i = 0; i < 12; ++i) {
    CHECK(ev[i] == doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-10));
  }
}

TEST_CASE("tube matrix is symmetric and window counts are additive")
{
  const auto ops = rect(1.2, 0.25);
  const TubeOperator tube = assemble_tube(ops, TwistProfile::trigonometric(0.8, {0.3}),
                                          DecayProfile::gaussian(0.5, 1.0), 2.0 * pi, pi / 4.0);
  const Eigen::MatrixXd H(tube.matrix);
  CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd ev = dense_eigenvalues(tube.matrix);
  const double a = 0.5 * (ev[3] + ev[4]), b = 0.5 * (ev[10] + ev[11]), c = 0.5 * (ev[20] + ev[21]);
  const long ab = gap_window_count(tube, a, b).count;
  const long bc = gap_window_count(tube, b, c).count;
  CHECK(ab == 7);
  CHECK(bc == 10);
  CHECK(gap_window_count(tube, a, c).count == ab + bc);
  CHECK(gap_window_count(tube, -std::numeric_limits<double>::infinity(), b).count == 11);
}

TEST_CASE("reflection with the transverse mirror commutes with a symmetric tube")
{
  const auto ops = rect(1.5, 0.25);
  const std::vector<int> mirror = transverse_mirror(ops);
  const TubeOperator tube = assemble_tube(ops, TwistProfile::trigonometric(0.6, {0.4}),
                                          DecayProfile::gaussian(0.3, 2.0), 2.0 * pi, pi / 4.0);
  const std::vector<int> p = tube_reflection(tube, mirror);
  const double scale = Eigen::MatrixXd(tube.matrix).cwiseAbs().maxCoeff();
  CHECK(commutator_defect(tube.matrix, p) <= 1e-13 * scale);
}

TEST_CASE("resolution and length preconditions")
{
  const auto ops = rect(1.0, 0.25);
  CHECK_THROWS_AS(assemble_tube(ops, TwistProfile::constant(1.0), std::nullopt, 2.0 * pi, 2.0 * pi / 4.0),
                  ResolutionTooCoarse);
  CHECK_THROWS_AS(assemble_tube(ops, TwistProfile::constant(1.0), std::nullopt, 5.0, pi / 4.0), std::invalid_argument);
}

TEST_CASE("Bloch cell reproduces the separable untwisted bands")
{
  const auto ops = rect(1.0, 0.25);
  const double step = pi / 8.0;
  const double k = 0.25;
  const SparseMatrixC H = assemble_bloch_cell(ops, TwistProfile::constant(0.0), k, step);
  const Eigen::MatrixXcd Hd(H);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(Hd, Eigen::EigenvaluesOnly).eigenvalues();
  const double l1 = transverse_eigenvalues(ops, 1)[0];
  const int n = 16;
  // discrete dispersion 4/step^2 sin^2((m + k) step / 2) on one period
  double lowest = 1e300;
  for (int m = -n; m <= n; ++m) {
    lowest = std::min(lowest, l1 + 4.0 / (step * step) * std::pow(std::sin((m + k) * step / 2.0), 2));
  }
  CHECK(ev[0] == doctest::Approx(lowest).epsilon(1e-10));
}

TEST_CASE("periodic background has no states below the bottom edge")
{
  const auto ops = rect(2.0, 0.25);
  const auto beta = TwistProfile::constant(1.0);
  const double step = pi / 8.0;
  const BandChart chart = discrete_reference_chart(ops, beta, step, 2, 16);
  const GapList gl = find_gaps(chart);
  const double edge = discrete_edge(ops, beta, step, chart, gl.gaps[0], EdgeSide::plus);
  const TubeOperator tube = assemble_tube(ops, beta, std::nullopt, 2.0 * pi, step);
  CHECK(gap_window_count(tube, -std::numeric_limits<double>::infinity(), edge - 1e-9).count == 0);
  const TubeOperator bumped = assemble_tube(ops, beta, DecayProfile::gaussian(1.0, 3.0), 2.0 * pi, step);
  CHECK(bumped.dimension() == tube.dimension());
}
