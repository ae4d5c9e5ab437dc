#include "twistguide/error.hpp"
#include "twistguide/geometry.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

using namespace twg;

constexpr double pi = std::numbers::pi;

TEST_CASE("unit square Dirichlet eigenvalue converges at second order")
{
  const double exact = 2.0 * pi * pi;
  double previous = 0.0;
  for (double h : {0.1, 0.05, 0.025}) {
    const auto ops = assemble_transverse(build_grid(CrossSectionShape::rectangle(1.0, 1.0), h));
    const double err = std::abs(transverse_eigenvalues(ops, 1)[0] - exact);
    CHECK(err <= 1.0 * h * h * exact);
    if (previous > 0.0) {
      CHECK(previous / err == doctest::Approx(4.0).epsilon(0.05));
    }
    previous = err;
  }
}

TEST_CASE("rectangle spectrum matches the five-point formula")
{
  // interior lattice of a 1 x 0.5 rectangle with h = 1/10: 9 x 4 nodes
  const double h = 0.1;
  const auto ops = assemble_transverse(build_grid(CrossSectionShape::rectangle(1.0, 0.5), h));
  REQUIRE(ops.size() == 36);
  std::vector<double> expected;
  for (int p = 1; p <= 9; ++p) {
    for (int q = 1; q <= 4; ++q) {
      expected.push_back(4.0 / (h * h) * (std::pow(std::sin(p * pi / 20.0), 2) + std::pow(std::sin(q * pi / 10.0), 2)));
    }
  }
  std::sort(expected.begin(), expected.end());
  const auto got = transverse_eigenvalues(ops, 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("laplacian is symmetric and positive definite")
{
  const auto ops = assemble_transverse(build_grid(CrossSectionShape::ellipse(1.0, 0.6), 0.1));
  const Eigen::MatrixXd L(ops.laplacian_t);
  CHECK((L - L.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("angular derivative annihilates radial functions on a centred polar disk")
{
  const auto disk = CrossSectionShape::ellipse(1.0, 1.0);
  REQUIRE(disk.is_centered_disk());
  const auto ops = assemble_transverse(build_polar_grid(disk, 10, 32));
  Eigen::VectorXd f(ops.size());
  for (int i = 0; i < ops.size(); ++i) {
    const double r = ops.grid.nodes[i].norm();
    f[i] = std::sqrt(ops.grid.weights[i]) * std::cos(r) * (1.0 - r * r);
  }
  CHECK((ops.dphi * f).cwiseAbs().maxCoeff() <= 1e-12 * f.cwiseAbs().maxCoeff());
}

TEST_CASE("angular derivative of x1 is -x2 away from the boundary")
{
  const double h = 0.05;
  const Vec2 centre(0.3, 0.1);
  const auto ops = assemble_transverse(build_grid(CrossSectionShape::rectangle(1.0, 1.0, centre), h));
  Eigen::VectorXd f(ops.size());
  for (int i = 0; i < ops.size(); ++i) {
    f[i] = std::sqrt(ops.grid.weights[i]) * ops.grid.nodes[i].x();
  }
  const Eigen::VectorXd g = ops.dphi * f;
  for (int i = 0; i < ops.size(); ++i) {
    const Vec2 x = ops.grid.nodes[i];
    if ((x - centre).cwiseAbs().maxCoeff() > 0.5 - 2.5 * h) {
      continue;
    }
    CHECK(g[i] / std::sqrt(ops.grid.weights[i]) == doctest::Approx(-x.y()).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("shape validation")
{
  CHECK_THROWS_AS(CrossSectionShape::rectangle(0.0, 1.0).validate(), DegenerateShape);
  CHECK_THROWS_AS(
    CrossSectionShape::polygon({Vec2(0, 0), Vec2(1, 1), Vec2(1, 0), Vec2(0, 1)}).validate(), DegenerateShape);
  CHECK_THROWS_AS(build_grid(CrossSectionShape::rectangle(0.2, 0.2), 0.1), EmptyGrid);
  const auto tri = CrossSectionShape::polygon({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
  CHECK(tri.contains(Vec2(0.2, 0.2)));
  CHECK_FALSE(tri.contains(Vec2(0.6, 0.6)));
}
