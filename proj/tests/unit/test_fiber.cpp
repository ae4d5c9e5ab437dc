#include "twistguide/error.hpp"
#include "twistguide/fiber.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace twg;

constexpr double pi = std::numbers::pi;

namespace {

TransverseOperators small_rectangle()
{
  return assemble_transverse(build_grid(CrossSectionShape::rectangle(1.0, 0.6, Vec2(0.1, 0.05)), 0.1));
}

} // namespace

TEST_CASE("twist profile evaluation and symmetry checks")
{
  const auto b = TwistProfile::trigonometric(0.5, {0.3}, {0.2});
  CHECK(b.order() == 1);
  CHECK(b(1.1) == doctest::Approx(0.5 + 0.3 * std::cos(1.1) + 0.2 * std::sin(1.1)));
  CHECK(b.derivative(1.1, 1) == doctest::Approx(-0.3 * std::sin(1.1) + 0.2 * std::cos(1.1)));
  CHECK(TwistProfile::constant(2.0).is_constant());
  CHECK_FALSE(b.is_constant());
  CHECK_THROWS(TwistProfile({cplx(1.0, 0.0), cplx(0.0, 0.0)}));
  CHECK_THROWS(TwistProfile({cplx(1.0, 1.0), cplx(0.0, 0.0), cplx(1.0, 1.0)}));
}

TEST_CASE("untwisted fiber spectrum is separable")
{
  const auto ops = small_rectangle();
  const auto lt = transverse_eigenvalues(ops, 4);
  const double k = 0.3;
  const int ell_max = 2;
  std::vector<double> expected;
  for (double l : lt) {
    for (int m = -ell_max; m <= ell_max; ++m) {
      expected.push_back(l + (m + k) * (m + k));
    }
  }
  std::sort(expected.begin(), expected.end());
  const Eigen::VectorXd got = fiber_eigenvalues(ops, TwistProfile::constant(0.0), k, ell_max, 6, 1e-12);
  for (int i = 0; i < 6; ++i) {
    CHECK(got[i] == doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-10));
  }
}

TEST_CASE("fiber matrix is Hermitian")
{
  const auto ops = small_rectangle();
  const FiberMatrix fm = assemble_fiber(ops, TwistProfile::trigonometric(0.7, {0.4}, {0.1}), 0.23, 3);
  const Eigen::MatrixXcd H(fm.matrix);
  CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());
  CHECK(fm.dimension() == 7 * ops.size());
}

TEST_CASE("band values converge in the mode cutoff")
{
  const auto ops = small_rectangle();
  const auto beta = TwistProfile::trigonometric(0.6, {0.3});
  const Eigen::VectorXd e6 = fiber_eigenvalues(ops, beta, 0.2, 6, 3, 1e-12);
  const Eigen::VectorXd e8 = fiber_eigenvalues(ops, beta, 0.2, 8, 3, 1e-12);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(e6[i] - e8[i]) <= 1e-6 * e8[i]);
    CHECK(e8[i] <= e6[i] + 1e-12 * e8[i]);
  }
}

TEST_CASE("bands are periodic and even in k")
{
  const auto ops = small_rectangle();
  const auto beta = TwistProfile::trigonometric(0.6, {0.3}, {0.2});
  const Eigen::VectorXd a = fiber_eigenvalues(ops, beta, 0.3, 5, 3, 1e-12);
  const Eigen::VectorXd b = fiber_eigenvalues(ops, beta, -0.3, 5, 3, 1e-12);
  for (int i = 0; i < 3; ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
  }
}

TEST_CASE("eigenvectors carry the deterministic phase gauge")
{
  const auto ops = small_rectangle();
  const FiberMatrix fm = assemble_fiber(ops, TwistProfile::constant(0.8), 0.1, 2);
  const EigenPairs p = lowest_eigenpairs(fm, 2, 1e-12);
  for (int j = 0; j < 2; ++j) {
    Eigen::Index idx = 0;
    p.vectors.col(j).cwiseAbs().maxCoeff(&idx);
    CHECK(std::abs(p.vectors(idx, j).imag()) <= 1e-14);
    CHECK(p.vectors(idx, j).real() > 0.0);
  }
}
