#include "twistguide/error.hpp"
#include "twistguide/linalg.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>

using namespace twg;

namespace {

long dense_negative(const Eigen::MatrixXd& A)
{
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues();
  return (ev.array() < 0.0).count();
}

} // namespace

TEST_CASE("tridiagonal count matches dense diagonalization")
{
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const int n = 5 + t * 7;
    std::vector<double> d(n), o(n - 1);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      d[i] = 2.0 + N(rng) - 0.3 * t / 10.0;
      A(i, i) = d[i];
    }
    for (int i = 0; i + 1 < n; ++i) {
      o[i] = N(rng);
      A(i, i + 1) = A(i + 1, i) = o[i];
    }
    CHECK(tridiagonal_negative_count(d, o) == dense_negative(A));
  }
}

TEST_CASE("tridiagonal count handles a zero pivot")
{
  // [[0, 1], [1, 0]] has eigenvalues -1 and 1
  std::vector<double> d{0.0, 0.0}, o{1.0};
  CHECK(tridiagonal_negative_count(d, o) == 1);
  std::vector<double> single{-3.0}, none;
  CHECK(tridiagonal_negative_count(single, none) == 1);
}

TEST_CASE("sparse inertia matches dense diagonalization")
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const int n = 30 + 5 * t;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      A(i, i) = 4.0 * U(rng);
      for (int j : {i + 1, i + 3, i + 7}) {
        if (j < n) {
          A(i, j) = A(j, i) = U(rng);
        }
      }
    }
    const Inertia in = sparse_inertia(A.sparseView());
    CHECK(in.negative == dense_negative(A));
    CHECK(in.negative + in.zero + in.positive == n);
  }
}

TEST_CASE("Krylov eigensolver agrees with the dense solver")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = 300;
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, cplx(4.0 + 0.01 * i, 0.0));
    if (i + 1 < n) {
      const cplx z(U(rng), U(rng));
      trip.emplace_back(i, i + 1, z);
      trip.emplace_back(i + 1, i, std::conj(z));
    }
  }
  SparseMatrixC H(n, n);
  H.setFromTriplets(trip.begin(), trip.end());
  EigenSolverOptions dense;
  dense.dense_threshold = n;
  EigenSolverOptions krylov;
  krylov.dense_threshold = 10;
  krylov.tol = 1e-11;
  const HermitianEigen a = lowest_eigenpairs(H, 5, dense);
  const HermitianEigen b = lowest_eigenpairs(H, 5, krylov);
  CHECK(b.method != a.method);
  for (int i = 0; i < 5; ++i) {
    CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-9));
    CHECK(b.residuals[i] <= 1e-8 * std::abs(b.values[i]));
  }
}

TEST_CASE("eigenvalues shift with a multiple of the identity")
{
  const int n = 40;
  SparseMatrixC H(n, n), I(n, n);
  std::vector<Eigen::Triplet<cplx>> trip;
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, 2.0);
    if (i + 1 < n) {
      trip.emplace_back(i, i + 1, cplx(0.0, -1.0));
      trip.emplace_back(i + 1, i, cplx(0.0, 1.0));
    }
  }
  H.setFromTriplets(trip.begin(), trip.end());
  I.setIdentity();
  const SparseMatrixC shifted = H + cplx(5.0) * I;
  const HermitianEigen a = lowest_eigenpairs(H, 4);
  const HermitianEigen b = lowest_eigenpairs(shifted, 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(b.values[i] == doctest::Approx(a.values[i] + 5.0).epsilon(1e-12));
  }
}

TEST_CASE("phase gauge makes the largest entry real and positive")
{
  Eigen::VectorXcd v(3);
  v << cplx(0.1, 0.2), cplx(-0.5, 0.5), cplx(0.0, -0.3);
  fix_phase(v);
  CHECK(std::abs(v[1].imag()) < 1e-15);
  CHECK(v[1].real() > 0.0);
  CHECK(v.norm() == doctest::Approx(std::sqrt(0.05 + 0.5 + 0.09)));
}
