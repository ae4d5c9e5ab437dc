#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <span>
#include <string>

namespace twg {

using cplx = std::complex<double>;
using SparseMatrixC = Eigen::SparseMatrix<cplx>;

struct Inertia
{
  long negative = 0;
  long zero = 0;
  long positive = 0;
};

/// Inertia of a real symmetric sparse matrix from its LDL^T factorization
/// (Sylvester's law). Throws FactorizationBreakdown if the factorization
/// fails or produces non-finite pivots.
Inertia sparse_inertia(const Eigen::SparseMatrix<double>& symmetric);

/// Number of negative pivots of the symmetric tridiagonal matrix with the
/// given diagonal and off-diagonal (off.size() == diag.size() - 1).
long tridiagonal_negative_count(std::span<const double> diag, std::span<const double> off);

struct EigenSolverOptions
{
  double tol = 1e-9;          // relative residual |H u - E u| <= tol * |E|
  int dense_threshold = 800;  // dense solve at or below this dimension
  int block_size = 6;         // Krylov block width (>= expected multiplicity)
  int max_basis = 360;        // basis size that triggers a thick restart
  int max_restarts = 40;
  std::uint64_t seed = 0x7a11eULL;
};

struct HermitianEigen
{
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // orthonormal columns
  Eigen::VectorXd residuals; // |H u - E u| per pair
  int iterations = 0;
  std::string method;
};

/// Lowest `count` eigenpairs of a Hermitian positive definite sparse matrix.
/// Small problems are solved densely; larger ones by block Krylov iteration
/// on H^{-1} with full reorthogonalization and thick restarts.
HermitianEigen lowest_eigenpairs(const SparseMatrixC& H, int count, const EigenSolverOptions& options = {});

/// Rotate the vector so its largest-magnitude entry is real and positive.
/// Ties are broken towards the lowest index.
void fix_phase(Eigen::Ref<Eigen::VectorXcd> v);

} // namespace twg
