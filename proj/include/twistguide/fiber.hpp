#pragma once

#include "twistguide/geometry.hpp"
#include "twistguide/linalg.hpp"

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace twg {

/// Real 2*pi-periodic twist rate beta(x3) = sum_{|m|<=M} c_m e^{i m x3}.
/// Coefficients must satisfy c_{-m} = conj(c_m).
class TwistProfile
{
public:
  TwistProfile() : coeffs_{cplx(0.0)} {}
  /// `coeffs[m + M]` is c_m for m = -M..M; size must be odd.
  explicit TwistProfile(std::vector<cplx> coeffs);

  static TwistProfile constant(double value);
  /// beta = mean + sum_m (a_m cos(m x) + b_m sin(m x)), m = 1..size
  static TwistProfile trigonometric(double mean, const std::vector<double>& cosines, const std::vector<double>& sines = {});

  int order() const { return static_cast<int>(coeffs_.size() / 2); }
  cplx coefficient(int m) const;
  const std::vector<cplx>& coefficients() const { return coeffs_; }
  bool is_constant() const;

  double operator()(double x3) const { return derivative(x3, 0); }
  double derivative(double x3, int order) const;
  double max_abs() const;

private:
  std::vector<cplx> coeffs_;
};

/// Bloch fiber h_beta(k) on omega x T in the block basis
/// (longitudinal mode l = -ell_max..ell_max) x (transverse node).
struct FiberMatrix
{
  double k = 0.0;
  int ell_max = 0;
  int n_omega = 0;
  SparseMatrixC matrix;

  int dimension() const { return static_cast<int>(matrix.rows()); }
  int block_offset(int ell) const { return (ell + ell_max) * n_omega; }
};

/// Assembles -Delta_t (x) I + G^H G, where G = beta dphi + d3 + ik maps the
/// truncated mode space into modes |p| <= ell_max + M so that the quadratic
/// form is represented exactly on the trial space.
FiberMatrix assemble_fiber(const TransverseOperators& ops, const TwistProfile& beta, double k, int ell_max);

struct EigenPairs
{
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // orthonormal, phase-fixed
  Eigen::VectorXd residuals;
  std::string method;
};

EigenPairs lowest_eigenpairs(const FiberMatrix& fm, int count, double tol, const EigenSolverOptions& base = {});

/// Convenience: lowest `count` band values at quasimomentum k.
Eigen::VectorXd fiber_eigenvalues(const TransverseOperators& ops, const TwistProfile& beta, double k, int ell_max,
                                  int count, double tol, const EigenSolverOptions& base = {});

/// Triplet text dump of the fiber matrix.
std::string dump_fiber(const FiberMatrix& fm);

} // namespace twg
