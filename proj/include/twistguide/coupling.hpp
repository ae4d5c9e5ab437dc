#pragma once

#include "twistguide/fiber.hpp"

#include <Eigen/Core>

#include <vector>

namespace twg {

/// Normalized fiber eigenfunction at an edge extremizer, stored in the
/// block basis e^{i l x3} / sqrt(2 pi) (x) weight-normalized nodes, so that
/// the coefficient 2-norm equals the L2(omega x T) norm.
struct EdgeEigenfunction
{
  double k_star = 0.0;
  int band_index = 0;
  int ell_max = 0;
  int n_omega = 0;
  double eigenvalue = 0.0;
  double residual = 0.0;
  Eigen::VectorXcd coefficients;

  auto block(int ell) const { return coefficients.segment((ell + ell_max) * n_omega, n_omega); }
  /// Integral of |psi|^2 over omega x T by trapezoid quadrature in x3.
  double norm_squared(int x3_points = 0) const;
  /// psi(x_t, x3) at every node (function values, not weighted).
  Eigen::VectorXcd evaluate(const TransverseOperators& ops, double x3) const;
  /// Largest |coefficient| outside the l = 0 block.
  double off_zero_mode_magnitude() const;
};

EdgeEigenfunction edge_eigenfunction(const TransverseOperators& ops, const TwistProfile& beta, double k_star,
                                     int band_index, int ell_max, double tol, const EigenSolverOptions& solver = {});

/// Periodic coupling function eta(x3) on a uniform grid of [0, 2 pi).
struct CouplingFunction
{
  std::vector<double> x3;
  std::vector<double> samples;
  /// Fourier coefficients eta_l = (2 pi)^{-1/2} int eta e^{-i l x} dx for
  /// l = -degree..degree (index l + degree).
  std::vector<cplx> fourier;
  int degree = 0;
  double mean = 0.0;
  int twist_order = 0; // M of the twist profile used

  cplx coefficient(int l) const;
  double max_abs() const;
};

/// eta(x3) = 2 Re int_omega conj(dphi psi) (beta dphi + d3 + i k*) psi dx_t,
/// sampled on 4 ell_max + 2 M + 1 points (exact for the represented degree).
CouplingFunction compute_eta(const EdgeEigenfunction& psi, const TwistProfile& beta, const TransverseOperators& ops);

struct L1Report
{
  double l1 = 0.0;            // sum_l |eta_l|
  double tail_fraction = 0.0; // share of the sum carried by |l| > M
};

L1Report eta_l1_report(const CouplingFunction& cf);

/// Builds a coupling function from samples on a uniform grid of [0, 2 pi)
/// (used for synthetic eta and by tests).
CouplingFunction coupling_from_samples(std::vector<double> samples, int twist_order = 0);

/// Diagnostic norm of the off-diagonal couplings between two extremizers:
/// sup over x3 of |int_omega conj(dphi psi_a) (beta dphi + d3 + i k_b) psi_b|.
double cross_coupling_norm(const EdgeEigenfunction& a, const EdgeEigenfunction& b, const TwistProfile& beta,
                           const TransverseOperators& ops);

} // namespace twg
