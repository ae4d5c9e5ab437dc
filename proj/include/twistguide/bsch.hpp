#pragma once

#include "twistguide/effective.hpp"

#include <Eigen/Core>

#include <map>
#include <vector>

namespace twg {

/// Fourier transform (2 pi)^{-1/2} int e^{-ixq} eps(x) dx. Closed forms for
/// the power, Gaussian and square-well families; adaptive quadrature for the
/// compact bump. Power profiles need alpha > 1 at q = 0.
double decay_transform(const DecayProfile& eps, double q);

/// Discretized a(k) F(V) F^* a(k'), a(k) = (mu k^2 + lambda)^{-1/2}, for one
/// channel V = coupling * eta * eps on the grid k_i = i dk, |k_i| <= K.
struct BSOperator
{
  double lambda = 0.0;
  double mu = 1.0;
  double K = 0.0;
  double dk = 0.0;
  std::vector<double> k_grid;
  Eigen::MatrixXcd matrix;

  int dimension() const { return static_cast<int>(k_grid.size()); }
};

/// Transform of V = coupling * eta * eps on the lattice q = m dk (cached).
class PotentialTransform
{
public:
  PotentialTransform(const Channel& channel, const DecayProfile& eps, double dk);
  /// value at q = m dk
  cplx at(long m);
  double dk() const { return dk_; }

private:
  double eps_hat(long m);

  Channel channel_;
  DecayProfile eps_;
  double dk_;
  long per_unit_ = 0; // 1 / dk when eta is attached
  std::map<long, double> eps_cache_;
};

/// Assembles the Nystrom matrix. With a periodic eta, 1/dk must be an
/// integer so that the sidebands q - l stay on the lattice.
BSOperator assemble_bs(const Channel& channel, const DecayProfile& eps, double lambda, double K, double dk);

/// Number of eigenvalues above s.
long bs_count(const BSOperator& bs, double s);
Eigen::VectorXd bs_eigenvalues(const BSOperator& bs);

struct BSCountResult
{
  long count = 0;
  bool converged = false;
  double K = 0.0;
  double dk = 0.0;
  int dimension = 0;
  std::vector<long> history;
};

struct BSOptions
{
  double cutoff_factor = 10.0; // K >= cutoff_factor sqrt(sup |V| / mu)
  double step_factor = 5.0;    // dk <= sqrt(lambda / mu) / step_factor
  int max_dimension = 4000;
  int max_refinements = 3;
};

/// Count at the threshold s = 1 on a grid chosen from the preconditions,
/// refined by (1.5 K, dk / 1.5) until two successive counts agree.
BSCountResult bs_count_converged(const Channel& channel, const DecayProfile& eps, double lambda,
                                 const BSOptions& options = {});

struct DecayRatioCheck
{
  double sup_coarse = 0.0; // sup_{|k| >= kappa1} |d^{n-1} eps_hat|
  double sup_fine = 0.0;   // sup_{|k| >= kappa2}
  double ratio = 0.0;
  double bound = 0.0;      // (kappa1 / kappa2)^{2n - 1}
  bool consistent = false;
};

/// Ratio test for sup_{|k| >= kappa} |eps_hat^{(n-1)}(k)| <= C kappa^{1 - 2n}.
DecayRatioCheck transform_decay_check(const DecayProfile& eps, int n = 4, double kappa1 = 0.5, double kappa2 = 0.25);

/// Text table of the cached q-lattice transform.
std::string dump_transform(PotentialTransform& transform, long m_max);

} // namespace twg
