#include "twistguide/coupling.hpp"

#include "twistguide/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace twg {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
const double inv_sqrt_two_pi = 1.0 / std::sqrt(two_pi);

std::vector<double> uniform_x3(int n)
{
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    x[static_cast<std::size_t>(j)] = two_pi * j / n;
  }
  return x;
}

// sum_l blocks[l] e^{i l x} / sqrt(2 pi), blocks indexed l = -L..L
Eigen::VectorXcd synthesize(const std::vector<Eigen::VectorXcd>& blocks, double x)
{
  const int L = static_cast<int>(blocks.size() / 2);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(blocks.front().size());
  for (int l = -L; l <= L; ++l) {
    out += blocks[static_cast<std::size_t>(l + L)] * (std::polar(inv_sqrt_two_pi, l * x));
  }
  return out;
}

std::vector<Eigen::VectorXcd> dphi_blocks(const EdgeEigenfunction& psi, const TransverseOperators& ops)
{
  std::vector<Eigen::VectorXcd> out;
  for (int l = -psi.ell_max; l <= psi.ell_max; ++l) {
    out.emplace_back(ops.dphi.cast<cplx>() * psi.block(l));
  }
  return out;
}

// modes of (beta dphi + d3 + i k) psi_b, p = -(ell_max + M)..(ell_max + M)
std::vector<Eigen::VectorXcd> gradient_blocks(const EdgeEigenfunction& psi, double k,
                                              const std::vector<Eigen::VectorXcd>& dpsi, const TwistProfile& beta)
{
  const int M = beta.order();
  const int L = psi.ell_max;
  const int P = L + M;
  std::vector<Eigen::VectorXcd> out(static_cast<std::size_t>(2 * P + 1), Eigen::VectorXcd::Zero(psi.n_omega));
  for (int l = -L; l <= L; ++l) {
    out[static_cast<std::size_t>(l + P)] += cplx(0.0, l + k) * psi.block(l);
    for (int m = -M; m <= M; ++m) {
      const cplx bm = beta.coefficient(m);
      if (bm != cplx(0.0)) {
        out[static_cast<std::size_t>(l + m + P)] += bm * dpsi[static_cast<std::size_t>(l + L)];
      }
    }
  }
  return out;
}

void check_compatible(const EdgeEigenfunction& psi, const TransverseOperators& ops)
{
  if (psi.n_omega != ops.size() || psi.coefficients.size() != (2 * psi.ell_max + 1) * psi.n_omega) {
    throw std::invalid_argument("eigenfunction does not match the transverse grid");
  }
}

} // namespace

double EdgeEigenfunction::norm_squared(int x3_points) const
{
  const int n = x3_points > 0 ? x3_points : 4 * ell_max + 1;
  std::vector<Eigen::VectorXcd> blocks;
  for (int l = -ell_max; l <= ell_max; ++l) {
    blocks.emplace_back(block(l));
  }
  double sum = 0.0;
  for (double x : uniform_x3(n)) {
    sum += synthesize(blocks, x).squaredNorm();
  }
  return sum * two_pi / n;
}

Eigen::VectorXcd EdgeEigenfunction::evaluate(const TransverseOperators& ops, double x3) const
{
  check_compatible(*this, ops);
  std::vector<Eigen::VectorXcd> blocks;
  for (int l = -ell_max; l <= ell_max; ++l) {
    blocks.emplace_back(block(l));
  }
  Eigen::VectorXcd values = synthesize(blocks, x3);
  for (int i = 0; i < n_omega; ++i) {
    values[i] /= std::sqrt(ops.grid.weights[static_cast<std::size_t>(i)]);
  }
  return values;
}

double EdgeEigenfunction::off_zero_mode_magnitude() const
{
  double worst = 0.0;
  for (int l = -ell_max; l <= ell_max; ++l) {
    if (l != 0) {
      worst = std::max(worst, block(l).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

EdgeEigenfunction edge_eigenfunction(const TransverseOperators& ops, const TwistProfile& beta, double k_star,
                                     int band_index, int ell_max, double tol, const EigenSolverOptions& solver)
{
  if (band_index < 0) {
    throw std::invalid_argument("band index must be non-negative");
  }
  const FiberMatrix fm = assemble_fiber(ops, beta, k_star, ell_max);
  const int count = std::min(band_index + 2, fm.dimension());
  const EigenPairs pairs = lowest_eigenpairs(fm, count, tol, solver);
  const double e = pairs.values[band_index];
  double gap = std::numeric_limits<double>::infinity();
  if (band_index + 1 < count) {
    gap = std::min(gap, pairs.values[band_index + 1] - e);
  }
  if (band_index > 0) {
    gap = std::min(gap, e - pairs.values[band_index - 1]);
  }
  if (gap < 10.0 * tol * std::max(1.0, std::abs(e))) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "band " << band_index + 1 << " at k = " << k_star << " is separated from its neighbour by only " << gap;
    throw NearDegenerate(msg.str());
  }
  EdgeEigenfunction psi;
  psi.k_star = k_star;
  psi.band_index = band_index;
  psi.ell_max = ell_max;
  psi.n_omega = ops.size();
  psi.eigenvalue = e;
  psi.coefficients = pairs.vectors.col(band_index);
  psi.coefficients.normalize();
  fix_phase(psi.coefficients);
  psi.residual = (fm.matrix * psi.coefficients - e * psi.coefficients).norm();
  return psi;
}

cplx CouplingFunction::coefficient(int l) const
{
  if (l < -degree || l > degree) {
    return cplx(0.0);
  }
  return fourier[static_cast<std::size_t>(l + degree)];
}

double CouplingFunction::max_abs() const
{
  double m = 0.0;
  for (double v : samples) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

CouplingFunction coupling_from_samples(std::vector<double> samples, int twist_order)
{
  const int n = static_cast<int>(samples.size());
  if (n < 1) {
    throw std::invalid_argument("coupling function needs at least one sample");
  }
  CouplingFunction cf;
  cf.x3 = uniform_x3(n);
  cf.samples = std::move(samples);
  cf.twist_order = twist_order;
  cf.degree = (n - 1) / 2;
  double sum = 0.0;
  for (double v : cf.samples) {
    sum += v;
  }
  cf.mean = sum / n;
  // eta_l = (2 pi)^{-1/2} * (2 pi / n) sum_j eta(x_j) e^{-i l x_j}
  const double scale = std::sqrt(two_pi) / n;
  for (int l = -cf.degree; l <= cf.degree; ++l) {
    cplx acc(0.0);
    for (int j = 0; j < n; ++j) {
      acc += cf.samples[static_cast<std::size_t>(j)] * std::polar(1.0, -l * cf.x3[static_cast<std::size_t>(j)]);
    }
    cf.fourier.push_back(scale * acc);
  }
  return cf;
}

CouplingFunction compute_eta(const EdgeEigenfunction& psi, const TwistProfile& beta, const TransverseOperators& ops)
{
  check_compatible(psi, ops);
  const int M = beta.order();
  const std::vector<Eigen::VectorXcd> dpsi = dphi_blocks(psi, ops);
  const std::vector<Eigen::VectorXcd> grad = gradient_blocks(psi, psi.k_star, dpsi, beta);
  // the integrand has degree 2 ell_max + M in x3
  const int n = 4 * psi.ell_max + 2 * M + 1;
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (double x : uniform_x3(n)) {
    const Eigen::VectorXcd a = synthesize(dpsi, x);
    const Eigen::VectorXcd b = synthesize(grad, x);
    samples.push_back(2.0 * a.dot(b).real());
  }
  return coupling_from_samples(std::move(samples), M);
}

L1Report eta_l1_report(const CouplingFunction& cf)
{
  L1Report r;
  double tail = 0.0;
  for (int l = -cf.degree; l <= cf.degree; ++l) {
    const double a = std::abs(cf.coefficient(l));
    r.l1 += a;
    if (std::abs(l) > cf.twist_order) {
      tail += a;
    }
  }
  r.tail_fraction = r.l1 > 0.0 ? tail / r.l1 : 0.0;
  return r;
}

double cross_coupling_norm(const EdgeEigenfunction& a, const EdgeEigenfunction& b, const TwistProfile& beta,
                           const TransverseOperators& ops)
{
  check_compatible(a, ops);
  check_compatible(b, ops);
  if (a.ell_max != b.ell_max) {
    throw std::invalid_argument("eigenfunctions use different truncations");
  }
  const std::vector<Eigen::VectorXcd> da = dphi_blocks(a, ops);
  const std::vector<Eigen::VectorXcd> db = dphi_blocks(b, ops);
  const std::vector<Eigen::VectorXcd> grad = gradient_blocks(b, b.k_star, db, beta);
  const int n = 4 * a.ell_max + 2 * beta.order() + 1;
  double worst = 0.0;
  for (double x : uniform_x3(n)) {
    worst = std::max(worst, std::abs(synthesize(da, x).dot(synthesize(grad, x))));
  }
  return worst;
}

} // namespace twg
