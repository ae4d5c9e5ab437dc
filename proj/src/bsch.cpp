#include "twistguide/bsch.hpp"

#include "twistguide/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>

namespace twg {

namespace {

constexpr double pi = std::numbers::pi;
const double inv_sqrt_two_pi = 1.0 / std::sqrt(2.0 * pi);

} // namespace

double decay_transform(const DecayProfile& eps, double q)
{
  const double c = eps.amplitude();
  const double aq = std::abs(q);
  switch (eps.family()) {
  case DecayFamily::power:
  case DecayFamily::signed_power: {
    const double alpha = eps.alpha();
    if (aq == 0.0) {
      if (alpha <= 1.0) {
        throw std::invalid_argument("transform of a power profile with alpha <= 1 is singular at q = 0");
      }
      return c * inv_sqrt_two_pi * std::sqrt(pi) * boost::math::tgamma(0.5 * (alpha - 1.0)) /
             boost::math::tgamma(0.5 * alpha);
    }
    const double nu = 0.5 * (alpha - 1.0);
    return c * inv_sqrt_two_pi * 2.0 * std::pow(0.5 * aq, nu) * std::sqrt(pi) / boost::math::tgamma(0.5 * alpha) *
           boost::math::cyl_bessel_k(std::abs(nu), aq);
  }
  case DecayFamily::power_with_limit: return c * inv_sqrt_two_pi * pi * std::exp(-aq);
  case DecayFamily::gaussian: {
    const double s = eps.width();
    return c * s * std::exp(-0.5 * s * s * q * q);
  }
  case DecayFamily::square_well: {
    const double a = eps.width();
    return aq == 0.0 ? c * inv_sqrt_two_pi * 2.0 * a : c * inv_sqrt_two_pi * 2.0 * std::sin(q * a) / q;
  }
  case DecayFamily::compact_bump: {
    const double R = eps.width();
    auto f = [&](double x) { return std::cos(q * x) * eps(x); };
    double error = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, R, 20, 1e-13, &error);
    return inv_sqrt_two_pi * 2.0 * v;
  }
  }
  return 0.0;
}

PotentialTransform::PotentialTransform(const Channel& channel, const DecayProfile& eps, double dk)
  : channel_(channel), eps_(eps), dk_(dk)
{
  if (!(dk > 0.0)) {
    throw std::invalid_argument("transform lattice step must be positive");
  }
  if (channel_.eta) {
    per_unit_ = std::lround(1.0 / dk);
    if (per_unit_ < 1 || std::abs(static_cast<double>(per_unit_) * dk - 1.0) > 1e-9) {
      throw GridTooCoarse("with a periodic eta, 1/dk must be an integer so that sidebands stay on the lattice");
    }
  }
}

double PotentialTransform::eps_hat(long m)
{
  // eps is even, so its transform is even and real
  const long key = std::abs(m);
  auto it = eps_cache_.find(key);
  if (it == eps_cache_.end()) {
    it = eps_cache_.emplace(key, decay_transform(eps_, static_cast<double>(key) * dk_)).first;
  }
  return it->second;
}

cplx PotentialTransform::at(long m)
{
  if (!channel_.eta) {
    return channel_.coupling * eps_hat(m);
  }
  const CouplingFunction& cf = *channel_.eta;
  cplx sum(0.0);
  for (int l = -cf.degree; l <= cf.degree; ++l) {
    const cplx el = cf.coefficient(l);
    if (el != cplx(0.0)) {
      sum += el * eps_hat(m - static_cast<long>(l) * per_unit_);
    }
  }
  return channel_.coupling * inv_sqrt_two_pi * sum;
}

BSOperator assemble_bs(const Channel& channel, const DecayProfile& eps, double lambda, double K, double dk)
{
  if (!(lambda > 0.0) || !(channel.mu > 0.0)) {
    throw std::invalid_argument("assemble_bs needs lambda > 0 and mu > 0");
  }
  const double supV = std::abs(channel.coupling) * channel.periodic_bound() * eps.sup_abs();
  if (K < 10.0 * std::sqrt(supV / channel.mu) * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "cutoff K = " << K << " is below 10 sqrt(sup V / mu) = " << 10.0 * std::sqrt(supV / channel.mu);
    throw GridTooCoarse(msg.str());
  }
  if (dk > std::sqrt(lambda / channel.mu) / 5.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "step dk = " << dk << " does not resolve the lambda scale sqrt(lambda/mu)/5 = "
        << std::sqrt(lambda / channel.mu) / 5.0;
    throw GridTooCoarse(msg.str());
  }
  PotentialTransform transform(channel, eps, dk);
  BSOperator bs;
  bs.lambda = lambda;
  bs.mu = channel.mu;
  bs.K = K;
  bs.dk = dk;
  const long N = static_cast<long>(std::floor(K / dk + 1e-9));
  const long n = 2 * N + 1;
  Eigen::VectorXd scale(n);
  for (long i = 0; i < n; ++i) {
    const double k = static_cast<double>(i - N) * dk;
    bs.k_grid.push_back(k);
    const double w = (i == 0 || i == n - 1) ? 0.5 * dk : dk;
    scale[i] = std::sqrt(w) / std::sqrt(channel.mu * k * k + lambda);
  }
  bs.matrix.resize(n, n);
  for (long j = 0; j < n; ++j) {
    for (long i = 0; i <= j; ++i) {
      const cplx v = inv_sqrt_two_pi * scale[i] * transform.at(i - j) * scale[j];
      bs.matrix(i, j) = v;
      bs.matrix(j, i) = std::conj(v);
    }
    bs.matrix(j, j) = cplx(bs.matrix(j, j).real(), 0.0);
  }
  return bs;
}

Eigen::VectorXd bs_eigenvalues(const BSOperator& bs)
{
  if (bs.matrix.size() == 0) {
    return {};
  }
  // an even potential has a real transform; imaginary parts at round-off level
  // come from the discrete Fourier table of eta
  const double scale = bs.matrix.cwiseAbs().maxCoeff();
  if (bs.matrix.imag().cwiseAbs().maxCoeff() <= 1e-13 * scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bs.matrix.real(), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bs.matrix, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

long bs_count(const BSOperator& bs, double s)
{
  const Eigen::VectorXd ev = bs_eigenvalues(bs);
  long count = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > s) {
      ++count;
    }
  }
  return count;
}

BSCountResult bs_count_converged(const Channel& channel, const DecayProfile& eps, double lambda,
                                 const BSOptions& options)
{
  const double supV = std::abs(channel.coupling) * channel.periodic_bound() * eps.sup_abs();
  double K = std::max(options.cutoff_factor * std::sqrt(supV / channel.mu), 1.0);
  double dk = std::sqrt(lambda / channel.mu) / options.step_factor;
  auto snap = [&](double step) {
    // keep 1/dk integral when sidebands must land on the lattice
    return channel.eta ? 1.0 / std::ceil(1.0 / step - 1e-9) : step;
  };
  dk = snap(dk);
  BSCountResult res;
  for (int r = 0; r <= options.max_refinements; ++r) {
    const long dim = 2 * static_cast<long>(std::floor(K / dk + 1e-9)) + 1;
    if (dim > options.max_dimension) {
      std::ostringstream msg;
      msg << "Birman-Schwinger grid would need dimension " << dim << " > " << options.max_dimension;
      throw GridTooCoarse(msg.str());
    }
    const BSOperator bs = assemble_bs(channel, eps, lambda, K, dk);
    res.count = bs_count(bs, 1.0);
    res.history.push_back(res.count);
    res.K = K;
    res.dk = dk;
    res.dimension = bs.dimension();
    if (r > 0 && res.history[res.history.size() - 2] == res.count) {
      res.converged = true;
      return res;
    }
    K *= 1.5;
    dk = snap(dk / 1.5);
  }
  return res;
}

DecayRatioCheck transform_decay_check(const DecayProfile& eps, int n, double kappa1, double kappa2)
{
  if (n < 1 || !(kappa2 > 0.0) || !(kappa1 > kappa2)) {
    throw std::invalid_argument("transform_decay_check needs n >= 1 and kappa1 > kappa2 > 0");
  }
  const int order = n - 1;
  const double delta = kappa2 / 20.0;
  auto derivative = [&](double k) {
    if (order == 0) {
      return decay_transform(eps, k);
    }
    double sum = 0.0;
    for (int j = 0; j <= order; ++j) {
      const double sign = j % 2 == 0 ? 1.0 : -1.0;
      sum += sign * boost::math::binomial_coefficient<double>(static_cast<unsigned>(order), static_cast<unsigned>(j)) *
             decay_transform(eps, k + (0.5 * order - j) * delta);
    }
    return sum / std::pow(delta, order);
  };
  auto sup_from = [&](double kappa) {
    double best = 0.0;
    // the transform is even, so |k| >= kappa reduces to k >= kappa
    for (int i = 0; i <= 400; ++i) {
      const double k = kappa * std::pow(200.0 / kappa, i / 400.0);
      best = std::max(best, std::abs(derivative(k + 0.5 * order * delta)));
    }
    return best;
  };
  DecayRatioCheck r;
  r.sup_coarse = sup_from(kappa1);
  r.sup_fine = sup_from(kappa2);
  r.ratio = r.sup_coarse > 0.0 ? r.sup_fine / r.sup_coarse : 0.0;
  r.bound = std::pow(kappa1 / kappa2, 2 * n - 1);
  r.consistent = r.ratio <= r.bound;
  return r;
}

std::string dump_transform(PotentialTransform& transform, long m_max)
{
  std::ostringstream os;
  os.precision(17);
  os << "# m q re im\n";
  for (long m = -m_max; m <= m_max; ++m) {
    const cplx v = transform.at(m);
    os << m << " " << static_cast<double>(m) * transform.dk() << " " << v.real() << " " << v.imag() << "\n";
  }
  return os.str();
}

} // namespace twg
