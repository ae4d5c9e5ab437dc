#include "twistguide/bands.hpp"

#include "twistguide/error.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace twg {

std::string to_string(EdgeSide side) { return side == EdgeSide::plus ? "plus" : "minus"; }

namespace {

void check_sampling(int band_count, int n_k)
{
  if (band_count < 1) {
    throw std::invalid_argument("band count must be positive");
  }
  if (n_k < 16 || n_k % 2 != 0) {
    throw std::invalid_argument("n_k must be even and >= 16 so that k = 0 and k = 1/2 are sampled");
  }
}

// Fill a chart from values at |k| = j / n_k, j = 0..n_k/2, using E(-k) = E(k).
BandChart mirror_chart(const std::vector<Eigen::VectorXd>& half, int band_count, int n_k)
{
  BandChart chart;
  chart.k_samples.resize(static_cast<std::size_t>(n_k));
  chart.bands.resize(n_k, band_count);
  for (int i = 0; i < n_k; ++i) {
    const int j = std::abs(i - n_k / 2); // k_i = (i - n_k/2) / n_k
    chart.k_samples[static_cast<std::size_t>(i)] = static_cast<double>(i - n_k / 2) / n_k;
    const auto& values = half[static_cast<std::size_t>(j)];
    if (values.size() < band_count) {
      throw std::invalid_argument("band evaluator returned fewer bands than requested");
    }
    chart.bands.row(i) = values.head(band_count).transpose();
  }
  return chart;
}

} // namespace

BandChart sweep_bands(const TransverseOperators& ops, const TwistProfile& beta, int band_count, int n_k,
                      const SweepOptions& options)
{
  check_sampling(band_count, n_k);
  std::vector<Eigen::VectorXd> half(static_cast<std::size_t>(n_k / 2 + 1));
  for (int j = 0; j <= n_k / 2; ++j) {
    const double k = static_cast<double>(j) / n_k;
    half[static_cast<std::size_t>(j)] =
      fiber_eigenvalues(ops, beta, k, options.ell_max, band_count, options.tol, options.solver);
  }
  return mirror_chart(half, band_count, n_k);
}

BandChart chart_from_evaluator(const BandEvaluator& bands, int band_count, int n_k)
{
  check_sampling(band_count, n_k);
  std::vector<Eigen::VectorXd> half(static_cast<std::size_t>(n_k / 2 + 1));
  for (int j = 0; j <= n_k / 2; ++j) {
    half[static_cast<std::size_t>(j)] = bands(static_cast<double>(j) / n_k, band_count);
  }
  return mirror_chart(half, band_count, n_k);
}

GapList find_gaps(const BandChart& chart, const GapOptions& options)
{
  if (chart.sample_count() == 0 || chart.band_count() == 0) {
    throw std::invalid_argument("find_gaps: empty chart");
  }
  GapList out;
  const int L = chart.band_count();
  out.window_top = chart.band_min(L - 1);

  Gap semi;
  semi.index = 0;
  semi.upper = chart.band_min(0);
  semi.upper_band = 0;
  out.gaps.push_back(semi);

  // bands are sorted at every k, so band ranges are ordered and every hole
  // between consecutive computed bands lies below min_k E_L
  for (int l = 0; l + 1 < L; ++l) {
    const double lo = chart.band_max(l);
    const double hi = chart.band_min(l + 1);
    if (hi <= lo) {
      continue;
    }
    const double scale = std::max(std::abs(lo), std::abs(hi));
    if (hi - lo < options.gap_tol_rel * scale) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "gap between bands " << l + 1 << " and " << l + 2 << " of width " << hi - lo
          << " is below the resolution threshold";
      out.suppressed.push_back(msg.str());
      continue;
    }
    Gap g;
    g.index = static_cast<int>(out.gaps.size());
    g.lower = lo;
    g.upper = hi;
    g.lower_band = l;
    g.upper_band = l + 1;
    out.gaps.push_back(g);
  }
  return out;
}

namespace {

struct Candidate
{
  double k;
  double g; // sign-adjusted band value
};

class CachedBands
{
public:
  CachedBands(const BandEvaluator& f, int count) : f_(f), count_(count) {}

  const Eigen::VectorXd& at(double k)
  {
    // bands are 1-periodic and even in k
    const double key = std::abs(k - std::floor(k + 0.5));
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, f_(key, count_)).first;
    }
    return it->second;
  }

private:
  const BandEvaluator& f_;
  int count_;
  std::map<double, Eigen::VectorXd> cache_;
};

} // namespace

EdgeReport analyze_edge(const BandChart& chart, const Gap& gap, EdgeSide side, const BandEvaluator& bands,
                        const EdgeOptions& options)
{
  if (side == EdgeSide::minus && gap.index == 0) {
    throw std::invalid_argument("the semi-bounded gap has no lower edge");
  }
  const int n_k = chart.sample_count();
  const int band = side == EdgeSide::plus ? gap.upper_band : gap.lower_band;
  if (band < 0 || band >= chart.band_count()) {
    throw std::invalid_argument("gap refers to a band outside the chart");
  }
  const double sgn = side == EdgeSide::plus ? 1.0 : -1.0;
  const double dk = 1.0 / n_k;
  const double cluster = options.cluster_radius > 0.0 ? options.cluster_radius : 2.0 / n_k;

  EdgeReport report;
  report.gap_index = gap.index;
  report.side = side;
  report.band_index = band;
  report.coarse_value = side == EdgeSide::plus ? chart.band_min(band) : chart.band_max(band);
  const double band_tol = options.band_tol_rel * std::max(1.0, std::abs(report.coarse_value));

  CachedBands cache(bands, band + 2);
  auto g = [&](double k) {
    const auto& v = cache.at(k);
    return sgn * v[band];
  };

  // coarse sign-adjusted values at k_j = j / n_k, j = 0..n_k/2
  const int half = n_k / 2;
  std::vector<double> coarse(static_cast<std::size_t>(half + 1));
  for (int j = 0; j <= half; ++j) {
    coarse[static_cast<std::size_t>(j)] = sgn * chart.bands(j + half == n_k ? 0 : j + half, band);
  }
  auto coarse_at = [&](int j) {
    if (j < 0) {
      j = -j;
    }
    if (j > half) {
      j = n_k - j;
    }
    return coarse[static_cast<std::size_t>(j)];
  };

  std::vector<Candidate> refined;
  const int bits = std::clamp(static_cast<int>(std::ceil(-std::log2(options.refine_tol))) + 1, 8, 50);
  for (int j = 0; j <= half; ++j) {
    const double c = coarse_at(j);
    if (c > coarse_at(j - 1) || c > coarse_at(j + 1)) {
      continue;
    }
    const double k0 = static_cast<double>(j) * dk;
    if (j == 0 || j == half) {
      // symmetric point: E is even about it, so it is stationary; accept it
      // when the half-step neighbours confirm a local minimum
      const double probe = k0 == 0.0 ? 0.5 * dk : 0.5 - 0.5 * dk;
      const double gk0 = g(k0);
      if (g(probe) >= gk0 - band_tol) {
        refined.push_back({k0, gk0});
        continue;
      }
    }
    const double lo = std::max(0.0, k0 - dk);
    const double hi = std::min(0.5, k0 + dk);
    boost::uintmax_t max_iter = 200;
    const auto [kstar, gstar] = boost::math::tools::brent_find_minima(g, lo, hi, bits, max_iter);
    if (!std::isfinite(gstar) || gstar > c + band_tol || max_iter >= 200) {
      std::ostringstream msg;
      msg << "extremum refinement near k = " << k0 << " did not converge";
      throw EdgeUnresolved(msg.str());
    }
    double kr = kstar;
    // snap onto a symmetric point when the refinement ends on it
    for (double sym : {0.0, 0.5}) {
      if (std::abs(kr - sym) <= 10.0 * options.refine_tol && g(sym) <= gstar + band_tol) {
        kr = sym;
      }
    }
    refined.push_back({kr, g(kr)});
  }
  if (refined.empty()) {
    throw EdgeUnresolved("no local extremum found on the coarse grid");
  }

  double gmin = refined.front().g;
  for (const auto& c : refined) {
    gmin = std::min(gmin, c.g);
  }
  report.edge_value = sgn * gmin;

  // keep global extremizers, mirror to negative k and merge clusters
  std::vector<double> points;
  for (const auto& c : refined) {
    if (c.g > gmin + band_tol) {
      continue;
    }
    points.push_back(c.k);
    if (c.k > 0.0 && c.k < 0.5) {
      points.push_back(-c.k);
    }
  }
  std::sort(points.begin(), points.end());
  std::vector<double> merged;
  for (double k : points) {
    if (!merged.empty() && std::abs(k - merged.back()) < cluster && g(k) >= g(merged.back())) {
      continue;
    }
    if (!merged.empty() && std::abs(k - merged.back()) < cluster) {
      merged.back() = k;
      continue;
    }
    merged.push_back(k);
  }

  report.unique_band = true;
  report.nondegenerate = true;
  report.stationary = true;
  const double d = options.mu_step;
  for (double k : merged) {
    Extremizer ex;
    ex.k = k;
    ex.value = cache.at(k)[band];
    const double e0 = ex.value;
    const double ep1 = cache.at(k + d)[band];
    const double em1 = cache.at(k - d)[band];
    const double ep2 = cache.at(k + 0.5 * d)[band];
    const double em2 = cache.at(k - 0.5 * d)[band];
    const double second_coarse = (ep1 - 2.0 * e0 + em1) / (d * d);
    const double second_fine = (ep2 - 2.0 * e0 + em2) / (0.25 * d * d);
    const double second = (4.0 * second_fine - second_coarse) / 3.0;
    ex.mu = 0.5 * sgn * second;
    ex.mu_error = 0.5 * std::abs(second_fine - second_coarse) / 3.0;
    const double slope_coarse = (ep1 - em1) / (2.0 * d);
    const double slope_fine = (ep2 - em2) / d;
    ex.slope = (4.0 * slope_fine - slope_coarse) / 3.0;

    const auto& values = cache.at(k);
    ex.neighbour_gap = std::numeric_limits<double>::infinity();
    if (band + 1 < values.size()) {
      ex.neighbour_gap = std::min(ex.neighbour_gap, values[band + 1] - values[band]);
    }
    if (band > 0) {
      ex.neighbour_gap = std::min(ex.neighbour_gap, values[band] - values[band - 1]);
    }
    std::ostringstream msg;
    msg.precision(10);
    if (ex.neighbour_gap <= band_tol) {
      report.unique_band = false;
      msg << "another band attains the edge at k = " << k << "; ";
    }
    if (!(ex.mu > options.mu_floor)) {
      report.nondegenerate = false;
      msg << "degenerate extremum (mu = " << ex.mu << ") at k = " << k << "; ";
    }
    if (!(std::abs(ex.slope) < options.slope_tol)) {
      report.stationary = false;
      msg << "slope " << ex.slope << " at k = " << k << " exceeds tolerance; ";
    }
    if (!msg.str().empty()) {
      report.diagnostics.push_back(msg.str());
    }
    report.extremizers.push_back(ex);
  }
  // a flat band would yield extremizers spread over the whole grid
  report.finite_extremizers = !report.extremizers.empty() && report.multiplicity() <= n_k / 4;
  if (!report.finite_extremizers) {
    report.diagnostics.push_back("edge value attained on a large set of quasimomenta");
  }
  return report;
}

EdgeReport analyze_edge(const BandChart& chart, const Gap& gap, EdgeSide side, const TransverseOperators& ops,
                        const TwistProfile& beta, const EdgeOptions& options)
{
  BandEvaluator evaluator = [&](double k, int count) {
    return fiber_eigenvalues(ops, beta, k, options.ell_max, count, options.tol, options.solver);
  };
  return analyze_edge(chart, gap, side, evaluator, options);
}

} // namespace twg
