#include "twistguide/fulltube.hpp"

#include "twistguide/error.hpp"

#include <boost/math/tools/minima.hpp>

#include <Eigen/SparseCore>

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace twg {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

int cells_per_period(const TwistProfile& beta, double x3_step)
{
  if (!(x3_step > 0.0)) {
    throw std::invalid_argument("x3 step must be positive");
  }
  const double ratio = two_pi / x3_step;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
    std::ostringstream msg;
    msg << "2 pi / step = " << ratio << " is not an integer";
    throw ResolutionTooCoarse(msg.str());
  }
  const int M = std::max(beta.order(), 1);
  if (n < 8L * M) {
    std::ostringstream msg;
    msg << n << " points per period do not resolve beta of order " << beta.order() << " (need " << 8 * M << ")";
    throw ResolutionTooCoarse(msg.str());
  }
  return static_cast<int>(n);
}

// Block assembler for the box scheme. A cell joining slices s0 and s1
// (either may be -1 for a Dirichlet end) contributes
//   (j,j): theta^2/4 DtD + I/h^2,  (j+1,j+1): same,
//   (j,j+1): theta^2/4 DtD - theta D/h - I/h^2 and its transpose,
// with an optional phase on the s1 slice for Bloch cells.
template <typename Scalar>
class BoxAssembler
{
public:
  BoxAssembler(const TransverseOperators& ops, double step) : ops_(ops), h_(step), n_(ops.size())
  {
    dtd_ = SparseMatrixR(ops.dphi.transpose()) * ops.dphi;
  }

  void add_slice_laplacian(int s)
  {
    add_block(s, s, ops_.laplacian_t, Scalar(1.0));
  }

  void add_cell(int s0, int s1, double theta, Scalar phase = Scalar(1.0))
  {
    const double q = 0.25 * theta * theta;
    const double inv_h2 = 1.0 / (h_ * h_);
    if (s0 >= 0) {
      add_block(s0, s0, dtd_, Scalar(q));
      add_identity(s0, s0, Scalar(inv_h2));
    }
    if (s1 >= 0) {
      add_block(s1, s1, dtd_, Scalar(q));
      add_identity(s1, s1, Scalar(inv_h2));
    }
    if (s0 >= 0 && s1 >= 0) {
      // block (s0, s1) = B, block (s1, s0) = B^H with B = (q DtD - theta D / h - I/h^2) * phase
      add_block(s0, s1, dtd_, Scalar(q) * phase);
      add_block(s0, s1, ops_.dphi, Scalar(-theta / h_) * phase);
      add_identity(s0, s1, Scalar(-inv_h2) * phase);
      const Scalar cp = conj_of(phase);
      add_block(s1, s0, dtd_, Scalar(q) * cp);
      add_block_transposed(s1, s0, ops_.dphi, Scalar(-theta / h_) * cp);
      add_identity(s1, s0, Scalar(-inv_h2) * cp);
    }
  }

  Eigen::SparseMatrix<Scalar> finish(int slices)
  {
    Eigen::SparseMatrix<Scalar> H(slices * n_, slices * n_);
    H.setFromTriplets(trip_.begin(), trip_.end());
    H.prune(Scalar(0.0));
    H.makeCompressed();
    return H;
  }

private:
  static Scalar conj_of(Scalar z)
  {
    if constexpr (std::is_same_v<Scalar, double>) {
      return z;
    } else {
      return std::conj(z);
    }
  }

  void add_block(int r, int c, const SparseMatrixR& B, Scalar factor)
  {
    for (int k = 0; k < B.outerSize(); ++k) {
      for (SparseMatrixR::InnerIterator it(B, k); it; ++it) {
        trip_.emplace_back(r * n_ + static_cast<int>(it.row()), c * n_ + static_cast<int>(it.col()),
                           factor * it.value());
      }
    }
  }

  void add_block_transposed(int r, int c, const SparseMatrixR& B, Scalar factor)
  {
    for (int k = 0; k < B.outerSize(); ++k) {
      for (SparseMatrixR::InnerIterator it(B, k); it; ++it) {
        trip_.emplace_back(r * n_ + static_cast<int>(it.col()), c * n_ + static_cast<int>(it.row()),
                           factor * it.value());
      }
    }
  }

  void add_identity(int r, int c, Scalar value)
  {
    for (int i = 0; i < n_; ++i) {
      trip_.emplace_back(r * n_ + i, c * n_ + i, value);
    }
  }

  const TransverseOperators& ops_;
  double h_;
  int n_;
  SparseMatrixR dtd_;
  std::vector<Eigen::Triplet<Scalar>> trip_;
};

Inertia shifted_inertia(const Eigen::SparseMatrix<double>& H, double s, int& retries)
{
  Eigen::SparseMatrix<double> I(H.rows(), H.cols());
  I.setIdentity();
  double shift = s;
  for (int attempt = 0; attempt < 4; ++attempt) {
    try {
      return sparse_inertia(H - shift * I);
    } catch (const FactorizationBreakdown&) {
      ++retries;
      shift = s + std::ldexp(1e-12, 2 * attempt) * std::max(1.0, std::abs(s));
    }
  }
  std::ostringstream msg;
  msg << "LDL^T of H - " << s << " I failed after " << retries << " perturbed retries";
  throw FactorizationBreakdown(msg.str());
}

} // namespace

TubeOperator assemble_tube(const TransverseOperators& ops, const TwistProfile& beta,
                           const std::optional<DecayProfile>& eps, double X, double x3_step)
{
  const int per = cells_per_period(beta, x3_step);
  const double periods = X / two_pi;
  const long np = std::lround(periods);
  if (np < 1 || std::abs(periods - static_cast<double>(np)) > 1e-9 * periods) {
    throw std::invalid_argument("tube half-length X must be a positive multiple of 2 pi");
  }
  const int cells = 2 * static_cast<int>(np) * per;
  const int slices = cells - 1;
  BoxAssembler<double> box(ops, x3_step);
  for (int s = 0; s < slices; ++s) {
    box.add_slice_laplacian(s);
  }
  for (int c = 0; c < cells; ++c) {
    // cell c joins slice nodes c and c + 1; node j is slice j - 1, nodes 0 and cells are Dirichlet
    const double mid = -X + (c + 0.5) * x3_step;
    const double theta = beta(mid) - (eps ? (*eps)(mid) : 0.0);
    const int s0 = c == 0 ? -1 : c - 1;
    const int s1 = c == cells - 1 ? -1 : c;
    box.add_cell(s0, s1, theta);
  }
  TubeOperator tube;
  tube.X = X;
  tube.x3_step = x3_step;
  tube.n_omega = ops.size();
  tube.slices = slices;
  tube.matrix = box.finish(slices);
  return tube;
}

SparseMatrixC assemble_bloch_cell(const TransverseOperators& ops, const TwistProfile& beta, double k, double x3_step)
{
  const int per = cells_per_period(beta, x3_step);
  BoxAssembler<cplx> box(ops, x3_step);
  for (int s = 0; s < per; ++s) {
    box.add_slice_laplacian(s);
  }
  const cplx wrap = std::polar(1.0, two_pi * k);
  for (int c = 0; c < per; ++c) {
    const double mid = (c + 0.5) * x3_step;
    if (c == per - 1) {
      if (per == 1) {
        throw ResolutionTooCoarse("a Bloch cell needs at least two slices");
      }
      box.add_cell(c, 0, beta(mid), wrap);
    } else {
      box.add_cell(c, c + 1, beta(mid));
    }
  }
  SparseMatrixC H = box.finish(per);
  SparseMatrixC Ht = H.adjoint();
  H = (H + Ht) * 0.5;
  return H;
}

BandChart discrete_reference_chart(const TransverseOperators& ops, const TwistProfile& beta, double x3_step,
                                   int band_count, int n_k, const EigenSolverOptions& solver)
{
  BandEvaluator eval = [&](double k, int count) {
    return lowest_eigenpairs(assemble_bloch_cell(ops, beta, k, x3_step), count, solver).values;
  };
  return chart_from_evaluator(eval, band_count, n_k);
}

double discrete_edge(const TransverseOperators& ops, const TwistProfile& beta, double x3_step, const BandChart& chart,
                     const Gap& gap, EdgeSide side, const EigenSolverOptions& solver)
{
  const int band = side == EdgeSide::plus ? gap.upper_band : gap.lower_band;
  if (band < 0 || band >= chart.band_count()) {
    throw std::invalid_argument("gap edge band is not on the chart");
  }
  const double sign = side == EdgeSide::plus ? 1.0 : -1.0;
  Eigen::Index best = 0;
  if (side == EdgeSide::plus) {
    chart.bands.col(band).minCoeff(&best);
  } else {
    chart.bands.col(band).maxCoeff(&best);
  }
  const double k0 = chart.k_samples[static_cast<std::size_t>(best)];
  const double dk = 1.0 / chart.sample_count();
  auto f = [&](double k) {
    return sign * lowest_eigenpairs(assemble_bloch_cell(ops, beta, k, x3_step), band + 1, solver).values[band];
  };
  boost::uintmax_t iters = 60;
  const auto r = boost::math::tools::brent_find_minima(f, k0 - dk, k0 + dk, 40, iters);
  const double grid = sign * chart.bands(best, band);
  return sign * std::min(r.second, grid);
}

TubeWindow window_at_edge(double edge, EdgeSide side, double depth, double margin)
{
  if (!(margin > 0.0) || !(depth > margin)) {
    throw std::invalid_argument("window needs depth > margin > 0");
  }
  TubeWindow w;
  w.edge = edge;
  w.margin = margin;
  w.side = side;
  if (side == EdgeSide::plus) {
    w.a = edge - depth;
    w.b = edge - margin;
  } else {
    w.a = edge + margin;
    w.b = edge + depth;
  }
  return w;
}

WindowCount gap_window_count(const TubeOperator& tube, double a, double b)
{
  if (!(a < b)) {
    throw std::invalid_argument("window needs a < b");
  }
  WindowCount out;
  const long below_b = shifted_inertia(tube.matrix, b, out.retries).negative;
  const long below_a = std::isinf(a) ? 0 : shifted_inertia(tube.matrix, a, out.retries).negative;
  out.count = below_b - below_a;
  return out;
}

std::vector<int> transverse_mirror(const TransverseOperators& ops)
{
  const auto& nodes = ops.grid.nodes;
  const double tol = 1e-9 * std::max(ops.grid.spacing, 1e-300);
  std::vector<int> map(nodes.size(), -1);
  // nodes are few enough for a quadratic search
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec2 target(nodes[i].x(), -nodes[i].y());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if ((nodes[j] - target).norm() <= tol && std::abs(ops.grid.weights[j] - ops.grid.weights[i]) <= 1e-12) {
        map[i] = static_cast<int>(j);
        break;
      }
    }
    if (map[i] < 0) {
      throw DegenerateShape("cross-section grid is not symmetric under x2 -> -x2");
    }
  }
  return map;
}

std::vector<int> tube_reflection(const TubeOperator& tube, const std::vector<int>& transverse_map)
{
  if (static_cast<int>(transverse_map.size()) != tube.n_omega) {
    throw std::invalid_argument("transverse map size does not match the tube");
  }
  std::vector<int> p(static_cast<std::size_t>(tube.dimension()));
  for (int s = 0; s < tube.slices; ++s) {
    const int t = tube.slices - 1 - s;
    for (int i = 0; i < tube.n_omega; ++i) {
      p[static_cast<std::size_t>(s * tube.n_omega + i)] = t * tube.n_omega + transverse_map[static_cast<std::size_t>(i)];
    }
  }
  return p;
}

double commutator_defect(const Eigen::SparseMatrix<double>& H, const std::vector<int>& p)
{
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(H.nonZeros()));
  for (int c = 0; c < H.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, c); it; ++it) {
      t.emplace_back(p[static_cast<std::size_t>(it.row())], p[static_cast<std::size_t>(it.col())], it.value());
    }
  }
  Eigen::SparseMatrix<double> PHP(H.rows(), H.cols());
  PHP.setFromTriplets(t.begin(), t.end());
  const Eigen::SparseMatrix<double> D = PHP - H;
  double m = 0.0;
  for (int c = 0; c < D.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(D, c); it; ++it) {
      m = std::max(m, std::abs(it.value()));
    }
  }
  return m;
}

TubeTrend tube_trend(const TransverseOperators& ops, const TwistProfile& beta, const DecayProfile& eps,
                     const TubeTrendOptions& options)
{
  if (options.scales.empty()) {
    throw std::invalid_argument("tube_trend needs at least one scale");
  }
  const BandChart chart =
    discrete_reference_chart(ops, beta, options.x3_step, options.band_count, options.n_k, options.solver);
  const GapList gaps = find_gaps(chart);
  const Gap* gap = nullptr;
  for (const Gap& g : gaps.gaps) {
    if (g.index == options.gap_index) {
      gap = &g;
    }
  }
  if (gap == nullptr) {
    std::ostringstream msg;
    msg << "gap " << options.gap_index << " is not open in the discrete background";
    throw EdgeUnresolved(msg.str());
  }
  TubeTrend out;
  out.edge = discrete_edge(ops, beta, options.x3_step, chart, *gap, options.side, options.solver);
  double depth = options.depth;
  if (options.side == EdgeSide::plus && std::isfinite(gap->lower)) {
    depth = std::min(depth, out.edge - gap->lower);
  } else if (options.side == EdgeSide::minus) {
    depth = std::min(depth, gap->upper - out.edge);
  }
  out.window = window_at_edge(out.edge, options.side, depth, options.margin);

  auto count_at = [&](const std::optional<DecayProfile>& e, double X, TubeTrendRow* row) {
    const TubeOperator tube = assemble_tube(ops, beta, e, X, options.x3_step);
    const WindowCount wc = gap_window_count(tube, out.window.a, out.window.b);
    if (row != nullptr) {
      row->dimension = std::max(row->dimension, tube.dimension());
      row->retries += wc.retries;
    }
    return wc.count;
  };
  out.background = count_at(std::nullopt, options.X, nullptr);
  out.background_doubled = count_at(std::nullopt, 2.0 * options.X, nullptr);

  out.nondecreasing = true;
  out.stable = std::abs(out.background_doubled - out.background) <= options.allowance;
  for (double c : options.scales) {
    TubeTrendRow row;
    row.scale = c;
    const DecayProfile ec = eps.scaled(c);
    row.count = count_at(ec, options.X, &row);
    row.count_doubled = count_at(ec, 2.0 * options.X, &row);
    row.stable = std::abs(row.count_doubled - row.count) <= options.allowance;
    if (!out.rows.empty() && row.count < out.rows.back().count) {
      out.nondecreasing = false;
    }
    out.stable = out.stable && row.stable;
    out.rows.push_back(row);
  }
  out.nonzero_at_max = out.rows.back().count > 0;
  return out;
}

std::string format_tube_trend(const TubeTrend& trend)
{
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# edge " << trend.edge << " window " << trend.window.a << " " << trend.window.b << " side "
     << to_string(trend.window.side) << "\n";
  os << "# background " << trend.background << " " << trend.background_doubled << "\n";
  os << "# scale count count_2X stable dimension\n";
  for (const auto& r : trend.rows) {
    os << r.scale << " " << r.count << " " << r.count_doubled << " " << (r.stable ? 1 : 0) << " " << r.dimension
       << "\n";
  }
  return os.str();
}

} // namespace twg
