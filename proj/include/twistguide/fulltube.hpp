#pragma once

#include "twistguide/bands.hpp"
#include "twistguide/effective.hpp"

#include <Eigen/SparseCore>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace twg {

/// Counting window (a, b) placed next to a gap edge.
struct TubeWindow
{
  double a = -std::numeric_limits<double>::infinity();
  double b = 0.0;
  double edge = 0.0;
  double margin = 0.0;
  EdgeSide side = EdgeSide::plus;
};

/// Truncated operator on omega x [-X, X] with Dirichlet ends, twist rate
/// theta' = beta - eps. Slices x3_j = -X + j * x3_step, j = 1..n3-1, in the
/// weight-normalized basis, slice-major.
struct TubeOperator
{
  double X = 0.0;
  double x3_step = 0.0;
  int n_omega = 0;
  int slices = 0;
  Eigen::SparseMatrix<double> matrix;
  TubeWindow window;

  int dimension() const { return static_cast<int>(matrix.rows()); }
};

/// Box scheme in x3: on every cell the form density
/// |theta'(mid) dphi (f_j + f_{j+1}) / 2 + (f_{j+1} - f_j) / step|^2
/// plus -Delta_t on every slice. X must be a multiple of 2 pi and 2 pi / step
/// an integer with at least 8 points per shortest period of beta.
TubeOperator assemble_tube(const TransverseOperators& ops, const TwistProfile& beta,
                           const std::optional<DecayProfile>& eps, double X, double x3_step);

/// The same scheme on one period with Bloch condition f(x3 + 2 pi) = e^{2 pi i k} f(x3).
SparseMatrixC assemble_bloch_cell(const TransverseOperators& ops, const TwistProfile& beta, double k, double x3_step);

/// Band functions of the discretized periodic background (grid as in sweep_bands).
BandChart discrete_reference_chart(const TransverseOperators& ops, const TwistProfile& beta, double x3_step,
                                   int band_count, int n_k, const EigenSolverOptions& solver = {});

/// Edge value of the discrete background: the chart extremum refined by Brent
/// iteration in k.
double discrete_edge(const TransverseOperators& ops, const TwistProfile& beta, double x3_step, const BandChart& chart,
                     const Gap& gap, EdgeSide side, const EigenSolverOptions& solver = {});

/// Window of the given depth ending `margin` short of the edge, on the gap side.
TubeWindow window_at_edge(double edge, EdgeSide side, double depth, double margin);

struct WindowCount
{
  long count = 0;
  int retries = 0; // shifted factorizations repeated after a breakdown
};

/// inertia(H - b) - inertia(H - a); a = -inf skips the lower factorization.
WindowCount gap_window_count(const TubeOperator& tube, double a, double b);

/// Slice permutation for x3 -> -x3 combined with a transverse mirror (node map).
std::vector<int> tube_reflection(const TubeOperator& tube, const std::vector<int>& transverse_map);

/// Node map of the mirror x2 -> -x2; throws DegenerateShape when the grid is
/// not mirror symmetric.
std::vector<int> transverse_mirror(const TransverseOperators& ops);

/// max |H - P H P^T| for the permutation p.
double commutator_defect(const Eigen::SparseMatrix<double>& H, const std::vector<int>& p);

struct TubeTrendOptions
{
  std::vector<double> scales{1.0, 2.0, 4.0};
  double X = 8.0 * 3.141592653589793;
  double x3_step = 3.141592653589793 / 8.0;
  int gap_index = 0;
  EdgeSide side = EdgeSide::plus;
  double depth = std::numeric_limits<double>::infinity();
  double margin = 0.05;
  long allowance = 4; // edge-state allowance for X -> 2X
  int band_count = 2;
  int n_k = 16;
  EigenSolverOptions solver;
};

struct TubeTrendRow
{
  double scale = 0.0;
  long count = 0;          // at X
  long count_doubled = 0;  // at 2X
  bool stable = false;
  int dimension = 0;
  int retries = 0;
};

struct TubeTrend
{
  double edge = 0.0;
  TubeWindow window;
  long background = 0;         // eps = 0 at X
  long background_doubled = 0; // eps = 0 at 2X
  std::vector<TubeTrendRow> rows;
  bool nondecreasing = false;
  bool nonzero_at_max = false;
  bool stable = false;

  bool passed() const { return nondecreasing && nonzero_at_max && stable; }
};

/// Window counts for the family scale * eps at X and 2X, plus the eps = 0 background.
TubeTrend tube_trend(const TransverseOperators& ops, const TwistProfile& beta, const DecayProfile& eps,
                     const TubeTrendOptions& options = {});

/// Text table in the count-curve layout.
std::string format_tube_trend(const TubeTrend& trend);

} // namespace twg
