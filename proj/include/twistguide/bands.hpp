#pragma once

#include "twistguide/fiber.hpp"

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace twg {

/// Band functions E_l(k_i), l = 1..L, on the uniform grid k_i = -1/2 + i/n_k.
struct BandChart
{
  std::vector<double> k_samples;
  Eigen::MatrixXd bands; // rows: k index, columns: band index (0-based)

  int band_count() const { return static_cast<int>(bands.cols()); }
  int sample_count() const { return static_cast<int>(k_samples.size()); }
  double band_min(int band) const { return bands.col(band).minCoeff(); }
  double band_max(int band) const { return bands.col(band).maxCoeff(); }
};

struct Gap
{
  int index = 0;                                              // j, 0 = semi-bounded gap
  double lower = -std::numeric_limits<double>::infinity();    // E_j^-
  double upper = 0.0;                                         // E_j^+
  int lower_band = -1;                                        // band whose maximum is E_j^- (0-based)
  int upper_band = 0;                                         // band whose minimum is E_j^+ (0-based)
};

/// `minus` is the lower end of the gap (maximum of the band below),
/// `plus` its upper end (minimum of the band above).
enum class EdgeSide
{
  minus,
  plus
};

struct SweepOptions
{
  int ell_max = 4;
  double tol = 1e-9;
  EigenSolverOptions solver;
};

BandChart sweep_bands(const TransverseOperators& ops, const TwistProfile& beta, int band_count, int n_k,
                      const SweepOptions& options);

struct GapOptions
{
  double gap_tol_rel = 1e-6; // widths below gap_tol_rel * |edge| are suppressed
};

struct GapList
{
  std::vector<Gap> gaps;
  std::vector<std::string> suppressed; // log of gaps dropped as unresolved
  double window_top = 0.0;             // gaps are certified below min_k E_L
};

GapList find_gaps(const BandChart& chart, const GapOptions& options = {});

struct Extremizer
{
  double k = 0.0;
  double value = 0.0;         // refined band value at k
  double mu = 0.0;            // +-(1/2) E''(k)
  double mu_error = 0.0;      // Richardson error estimate
  double slope = 0.0;         // E'(k)
  double neighbour_gap = 0.0; // distance to the nearest other band at k
};

struct EdgeOptions
{
  double band_tol_rel = 1e-7;
  double slope_tol = 1e-5;
  double mu_floor = 1e-6;
  double cluster_radius = -1.0; // default 2 / n_k
  double mu_step = 0.02;        // finite-difference step for E''
  double refine_tol = 1e-7;     // absolute k tolerance of the minimizer
  int ell_max = 4;
  double tol = 1e-9;
  EigenSolverOptions solver;
};

struct EdgeReport
{
  int gap_index = 0;
  EdgeSide side = EdgeSide::plus;
  double edge_value = 0.0;
  double coarse_value = 0.0;
  int band_index = 0; // 0-based
  std::vector<Extremizer> extremizers;
  bool unique_band = false;      // condition (i)
  bool finite_extremizers = false; // condition (ii)
  bool nondegenerate = false;    // condition (iii)
  bool stationary = false;       // |E'(k*)| < slope_tol
  std::vector<std::string> diagnostics;

  bool regular() const { return unique_band && finite_extremizers && nondegenerate && stationary; }
  int multiplicity() const { return static_cast<int>(extremizers.size()); }
};

/// Edge analysis: which bands touch the edge, where the extremal points are
/// (Brent refinement on k in [0, 1/2], mirrored to [-1/2, 0)), and the
/// effective masses from Richardson-extrapolated second differences.
EdgeReport analyze_edge(const BandChart& chart, const Gap& gap, EdgeSide side, const TransverseOperators& ops,
                        const TwistProfile& beta, const EdgeOptions& options);

/// Band function evaluator: anything mapping (k, number of bands) to the
/// ascending band values. Lets the extremum search run on synthetic bands.
using BandEvaluator = std::function<Eigen::VectorXd(double k, int count)>;

EdgeReport analyze_edge(const BandChart& chart, const Gap& gap, EdgeSide side, const BandEvaluator& bands,
                        const EdgeOptions& options);

/// Samples an evaluator onto a chart (k grid as in sweep_bands).
BandChart chart_from_evaluator(const BandEvaluator& bands, int band_count, int n_k);

std::string to_string(EdgeSide side);

} // namespace twg
