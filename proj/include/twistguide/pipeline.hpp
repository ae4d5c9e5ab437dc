#pragma once

#include "twistguide/bands.hpp"
#include "twistguide/bsch.hpp"
#include "twistguide/coupling.hpp"
#include "twistguide/effective.hpp"
#include "twistguide/fulltube.hpp"
#include "twistguide/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace twg {

/// Stage names in dependency order.
const std::vector<std::string>& stage_names();

struct GridConfig
{
  CrossSectionShape shape;
  double h = 1.0 / 16.0;
  GridLayout layout = GridLayout::cartesian;
  int n_r = 0;   // polar grids
  int n_phi = 0;
};

TransverseOperators build_operators(const GridConfig& grid);

struct EdgeSelector
{
  int gap = 0;
  EdgeSide side = EdgeSide::plus;
};

/// One channel given directly in the config instead of by the coupling stage.
struct SyntheticChannel
{
  double mu = 1.0;
  double coefficient = 1.0; // mean-field coefficient, or coupling for a periodic eta
  std::optional<CouplingFunction> eta;
};

struct RunConfig
{
  json raw;
  std::string name = "run";
  std::filesystem::path output_dir = "twg-out";
  bool plots = true;
  std::vector<std::string> stages;

  std::optional<GridConfig> grid;
  TwistProfile beta;
  int band_count = 4;
  int n_k = 16;
  int ell_max = 4;
  double tol = 1e-9;
  EigenSolverOptions solver;
  GapOptions gap_options;
  EdgeOptions edge_options;
  std::vector<int> edge_gaps; // empty: every gap found

  std::optional<DecayProfile> eps;
  std::vector<SyntheticChannel> channels;
  std::optional<EdgeSelector> count_edge; // default: first regular edge
  std::string count_mode = "mean";        // "mean" or "full"
  double lambda_min = 1e-4;
  double lambda_max = 1e-1;
  int points = 13;
  bool relative_lambda = true; // lambda values are multiples of sup |V|
  CountOptions count_options;

  std::vector<double> bs_lambdas;
  BSOptions bs_options;

  std::optional<GridConfig> tube_grid; // default: the main grid
  std::optional<DecayProfile> tube_eps; // default: eps
  TubeTrendOptions tube;

  json verify; // check list for the verify command
};

/// Validates and converts a parsed config; ConfigError on any problem.
RunConfig parse_config(const json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Stages needed to produce `target` (its dependency chain, in order).
std::vector<std::string> stages_for(const RunConfig& config, const std::string& target);

/// ConfigError when a stage misses a prerequisite stage or config block.
void check_stage_chain(const RunConfig& config, const std::vector<std::string>& stages);

/// Output directory: explicit override, then the environment variable, then the config.
std::filesystem::path resolve_output_dir(const RunConfig& config, const std::optional<std::filesystem::path>& override_dir);

struct EdgeCoupling
{
  int gap = 0;
  EdgeSide side = EdgeSide::plus;
  int extremizer = 0;
  double mu = 0.0;
  EdgeEigenfunction psi;
  CouplingFunction eta;
  L1Report l1;
};

struct BSRow
{
  double lambda = 0.0;
  long bs_count = 0;
  long count = 0;
  bool bs_converged = false;
  bool count_converged = false;
  int dimension = 0;

  bool agrees() const { return bs_converged && count_converged && bs_count == count; }
};

struct PipelineResults
{
  std::vector<std::string> stages;
  std::vector<std::string> warnings;
  std::optional<TransverseOperators> ops;
  std::optional<BandChart> chart;
  std::optional<GapList> gaps;
  std::vector<EdgeReport> edges;
  std::vector<EdgeCoupling> couplings;

  std::optional<EffectiveModel> model;
  std::optional<EdgeSelector> counted_edge;
  std::string regime;
  std::optional<CountCurve> curve;
  json fit;

  std::vector<BSRow> bs_rows;
  std::optional<TubeTrend> tube;
};

/// Executes the given stages in order. Errors carry the stage name.
PipelineResults execute(const RunConfig& config, const std::vector<std::string>& stages, std::ostream* log = nullptr);

/// Effective model for one edge from the coupling stage.
EffectiveModel edge_model(const std::vector<EdgeCoupling>& couplings, const EdgeSelector& edge,
                          const DecayProfile& eps, const std::string& mode);

/// Label of the expected counting regime of a model (power law, log law, bounded, ...).
std::string classify_regime(const EffectiveModel& model);

/// Report document (versioned schema) for the results.
json make_report(const RunConfig& config, const PipelineResults& results);

/// Writes report.json and the text tables; returns the files written.
std::vector<std::filesystem::path> write_artifacts(const std::filesystem::path& dir, const RunConfig& config,
                                                   const PipelineResults& results, const json& report);

struct RunReport
{
  json report;
  std::filesystem::path output_dir;
  std::vector<std::filesystem::path> files;
};

RunReport run(const RunConfig& config, const std::vector<std::string>& stages,
              const std::optional<std::filesystem::path>& output_override = std::nullopt, std::ostream* log = nullptr);

} // namespace twg
