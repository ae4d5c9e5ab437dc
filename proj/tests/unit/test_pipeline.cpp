#include "twistguide/checks.hpp"
#include "twistguide/error.hpp"
#include "twistguide/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace twg;
namespace fs = std::filesystem;

namespace {

json small_config()
{
  return json::parse(R"({
    "schema": "twistguide-config/1",
    "name": "small",
    "cross_section": {"shape": "rectangle", "width": 1.0, "height": 0.6, "offset": [0.1, 0.05], "h": 0.1},
    "twist": {"mean": 0.6, "cos": [0.2]},
    "numerics": {"bands": 3, "n_k": 16, "ell_max": 3},
    "perturbation": {"family": "power", "c": 1.0, "alpha": 0.8},
    "count": {"lambda_min": 1e-4, "lambda_max": 1e-1, "points": 5}
  })");
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("config validation")
{
  CHECK_NOTHROW(parse_config(small_config()));
  json j = small_config();
  j["schema"] = "twistguide-config/0";
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_config();
  j["numerics"]["n_k"] = 15;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_config();
  j["unknown"] = 1;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_config();
  j["stages"] = {"bands", "flux"};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
  j = small_config();
  j["perturbation"]["alpha"] = 0.0;
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("stage dependency chains")
{
  const RunConfig c = parse_config(small_config());
  CHECK(stages_for(c, "coupling") == std::vector<std::string>{"bands", "edges", "coupling"});
  CHECK(stages_for(c, "count") == std::vector<std::string>{"bands", "edges", "coupling", "count"});
  CHECK_THROWS_AS(check_stage_chain(c, {"edges"}), ConfigError);
  CHECK_THROWS_AS(check_stage_chain(c, {"bands", "bands"}), ConfigError);
  CHECK_THROWS_AS(check_stage_chain(c, {}), ConfigError);
  CHECK_THROWS_AS(stages_for(c, "plot"), ConfigError);
}

TEST_CASE("output directory precedence")
{
  RunConfig c = parse_config(small_config());
  c.output_dir = "from-config";
  unsetenv(output_dir_env);
  CHECK(resolve_output_dir(c, std::nullopt) == fs::path("from-config"));
  setenv(output_dir_env, "from-env", 1);
  CHECK(resolve_output_dir(c, std::nullopt) == fs::path("from-env"));
  CHECK(resolve_output_dir(c, fs::path("explicit")) == fs::path("explicit"));
  unsetenv(output_dir_env);
}

TEST_CASE("bands stage alone produces only bands and gaps")
{
  const RunConfig c = parse_config(small_config());
  const PipelineResults r = execute(c, {"bands"});
  CHECK(r.chart.has_value());
  CHECK(r.gaps.has_value());
  CHECK(r.edges.empty());
  CHECK(r.couplings.empty());
  const json rep = make_report(c, r);
  CHECK(rep.contains("bands"));
  CHECK_FALSE(rep.contains("edges"));
  CHECK_FALSE(rep.contains("count"));
  CHECK(rep["schema"] == report_schema);
}

TEST_CASE("centred disk on a Cartesian grid is flagged")
{
  json j = small_config();
  j["cross_section"] = {{"shape", "disk"}, {"radius", 0.5}, {"h", 0.1}};
  const PipelineResults r = execute(parse_config(j), {"bands"});
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("identical configs give byte-identical tables")
{
  const RunConfig c = parse_config(small_config());
  const auto base = fs::temp_directory_path() / "twg_determinism";
  fs::remove_all(base);
  const RunReport a = run(c, stages_for(c, "count"), base / "a");
  const RunReport b = run(c, stages_for(c, "count"), base / "b");
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    CHECK(a.files[i].filename() == b.files[i].filename());
    if (a.files[i].filename() == "report.json") {
      json ra = json::parse(slurp(a.files[i])), rb = json::parse(slurp(b.files[i]));
      ra["provenance"].erase("timestamp");
      rb["provenance"].erase("timestamp");
      CHECK(dump_json(ra) == dump_json(rb));
    } else {
      CHECK(slurp(a.files[i]) == slurp(b.files[i]));
    }
  }
  fs::remove_all(base);
}

TEST_CASE("stage errors carry the stage name")
{
  json j = small_config();
  j["numerics"]["bands"] = 1;
  j["numerics"]["ell_max"] = 1;
  j["numerics"]["tol"] = 1e-3;
  j["cross_section"]["h"] = 10.0;
  try {
    execute(parse_config(j), {"bands"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stage bands") != std::string::npos);
    CHECK(e.kind() == "EmptyGrid");
  }
}

TEST_CASE("check runner")
{
  CHECK_THROWS_AS(run_check(json{{"type", "nonsense"}}), ConfigError);
  CHECK_THROWS_AS(run_check(json{{"type", "inertia_vs_dense"}, {"typo", 1}}), ConfigError);
  const CheckResult r = run_check(json{{"type", "inertia_vs_dense"}, {"id", "x"}, {"instances", 50}, {"max_dimension", 120}});
  CHECK(r.passed());
  CHECK(r.metrics["mismatches"] == 0);
  CHECK(format_check_line(r).rfind("[PASS] x", 0) == 0);
  CHECK(to_json(r)["status"] == "pass");
}
