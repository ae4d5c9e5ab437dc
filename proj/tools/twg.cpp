#include "twistguide/checks.hpp"
#include "twistguide/error.hpp"
#include "twistguide/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

namespace {

struct Options
{
  std::string config;
  std::string out;
  int workers = 1;
  bool quiet = false;
};

std::optional<std::filesystem::path> out_override(const Options& o)
{
  if (o.out.empty()) {
    return std::nullopt;
  }
  return std::filesystem::path(o.out);
}

int do_run(const Options& o, const std::string& target)
{
  const twg::RunConfig config = twg::load_config(o.config);
  const std::vector<std::string> stages = target == "run" ? config.stages : twg::stages_for(config, target);
  if (stages.empty()) {
    throw twg::ConfigError("config.stages: the run command needs a non-empty stage list");
  }
  std::ostream* log = o.quiet ? nullptr : &std::cerr;
  const twg::RunReport rep = twg::run(config, stages, out_override(o), log);
  for (const auto& w : rep.report.value("warnings", twg::json::array())) {
    std::cerr << "warning: " << w.get<std::string>() << "\n";
  }
  for (const auto& f : rep.files) {
    std::cout << f.string() << "\n";
  }
  return 0;
}

int do_verify(const Options& o)
{
  const twg::RunConfig config = twg::load_config(o.config);
  if (config.verify.is_null() || config.verify.empty()) {
    throw twg::ConfigError("config.verify: no checks configured");
  }
  std::ostream* log = o.quiet ? nullptr : &std::cerr;
  const std::vector<twg::CheckResult> results = twg::run_checks(config.verify, log);

  bool failed = false;
  twg::json doc = {{"schema", twg::report_schema},
                   {"kind", "verify"},
                   {"config_hash", twg::config_hash(config.raw)},
                   {"tool_version", twg::tool_version},
                   {"checks", twg::json::array()}};
  std::cout << "part                        check                 status\n";
  for (const auto& r : results) {
    failed = failed || r.status == "fail";
    doc["checks"].push_back(twg::to_json(r));
    std::ostringstream line;
    line.setf(std::ios::left);
    line.width(28);
    line << r.part;
    line.width(22);
    line << r.id << r.status;
    std::cout << line.str() << "\n";
  }
  for (const auto& r : results) {
    std::cout << twg::format_check_line(r) << "\n";
  }
  doc["passed"] = !failed;
  const auto dir = twg::resolve_output_dir(config, out_override(o));
  twg::write_text_file(dir / "verify.json", twg::dump_json(doc));
  std::cout << (failed ? "verify: FAILED" : "verify: all checks passed") << "\n";
  return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Floquet-Bloch bands and eigenvalue counting for periodically twisted waveguides"};
  app.set_version_flag("--version", std::string(twg::tool_version));
  app.require_subcommand(1);
  Options o;

  const std::vector<std::pair<std::string, std::string>> commands{
    {"bands", "band functions on a k grid and the gaps between them"},
    {"edges", "gap edges: extremizers and effective masses"},
    {"coupling", "periodic coupling functions at the gap edges"},
    {"count", "eigenvalue counts of the effective operator and the fitted law"},
    {"bs-check", "Birman-Schwinger count against the direct count"},
    {"tube-check", "gap-window counts of the truncated full operator"},
    {"run", "the stages listed in the config"},
    {"verify", "the check list in the config; nonzero exit on failure"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", o.out, std::string("output directory (overrides ") + twg::output_dir_env + " and the config)");
    sub->add_option("-j,--workers", o.workers, "maximum number of parallel workers")->check(CLI::PositiveNumber);
    sub->add_flag("-q,--quiet", o.quiet, "no progress log");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return cmd == "verify" ? do_verify(o) : do_run(o, cmd);
  } catch (const twg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == "ConfigError" ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
