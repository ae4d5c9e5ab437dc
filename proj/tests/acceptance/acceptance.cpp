#include "twistguide/checks.hpp"
#include "twistguide/error.hpp"
#include "twistguide/pipeline.hpp"

#include <iomanip>
#include <iostream>

// Runs the reference check list and prints one line per criterion.
int main(int argc, char** argv)
{
  const std::string path = argc > 1 ? argv[1] : TWG_ACCEPTANCE_CONFIG;
  try {
    const twg::RunConfig config = twg::load_config(path);
    const auto& checks = config.verify.at("checks");
    int failed = 0;
    for (const auto& params : checks) {
      const twg::CheckResult r = twg::run_check(params, &std::cerr);
      std::cout << "criterion " << r.id << ": " << (r.passed() ? "PASS" : "FAIL") << "  " << r.title << "  ("
                << std::fixed << std::setprecision(2) << r.seconds << " s, limit " << std::defaultfloat << r.time_limit << " s)";
      if (!r.message.empty()) {
        std::cout << "  " << r.message;
      }
      std::cout << "\n  metrics: " << twg::dump_json(r.metrics, 0) << std::endl;
      failed += r.passed() ? 0 : 1;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
  } catch (const twg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
