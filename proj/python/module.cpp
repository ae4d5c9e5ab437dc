#include "twistguide/bsch.hpp"
#include "twistguide/checks.hpp"
#include "twistguide/error.hpp"
#include "twistguide/pipeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using twg::json;

namespace {

json parse(const std::string& text, const char* what)
{
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw twg::ConfigError(std::string(what) + ": " + e.what());
  }
}

twg::TransverseOperators operators(const std::string& cross_section)
{
  json cfg = {{"schema", twg::config_schema}, {"cross_section", parse(cross_section, "cross_section")}};
  return twg::build_operators(*twg::parse_config(cfg).grid);
}

twg::EffectiveModel model(double mu, double coefficient, const std::string& perturbation, const std::string& eta)
{
  const twg::DecayProfile eps = twg::parse_decay(parse(perturbation, "perturbation"), "perturbation");
  if (eta.empty()) {
    return {{twg::mean_field_channel(mu, coefficient)}, eps};
  }
  return {{twg::full_channel(mu, twg::parse_periodic(parse(eta, "eta"), "eta"), coefficient)}, eps};
}

std::string report(const std::string& config, const std::vector<std::string>& stages, const std::string& out)
{
  const twg::RunConfig rc = twg::parse_config(parse(config, "config"));
  std::vector<std::string> s = stages.empty() ? rc.stages : stages;
  if (s.empty()) {
    throw twg::ConfigError("no stages given and none in the config");
  }
  py::gil_scoped_release release;
  if (out.empty()) {
    return twg::dump_json(twg::make_report(rc, twg::execute(rc, s)));
  }
  return twg::dump_json(twg::run(rc, s, std::filesystem::path(out)).report);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Floquet-Bloch bands and eigenvalue counting for periodically twisted waveguides";
  m.attr("__version__") = twg::tool_version;
  m.attr("config_schema") = twg::config_schema;
  m.attr("report_schema") = twg::report_schema;

  static py::exception<twg::Error> base(m, "TwistguideError", PyExc_RuntimeError);
  static py::exception<twg::ConfigError> config_error(m, "ConfigError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) {
        std::rethrow_exception(p);
      }
    } catch (const twg::ConfigError& e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const twg::Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  m.def("format_number", &twg::format_number, "Decimal text with 17 significant digits.");

  m.def(
    "transverse_eigenvalues",
    [](const std::string& cross_section, int count) {
      return twg::transverse_eigenvalues(operators(cross_section), count);
    },
    py::arg("cross_section"), py::arg("count"));

  m.def(
    "sweep_bands",
    [](const std::string& cross_section, const std::string& twist, int bands, int n_k, int ell_max) {
      const auto ops = operators(cross_section);
      const auto beta = twg::parse_twist(parse(twist, "twist"), "twist");
      twg::SweepOptions so;
      so.ell_max = ell_max;
      py::gil_scoped_release release;
      const twg::BandChart c = twg::sweep_bands(ops, beta, bands, n_k, so);
      return std::make_pair(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(c.k_samples.data(), c.sample_count())),
                            Eigen::MatrixXd(c.bands));
    },
    py::arg("cross_section"), py::arg("twist"), py::arg("bands"), py::arg("n_k"), py::arg("ell_max"),
    "k grid and band matrix (rows: k, columns: band).");

  m.def(
    "count_curve",
    [](double mu, double coefficient, const std::string& perturbation, const std::string& eta, double lambda_min,
       double lambda_max, int points) {
      const twg::EffectiveModel em = model(mu, coefficient, perturbation, eta);
      twg::CountCurve c;
      {
        py::gil_scoped_release release;
        c = twg::count_curve(em, lambda_min, lambda_max, points);
      }
      std::vector<bool> conv(c.converged.begin(), c.converged.end());
      return py::make_tuple(c.lambdas, c.counts, conv);
    },
    py::arg("mu"), py::arg("coefficient"), py::arg("perturbation"), py::arg("eta"), py::arg("lambda_min"),
    py::arg("lambda_max"), py::arg("points"));

  m.def(
    "count_below",
    [](double mu, double coefficient, const std::string& perturbation, const std::string& eta, double lambda) {
      const twg::CountResult r = twg::count_converged(model(mu, coefficient, perturbation, eta), lambda);
      return py::make_tuple(r.count, r.converged);
    },
    py::arg("mu"), py::arg("coefficient"), py::arg("perturbation"), py::arg("eta"), py::arg("lambda_"));

  m.def(
    "semiclassical_count",
    [](double mu, double coefficient, const std::string& perturbation, double lambda) {
      return twg::semiclassical_count(model(mu, coefficient, perturbation, ""), lambda).value;
    },
    py::arg("mu"), py::arg("coefficient"), py::arg("perturbation"), py::arg("lambda_"));

  m.def(
    "bs_count",
    [](double mu, double coefficient, const std::string& perturbation, const std::string& eta, double lambda) {
      const twg::EffectiveModel em = model(mu, coefficient, perturbation, eta);
      twg::BSCountResult r;
      {
        py::gil_scoped_release release;
        r = twg::bs_count_converged(em.channels.front(), em.eps, lambda);
      }
      return py::make_tuple(r.count, r.converged);
    },
    py::arg("mu"), py::arg("coefficient"), py::arg("perturbation"), py::arg("eta"), py::arg("lambda_"));

  m.def("run", &report, py::arg("config"), py::arg("stages"), py::arg("output_dir"),
        "Runs pipeline stages; returns the report as JSON text.");

  m.def(
    "run_check",
    [](const std::string& params) {
      const json j = parse(params, "check");
      py::gil_scoped_release release;
      return twg::dump_json(twg::to_json(twg::run_check(j)));
    },
    py::arg("params"));
}
