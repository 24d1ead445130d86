#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "decaylab/errors.hpp"
#include "decaylab/pipeline.hpp"
#include "decaylab/verify.hpp"

namespace py = pybind11;
namespace dl = decaylab;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict trajectory_dict(const dl::Trajectory& tr) {
  py::dict d;
  d["t"] = tr.t;
  d["x"] = tr.x;
  d["deriv"] = tr.deriv;
  d["steps"] = tr.stats.steps;
  d["rejected"] = tr.stats.rejected;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "decaylab core";

  py::register_exception<dl::SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<dl::DomainError>(m, "DomainError", PyExc_ArithmeticError);

  py::class_<dl::NonlinearitySpec>(m, "Nonlinearity")
      .def_static("power", &dl::NonlinearitySpec::power, py::arg("beta"))
      .def_static("linear", &dl::NonlinearitySpec::linear)
      .def_static("flat_exponential", &dl::NonlinearitySpec::flat_exponential)
      .def_static("from_csv", &dl::NonlinearitySpec::from_csv, py::arg("path"))
      .def("__call__", [](const dl::NonlinearitySpec& f, double x) { return f(x); })
      .def("describe", &dl::NonlinearitySpec::describe)
      .def("__repr__", [](const dl::NonlinearitySpec& f) { return "Nonlinearity(" + f.describe() + ")"; });

  py::class_<dl::PerturbationSpec>(m, "Perturbation")
      .def_static("zero", &dl::PerturbationSpec::zero)
      .def_static("power_tail", &dl::PerturbationSpec::power_tail, py::arg("c"), py::arg("q"))
      .def_static("oscillatory", &dl::PerturbationSpec::oscillatory, py::arg("c"), py::arg("q"), py::arg("omega"))
      .def("__call__", [](const dl::PerturbationSpec& g, double t) { return g(t); })
      .def("gamma", &dl::PerturbationSpec::gamma, py::arg("t"))
      .def("describe", &dl::PerturbationSpec::describe);

  py::class_<dl::NoiseSpec>(m, "Noise")
      .def_static("zero", &dl::NoiseSpec::zero)
      .def_static("power_tail", &dl::NoiseSpec::power_tail, py::arg("c"), py::arg("p"))
      .def_static("constant", &dl::NoiseSpec::constant, py::arg("c"))
      .def("__call__", [](const dl::NoiseSpec& s, double t) { return s(t); })
      .def("in_L2", &dl::NoiseSpec::in_L2)
      .def("describe", &dl::NoiseSpec::describe);

  py::class_<dl::InverseFlow>(m, "InverseFlow")
      .def(py::init([](const dl::NonlinearitySpec& f) { return dl::make_inverse_flow(f); }), py::arg("f"))
      .def("__call__", [](const dl::InverseFlow& inv, double t) { return inv(t); }, py::arg("t"))
      .def("F", [](const dl::InverseFlow& inv, double x) { return inv.flow().F(x); }, py::arg("x"));

  m.def(
      "compute_F", [](const dl::NonlinearitySpec& f, double x) { return dl::compute_F(dl::FlowMap(f), x); },
      py::arg("f"), py::arg("x"));
  m.def(
      "classify", [](const dl::NonlinearitySpec& f) { return std::string(dl::to_string(dl::classify_nonlinearity(f).regime)); },
      py::arg("f"));
  m.def(
      "analyze_f", [](const dl::NonlinearitySpec& f) { return json_to_py(dl::analyze_f(f)); }, py::arg("f"));
  m.def(
      "integrate_external",
      [](const dl::NonlinearitySpec& f, const dl::PerturbationSpec& g, double xi, double horizon) {
        return trajectory_dict(dl::integrate_external(f, g, xi, horizon));
      },
      py::arg("f"), py::arg("g"), py::arg("xi"), py::arg("horizon") = 1e6);
  m.def(
      "verdict",
      [](const dl::NonlinearitySpec& f, const dl::PerturbationSpec& g, double xi, double horizon) {
        const dl::InverseFlow inv = dl::make_inverse_flow(f);
        const dl::Trajectory tr = dl::integrate_external(f, g, xi, horizon);
        const dl::RatioSeries rs = dl::ratio_series(tr, inv, f);
        return json_to_py(dl::to_json(dl::render_verdict(rs, tr, g, f, inv)));
      },
      py::arg("f"), py::arg("g"), py::arg("xi"), py::arg("horizon") = 1e6);
  m.def(
      "simulate_ensemble",
      [](const dl::NonlinearitySpec& f, const dl::NoiseSpec& sigma, double x0, double horizon, std::size_t paths,
         std::uint64_t seed, unsigned threads) {
        const dl::InverseFlow inv = dl::make_inverse_flow(f);
        dl::SdeConfig cfg;
        cfg.threads = threads;
        dl::PathEnsemble e;
        {
          py::gil_scoped_release release;
          e = dl::simulate_ensemble(f, sigma, x0, horizon, paths, seed, inv, cfg);
        }
        std::vector<double> terminal;
        for (const auto& p : e.paths) terminal.push_back(p.terminal_state);
        py::dict d;
        d["terminal_state"] = terminal;
        d["report"] = json_to_py(dl::to_json(dl::classify_ensemble(e, cfg.tol_lambda)));
        return d;
      },
      py::arg("f"), py::arg("sigma"), py::arg("x0"), py::arg("horizon"), py::arg("paths"), py::arg("seed"),
      py::arg("threads") = 0);
  m.def(
      "run_scenario",
      [](const std::string& text) {
        const dl::Scenario s = dl::parse_scenario_text(text);
        py::dict d;
        if (s.stochastic()) {
          const dl::SdeOutcome o = dl::run_sde(s);
          d["agreement"] = o.agreement;
          d["artifacts"] = o.artifacts.files;
        } else {
          const dl::OdeOutcome o = dl::run_ode(s);
          d["agreement"] = o.verdict.agreement;
          d["artifacts"] = o.artifacts.files;
        }
        return d;
      },
      py::arg("text"));
  m.def(
      "verify",
      [](const std::vector<int>& only, double tol_scale) {
        dl::VerifyOptions opt;
        opt.only = only;
        opt.tol_scale = tol_scale;
        dl::VerifyReport rep;
        {
          py::gil_scoped_release release;
          rep = dl::run_verify_suite(opt);
        }
        py::list out;
        for (const auto& r : rep.criteria) {
          py::dict d;
          d["id"] = r.id;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["expected"] = r.expected;
          d["actual"] = r.actual;
          out.append(d);
        }
        return out;
      },
      py::arg("only") = std::vector<int>{}, py::arg("tol_scale") = 1.0);
  m.def("format_double", &dl::format_double, py::arg("value"));
}
