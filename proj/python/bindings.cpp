// Python bindings. Concept classes and experiment configs cross the boundary
// as JSON text; the squint package wraps them to accept dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

#include "squint/bounds.hpp"
#include "squint/component_iprod.hpp"
#include "squint/experts.hpp"
#include "squint/harness.hpp"
#include "squint/numerics.hpp"
#include "squint/polytopes.hpp"

namespace py = pybind11;
using namespace squint;

namespace {

LearningRatePrior make_prior(const std::string& name, double a, double b, std::size_t points) {
  if (name == "conjugate") return ConjugatePrior{a, b};
  if (name == "cv") return CVPrior{};
  if (name == "improper") return ImproperPrior{};
  if (name == "grid") return DiscreteGridPrior::exponential(points);
  throw std::invalid_argument("unknown prior '" + name + "'");
}

// t = 0 means the smallest round count consistent with R and V.
ExpertGameState make_state(std::vector<double> R, std::vector<double> V, std::vector<double> prior, std::size_t t) {
  if (prior.empty()) prior.assign(R.size(), 1.0 / static_cast<double>(R.size()));
  ExpertGameState s(std::move(prior));
  if (R.size() != s.experts() || V.size() != s.experts()) throw std::invalid_argument("R, V and prior differ in size");
  s.R = std::move(R);
  s.V = std::move(V);
  if (t == 0) {
    double need = 0.0;
    for (std::size_t k = 0; k < s.experts(); ++k) need = std::max({need, std::abs(s.R[k]), s.V[k]});
    t = static_cast<std::size_t>(std::ceil(need));
  }
  s.t = t;
  s.validate();
  return s;
}

polytopes::ConceptClass parse_class(const std::string& text) {
  return polytopes::ConceptClass::from_json(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_squint, m) {
  m.doc() = "Squint, iProd and Component iProd";

  py::register_exception<polytopes::ProjectionError>(m, "ProjectionError", PyExc_RuntimeError);
  py::register_exception<polytopes::InfeasiblePoint>(m, "InfeasiblePoint", PyExc_ValueError);

  m.def("erf", &numerics::erf, py::arg("x"));
  m.def("log_xi", [](double R, double V) { return numerics::log_xi({R, V}); }, py::arg("R"), py::arg("V"));
  m.def("xi", [](double R, double V) { return numerics::xi_stable({R, V}); }, py::arg("R"), py::arg("V"));

  m.def(
      "squint_weights",
      [](std::vector<double> R, std::vector<double> V, std::vector<double> prior, const std::string& name, double a,
         double b, std::size_t points, std::size_t t) {
        return squint_weights(make_state(std::move(R), std::move(V), std::move(prior), t),
                              make_prior(name, a, b, points));
      },
      py::arg("R"), py::arg("V"), py::arg("prior") = std::vector<double>{}, py::arg("eta_prior") = "improper",
      py::arg("a") = 0.0, py::arg("b") = 0.0, py::arg("points") = 32, py::arg("t") = 0);
  m.def(
      "potential",
      [](std::vector<double> R, std::vector<double> V, std::vector<double> prior, const std::string& name, double a,
         double b, std::size_t points, std::size_t t) {
        return potential(make_state(std::move(R), std::move(V), std::move(prior), t), make_prior(name, a, b, points));
      },
      py::arg("R"), py::arg("V"), py::arg("prior") = std::vector<double>{}, py::arg("eta_prior") = "improper",
      py::arg("a") = 0.0, py::arg("b") = 0.0, py::arg("points") = 32, py::arg("t") = 0);
  m.def("hedge_weights", &hedge_weights, py::arg("cumulative_losses"), py::arg("prior"), py::arg("eta"));

  m.def("bound_conjugate", &bounds::bound_conjugate, py::arg("V"), py::arg("pi_mass"), py::arg("a") = 0.0,
        py::arg("b") = 0.0);
  m.def("bound_cv", &bounds::bound_cv, py::arg("V"), py::arg("pi_mass"));
  m.def("bound_improper", &bounds::bound_improper, py::arg("V"), py::arg("pi_mass"), py::arg("T"));
  m.def("bound_component", &bounds::bound_component, py::arg("V"), py::arg("entropy"), py::arg("K"), py::arg("T"));
  m.def("grid_size", &bounds::grid_size, py::arg("T"));
  m.def(
      "grid",
      [](std::uint64_t T) {
        std::vector<double> etas;
        for (std::size_t i = 1; i <= bounds::grid_size(T); ++i) etas.push_back(std::ldexp(1.0, -static_cast<int>(i)));
        return etas;
      },
      py::arg("T"));
  m.def(
      "binary_relative_entropy",
      [](const std::vector<double>& v, const std::vector<double>& u) { return bounds::binary_relative_entropy(v, u); },
      py::arg("v"), py::arg("u"));

  m.def(
      "project", [](const std::string& cls, const std::vector<double>& u) { return polytopes::project(parse_class(cls), u); },
      py::arg("class_json"), py::arg("u_tilde"));
  m.def(
      "decompose",
      [](const std::string& cls, const std::vector<double>& u) {
        const auto d = polytopes::decompose(parse_class(cls), u);
        return py::make_tuple(d.concepts, d.weights);
      },
      py::arg("class_json"), py::arg("u"));
  m.def(
      "enumerate_vertices",
      [](const std::string& cls, std::size_t cap) { return polytopes::enumerate_vertices(parse_class(cls), cap); },
      py::arg("class_json"), py::arg("cap") = 100000);

  py::class_<combinatorial::ComponentIProd>(m, "ComponentIProd")
      .def(py::init([](const std::string& cls, const std::vector<double>& prior, std::uint64_t T_max) {
             return combinatorial::ComponentIProd::make_game(parse_class(cls), prior, T_max);
           }),
           py::arg("class_json"), py::arg("prior"), py::arg("T_max"))
      .def("play", &combinatorial::ComponentIProd::play)
      .def("observe", [](combinatorial::ComponentIProd& g, const std::vector<double>& l) { g.observe(l); },
           py::arg("losses"))
      .def("potential", &combinatorial::ComponentIProd::potential)
      .def("regret_variance",
           [](const combinatorial::ComponentIProd& g, const std::vector<double>& v) { return g.regret_variance(v); },
           py::arg("v"))
      .def_property_readonly("rounds", &combinatorial::ComponentIProd::rounds);

  m.def(
      "run_experiment",
      [](const std::string& config) {
        const auto cfg = harness::ExperimentConfig::from_json(nlohmann::json::parse(config));
        const auto result = harness::run_experiment(cfg);
        return py::make_tuple(harness::format_csv(result), result.summary.dump());
      },
      py::arg("config_json"));
  m.def(
      "audit_csv",
      [](const std::string& csv, const std::string& config) {
        std::optional<harness::ExperimentConfig> cfg;
        if (!config.empty()) cfg = harness::ExperimentConfig::from_json(nlohmann::json::parse(config));
        const auto r = harness::audit_csv(csv, cfg ? &*cfg : nullptr);
        return py::make_tuple(r.rows, r.checks, r.failures);
      },
      py::arg("csv"), py::arg("config_json") = "");
}
