#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "infoplan/belief.hpp"
#include "infoplan/harness.hpp"
#include "infoplan/scoring.hpp"

namespace py = pybind11;
using namespace infoplan;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

py::dict mean_std_dict(const MeanStd& m) {
  py::dict d;
  d["mean"] = m.mean;
  d["std"] = m.std;
  return d;
}

}  // namespace

PYBIND11_MODULE(_infoplan, m) {
  m.doc() = "Information planning for a simulated human teammate";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<UnsupportedUpdate>(m, "UnsupportedUpdate", PyExc_ValueError);

  m.def("weighted_entropy",
        [](const std::vector<double>& p, const std::vector<double>& w) {
          return weighted_entropy(p, w);
        },
        py::arg("probs"), py::arg("weights"));

  py::class_<BeliefLayout, std::shared_ptr<BeliefLayout>>(m, "Layout")
      .def(py::init([](const std::vector<std::pair<std::string, std::vector<std::string>>>& fs) {
             std::vector<FactorSpec> specs;
             for (const auto& [name, values] : fs) specs.push_back({name, values});
             return std::const_pointer_cast<BeliefLayout>(make_layout(std::move(specs)));
           }),
           py::arg("factors"))
      .def_property_readonly("factor_count", &BeliefLayout::factor_count)
      .def_property_readonly("total_size", &BeliefLayout::total_size)
      .def("dim", &BeliefLayout::dim);

  py::class_<Fluent>(m, "Fluent")
      .def_static("null", &Fluent::null)
      .def_static("holds", &Fluent::holds, py::arg("factor"), py::arg("value"))
      .def_static("not_holds", &Fluent::not_holds, py::arg("factor"), py::arg("value"))
      .def_readonly("factor", &Fluent::factor)
      .def_readonly("value", &Fluent::value)
      .def("is_null", &Fluent::is_null)
      .def("__eq__", [](const Fluent& a, const Fluent& b) { return a == b; });

  py::class_<FactoredBelief>(m, "Belief")
      .def(py::init([](std::shared_ptr<BeliefLayout> layout, std::vector<double> flat) {
             return FactoredBelief(layout, std::move(flat));
           }),
           py::arg("layout"), py::arg("flat"))
      .def_static("uniform", [](std::shared_ptr<BeliefLayout> layout) {
        return FactoredBelief::uniform(layout);
      })
      .def_property_readonly("flat", [](const FactoredBelief& b) { return to_vec(b.flat()); })
      .def("factor", [](const FactoredBelief& b, std::size_t f) { return to_vec(b.factor(f)); })
      .def("prob", &FactoredBelief::prob);

  m.def("marginal", &marginal, py::arg("belief"), py::arg("fluent"));
  m.def("jeffrey_update",
        [](const FactoredBelief& b, const Fluent& f, std::optional<double> marg, double drift) {
          return jeffrey_update(b, Information{f, marg}, HumanForwardModel(drift));
        },
        py::arg("belief"), py::arg("fluent"), py::arg("marginal") = py::none(),
        py::arg("drift") = 1e-3);
  m.def("weighted_gain",
        [](const FactoredBelief& b, const FactoredBelief& next, const std::vector<double>& w) {
          return weighted_gain(b, next, Weights(w));
        },
        py::arg("before"), py::arg("after"), py::arg("weights"));
  m.def("score",
        [](const FactoredBelief& b, const FactoredBelief& next, const Fluent& f,
           const std::vector<double>& w, const std::string& kind, double threshold) {
          ScoreFunctionSpec spec{Weights(w)};
          spec.f_kind = parse_f_kind(kind);
          spec.threshold = threshold;
          spec.validate();
          return score(spec, b, next, f);
        },
        py::arg("before"), py::arg("after"), py::arg("fluent"), py::arg("weights"),
        py::arg("f") = "id", py::arg("threshold") = 1.0);

  m.def("run_experiment",
        [](const std::string& config_json) {
          const auto c = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
          ExperimentResult r;
          {
            py::gil_scoped_release release;
            r = run_experiment(c);
          }
          py::dict out;
          out["trials"] = r.summary.trials;
          out["failed"] = r.summary.failed;
          out["human_score"] = mean_std_dict(r.summary.human_score);
          out["infos_per_timestep"] = mean_std_dict(r.summary.infos_per_timestep);
          out["env_reward"] = mean_std_dict(r.summary.env_reward);
          py::list scores;
          for (const auto& t : r.trials) scores.append(t.human_score);
          out["trial_scores"] = scores;
          return out;
        },
        py::arg("config_json"));

  m.def("run_learning_experiment",
        [](const std::string& config_json, bool baseline) {
          const auto c = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
          LearningExperimentResult r;
          {
            py::gil_scoped_release release;
            r = run_learning_experiment(c, baseline);
          }
          py::list curve;
          for (const auto& row : r.curve) {
            py::dict d;
            d["episode"] = row.episode;
            d["true_score"] = mean_std_dict(row.true_score);
            d["epsilon"] = row.epsilon;
            d["mean_loss"] = row.mean_loss;
            curve.append(d);
          }
          py::dict out;
          out["curve"] = curve;
          out["baseline"] = r.baseline;
          return out;
        },
        py::arg("config_json"), py::arg("baseline") = false);
}
