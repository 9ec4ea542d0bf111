#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pmoe/data_io.hpp"
#include "pmoe/diagnostics.hpp"
#include "pmoe/errors.hpp"
#include "pmoe/metrics.hpp"
#include "pmoe/rules.hpp"
#include "pmoe/solvers.hpp"

namespace py = pybind11;
using namespace pmoe;

namespace {

GuidelineVector to_guideline(const std::vector<int>& g) {
  GuidelineVector out;
  out.reserve(g.size());
  for (int v : g) {
    if (v < -1 || v > 1) throw InvalidArgument("python", "guideline values must be -1, 0 or 1");
    out.push_back(static_cast<Guideline>(v));
  }
  return out;
}

std::vector<int> from_guideline(const GuidelineVector& g) {
  std::vector<int> out;
  out.reserve(g.size());
  for (auto v : g) out.push_back(to_int(v));
  return out;
}

Dataset make_dataset(const FeatureMatrix& x, const Vector& y) {
  Dataset data;
  data.features = x;
  data.labels = y;
  for (Eigen::Index j = 0; j < x.cols(); ++j) data.columns.push_back("x" + std::to_string(j));
  data.validate();
  return data;
}

std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

SolverConfig make_config(const std::string& solver, const py::kwargs& kwargs) {
  SolverConfig c;
  c.kind = parse_solver_kind(solver);
  for (const auto& item : kwargs) {
    const std::string key = py::str(item.first);
    const py::handle v = item.second;
    if (key == "learning_rate") c.learning_rate = v.cast<double>();
    else if (key == "max_iters") c.max_iters = v.cast<int>();
    else if (key == "grad_tol") c.grad_tol = v.cast<double>();
    else if (key == "t") c.t = v.cast<double>();
    else if (key == "epsilon") c.epsilon = v.cast<double>();
    else if (key == "gamma") c.gamma = v.cast<double>();
    else if (key == "seed") c.seed = v.cast<std::uint64_t>();
    else if (key == "coverage_applicable_only") c.coverage_applicable_only = v.cast<bool>();
    else throw InvalidArgument("python", "unknown solver option '" + key + "'");
  }
  c.validate();
  return c;
}

py::list report_rows(const TrainReport& report) {
  py::list rows;
  for (const auto& r : report.records) {
    py::dict d;
    d["iter"] = r.iter;
    d["loss"] = r.loss;
    d["slack"] = r.slack ? py::cast(*r.slack) : py::none();
    d["soft_coverage"] = r.soft_coverage;
    d["step"] = r.step;
    d["event"] = to_string(r.event);
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mixture of experts with a coverage-maximizing gate over human rules";

  static py::exception<Error> error(m, "PmoeError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  py::class_<MoEModel>(m, "Model")
      .def(py::init([](std::size_t d) { return MoEModel::zeros(d); }), py::arg("d"))
      .def_readwrite("theta", &MoEModel::theta)
      .def_readwrite("w", &MoEModel::w)
      .def_readwrite("gamma", &MoEModel::gamma)
      .def_readwrite("epsilon", &MoEModel::epsilon)
      .def_readwrite("reference_loss", &MoEModel::reference_loss)
      .def_readwrite("columns", &MoEModel::columns)
      .def_readwrite("solver", &MoEModel::solver)
      .def_property_readonly("dim", &MoEModel::dim)
      .def("save", [](const MoEModel& self, const std::filesystem::path& p) { save_model(self, p); })
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); });

  py::class_<RuleSet>(m, "RuleSet")
      .def_static("parse", [](const std::string& text) { return RuleSet::parse(text); })
      .def_static("load", [](const std::filesystem::path& p) { return RuleSet::load(p); })
      .def("bind", &RuleSet::bind, py::arg("columns"))
      .def("evaluate", [](const RuleSet& self, const FeatureMatrix& x) { return from_guideline(self.evaluate(x)); })
      .def("to_text", &RuleSet::to_text)
      .def("__len__", &RuleSet::size);

  m.def(
      "loss",
      [](const MoEModel& model, const FeatureMatrix& x, const Vector& y, const std::vector<int>& g) {
        return loss(model, make_dataset(x, y), to_guideline(g));
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("g"));

  m.def(
      "loss_gradients",
      [](const MoEModel& model, const FeatureMatrix& x, const Vector& y, const std::vector<int>& g) {
        const Gradients gr = loss_gradients(model, make_dataset(x, y), to_guideline(g));
        return py::make_tuple(gr.theta, gr.w);
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("g"));

  m.def(
      "predict",
      [](const MoEModel& model, const FeatureMatrix& x, const std::vector<int>& g) {
        const Evaluation ev = evaluate(model, x, to_guideline(g));
        py::dict d;
        d["expert"] = ev.expert;
        d["gate"] = ev.gate;
        d["mixture"] = ev.mixture;
        return d;
      },
      py::arg("model"), py::arg("x"), py::arg("g"));

  m.def(
      "train",
      [](const FeatureMatrix& x, const Vector& y, const std::vector<int>& g, const std::string& solver,
         const std::optional<MoEModel>& warm, const py::kwargs& kwargs) {
        const SolverConfig c = make_config(solver, kwargs);
        const PipelineResult r = train_pipeline(make_dataset(x, y), to_guideline(g), c, warm);
        return py::make_tuple(r.final.model, to_string(r.final.report.status), report_rows(r.final.report),
                              r.warm.model);
      },
      py::arg("x"), py::arg("y"), py::arg("g"), py::arg("solver") = "unconstrained", py::arg("warm") = py::none(),
      "Returns (model, status, report rows, warm-start model).");

  m.def(
      "auc", [](const Vector& scores, const Vector& labels) { return auc(view(scores), view(labels)); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "soft_coverage", [](const MoEModel& model, const FeatureMatrix& x) {
        return soft_coverage(view(evaluate(model, x, GuidelineVector(static_cast<std::size_t>(x.rows()),
                                                                     Guideline::kNotApplicable)).gate));
      },
      py::arg("model"), py::arg("x"));
  m.def(
      "hard_coverage",
      [](const MoEModel& model, const FeatureMatrix& x, double threshold) {
        return hard_coverage(view(evaluate(model, x, GuidelineVector(static_cast<std::size_t>(x.rows()),
                                                                     Guideline::kNotApplicable)).gate),
                             threshold);
      },
      py::arg("model"), py::arg("x"), py::arg("threshold"));

  m.def(
      "check_gradients",
      [](const MoEModel& model, const FeatureMatrix& x, const Vector& y, const std::vector<int>& g) {
        return check_gradients(model, make_dataset(x, y), to_guideline(g)).to_text();
      },
      py::arg("model"), py::arg("x"), py::arg("y"), py::arg("g"));

  m.def(
      "load_csv",
      [](const std::filesystem::path& p) {
        const Dataset d = load_csv(p);
        return py::make_tuple(d.features, d.labels, d.columns);
      },
      py::arg("path"), "Returns (features, labels, column names).");

  m.def(
      "synthesize",
      [](const std::string& regime, std::size_t n, std::size_t d, std::uint64_t seed) {
        Regime r = Regime::kA;
        if (regime == "B") r = Regime::kB;
        else if (regime == "adversarial") r = Regime::kAdversarial;
        else if (regime != "A") throw InvalidArgument("python", "regime must be A, B or adversarial");
        const SyntheticData s = generate_synthetic(regime_config(r, n, d, seed));
        return py::make_tuple(s.data.features, s.data.labels, s.data.columns, s.rules.to_text());
      },
      py::arg("regime"), py::arg("n"), py::arg("d"), py::arg("seed") = 0,
      "Returns (features, labels, column names, rules text).");
}
