#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>
#include <sstream>

#include "skipgan/conditioning.hpp"
#include "skipgan/error.hpp"
#include "skipgan/evaluation.hpp"
#include "skipgan/metrics.hpp"
#include "skipgan/model_io.hpp"
#include "skipgan/simcorpus.hpp"
#include "skipgan/synthesis.hpp"

namespace py = pybind11;
using namespace skipgan;

namespace {

py::object json_module() { return py::module_::import("json"); }

// Accepts a dict or a JSON string.
std::string as_json(const py::object& o) {
  if (o.is_none()) return "{}";
  if (py::isinstance<py::str>(o)) return o.cast<std::string>();
  return json_module().attr("dumps")(o).cast<std::string>();
}

py::object to_python(const std::string& doc) { return json_module().attr("loads")(doc); }

py::array_t<double> table_to_numpy(const Table& t) {
  py::array_t<double> a({t.rows(), t.cols()});
  auto m = a.mutable_unchecked<2>();
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) m(r, c) = t(r, c);
  }
  return a;
}

Table table_from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw ValidationError("table array must be two-dimensional");
  Table t(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  auto m = a.unchecked<2>();
  for (py::ssize_t r = 0; r < a.shape(0); ++r) {
    for (py::ssize_t c = 0; c < a.shape(1); ++c) t(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
  }
  return t;
}

std::vector<ClassifierSpec> select_zoo(const std::optional<std::vector<std::string>>& names) {
  const auto zoo = default_zoo();
  if (!names) return zoo;
  std::vector<ClassifierSpec> out;
  for (const auto& n : *names) {
    auto it = std::find_if(zoo.begin(), zoo.end(), [&](const ClassifierSpec& s) { return s.name == n; });
    if (it == zoo.end()) throw ValidationError("unknown classifier '" + n + "'");
    out.push_back(*it);
  }
  return out;
}

py::list training_log(const GanModel& m) {
  py::list out;
  for (int e = 1; e <= m.state.epochs_completed; ++e) {
    py::dict d;
    d["epoch"] = e;
    d["critic"] = m.state.epoch_mean(e, &IterationRecord::critic);
    d["generator_orig"] = m.state.epoch_mean(e, &IterationRecord::generator_orig);
    d["generator_dstream"] = m.state.epoch_mean(e, &IterationRecord::generator_dstream);
    d["classifier"] = m.state.epoch_mean(e, &IterationRecord::classifier);
    d["condition_match"] = m.state.condition_match[static_cast<std::size_t>(e - 1)];
    d["mean_assigned"] = m.state.mean_assigned[static_cast<std::size_t>(e - 1)];
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Skip-logic-aware conditional tabular GAN and its evaluation harness";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base);
  py::register_exception<SchemaMismatchError>(m, "SchemaMismatchError", validation);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<NumericError>(m, "NumericError", base);

  py::class_<SurveySchema>(m, "Schema")
      .def_static("from_json", [](const std::string& doc) { return parse_schema(doc); })
      .def_static("load", [](const std::string& path) { return load_schema(path); })
      .def("to_json", [](const SurveySchema& s) { return serialize_schema(s); })
      .def_property_readonly("hash", [](const SurveySchema& s) { return hex64(s.hash()); })
      .def_property_readonly("feature_names",
                             [](const SurveySchema& s) {
                               std::vector<std::string> n;
                               for (int f = 0; f < s.num_features(); ++f) n.push_back(s.feature(f).name);
                               return n;
                             })
      .def_property_readonly("target", [](const SurveySchema& s) { return s.target().name; })
      .def("categories", [](const SurveySchema& s, int f) { return s.feature(f).categories; })
      .def_property_readonly("num_constraints", [](const SurveySchema& s) { return s.constraints().size(); })
      .def("__eq__", [](const SurveySchema& a, const SurveySchema& b) { return a == b; });

  py::class_<Table>(m, "Table")
      .def(py::init([](py::array_t<double, py::array::c_style | py::array::forcecast> a) { return table_from_numpy(a); }))
      .def_property_readonly("rows", &Table::rows)
      .def_property_readonly("cols", &Table::cols)
      .def("to_numpy", &table_to_numpy)
      .def("__len__", &Table::rows)
      .def("__eq__", [](const Table& a, const Table& b) { return a == b; });

  m.def("read_table", [](const SurveySchema& s, const std::string& path) { return read_table(s, path); });
  m.def("table_from_csv", [](const SurveySchema& s, const std::string& text) {
    std::istringstream in(text);
    return read_table(s, in);
  });
  m.def("table_to_csv", [](const SurveySchema& s, const Table& t) {
    std::ostringstream out;
    write_table(s, t, out);
    return out.str();
  });

  py::class_<Population>(m, "Population")
      .def_readonly("schema", &Population::schema)
      .def_readonly("table", &Population::table)
      .def_property_readonly("oracle_json", [](const Population& p) { return serialize_oracle(p.oracle, p.schema); })
      .def_property_readonly("oracle_bound",
                             [](const Population& p) { return oracle_auroc_bound(p.oracle, p.schema, p.table); })
      .def_property_readonly("expected_oracle_auroc",
                             [](const Population& p) { return expected_oracle_auroc(p.oracle, p.schema, p.table); });

  m.def(
      "simulate", [](const py::object& spec) { return synthesize_population(parse_population_spec(as_json(spec))); },
      py::arg("spec") = py::none(), "Planted survey corpus from a population spec (dict or JSON; fields optional).");

  py::class_<GanModel>(m, "Model")
      .def_property_readonly("schema", [](const GanModel& g) { return g.schema; })
      .def_property_readonly("config", [](const GanModel& g) { return to_python(train_config_to_json(g.config)); })
      .def_property_readonly("config_hash", [](const GanModel& g) { return hex64(config_hash(g.config)); })
      .def_property_readonly("train_rows", &GanModel::train_rows)
      .def_property_readonly("target_counts", [](const GanModel& g) { return g.target_counts; })
      .def_property_readonly("training_log", &training_log)
      .def_property_readonly("generator_checksum", [](GanModel& g) { return hex64(g.generator_checksum()); })
      .def(
          "generate",
          [](GanModel& g, std::optional<std::size_t> rows, std::uint64_t seed, int replicate) {
            auto spec = default_synthesis_spec(g);
            if (rows) spec.rows = *rows;
            Rng rng(derive_seed(seed, {0x6e, static_cast<std::uint64_t>(replicate)}));
            py::gil_scoped_release release;
            return generate_table(g, spec, rng);
          },
          py::arg("rows") = py::none(), py::arg("seed") = 0, py::arg("replicate") = 0)
      .def("save", [](GanModel& g, const std::string& path) { save_model(g, path); });

  m.def(
      "train",
      [](const SurveySchema& s, const Table& t, const py::object& config) {
        const TrainConfig c = train_config_from_json(as_json(config));
        py::gil_scoped_release release;
        return train(s, t, c);
      },
      py::arg("schema"), py::arg("table"), py::arg("config") = py::none());
  m.def("load_model", [](const std::string& path) { return load_model(path); });

  m.def("conflict", [](const SurveySchema& s, const Table& t) { return conflict(s, t); });
  m.def("validate_row", [](const SurveySchema& s, const std::vector<double>& row) {
    std::vector<std::pair<int, std::vector<int>>> out;
    for (const auto& v : validate_row(s, row)) out.emplace_back(v.constraint, v.positions);
    return out;
  });
  m.def("auroc", [](const std::vector<double>& scores, const std::vector<int>& labels) { return auroc(scores, labels); });
  m.def("restrict", [](const SurveySchema& s, int feature, int category) {
    std::vector<std::pair<int, int>> out;
    for (const auto& e : restrict(make_cond(s, feature, category), s).assigned) out.emplace_back(e.feature, e.category);
    return out;
  });
  m.def(
      "split",
      [](const SurveySchema& s, const Table& t, double test_fraction, std::uint64_t seed) {
        const auto sp = stratified_split(s, t, test_fraction, seed);
        return std::make_pair(t.select(sp.train), t.select(sp.test));
      },
      py::arg("schema"), py::arg("table"), py::arg("test_fraction") = 0.2, py::arg("seed") = 1);
  m.def("classifier_names", [] {
    std::vector<std::string> n;
    for (const auto& c : default_zoo()) n.push_back(c.name);
    return n;
  });

  m.def(
      "evaluate",
      [](const SurveySchema& s, const Table& train_t, const Table& test_t, const std::vector<Table>& synthetic,
         const std::optional<std::vector<std::string>>& classifiers, bool shuffled_control, std::uint64_t seed,
         int jobs) {
        EvalOptions opt;
        opt.zoo = select_zoo(classifiers);
        opt.shuffled_control = shuffled_control;
        opt.jobs = jobs;
        EvaluationReport report;
        report.source = "external";
        report.schema_hash = hex64(s.hash());
        report.replicates = static_cast<int>(synthetic.size());
        for (const auto& c : opt.zoo) report.classifiers.push_back(c.name);
        {
          py::gil_scoped_release release;
          report.splits.push_back(evaluate_split(s, train_t, test_t, synthetic, opt, seed, &report.warnings));
        }
        return to_python(report_to_json(report));
      },
      py::arg("schema"), py::arg("train"), py::arg("test"), py::arg("synthetic"), py::arg("classifiers") = py::none(),
      py::arg("shuffled_control") = true, py::arg("seed") = 1, py::arg("jobs") = 1,
      "Conflict, compatibility and utility of synthetic tables on one split; returns the report dict.");

  m.def(
      "benchmark",
      [](const SurveySchema& s, const Table& t, const py::object& config, std::vector<std::uint64_t> seeds,
         int replicates, const std::optional<std::vector<std::string>>& classifiers, bool shuffled_control, int jobs) {
        BenchmarkConfig bc;
        bc.train = train_config_from_json(as_json(config));
        bc.seeds = std::move(seeds);
        bc.replicates = replicates;
        bc.eval.zoo = select_zoo(classifiers);
        bc.eval.shuffled_control = shuffled_control;
        bc.eval.jobs = jobs;
        std::string doc;
        {
          py::gil_scoped_release release;
          doc = report_to_json(run_benchmark(s, t, bc));
        }
        return to_python(doc);
      },
      py::arg("schema"), py::arg("table"), py::arg("config") = py::none(),
      py::arg("seeds") = std::vector<std::uint64_t>{1, 2, 3, 4, 5}, py::arg("replicates") = 10,
      py::arg("classifiers") = py::none(), py::arg("shuffled_control") = true, py::arg("jobs") = 1);

  m.def(
      "ablate",
      [](const SurveySchema& s, const Table& t, const py::object& config, std::vector<std::uint64_t> seeds,
         int replicates, int record_epoch, int jobs) {
        AblationConfig ac;
        ac.train = train_config_from_json(as_json(config));
        ac.seeds = std::move(seeds);
        ac.replicates = replicates;
        ac.record_epoch = record_epoch;
        ac.jobs = jobs;
        std::string doc;
        {
          py::gil_scoped_release release;
          doc = ablation_to_json(run_ablation(s, t, ac));
        }
        return to_python(doc);
      },
      py::arg("schema"), py::arg("table"), py::arg("config") = py::none(),
      py::arg("seeds") = std::vector<std::uint64_t>{1, 2, 3, 4, 5}, py::arg("replicates") = 10,
      py::arg("record_epoch") = 50, py::arg("jobs") = 1);
}
