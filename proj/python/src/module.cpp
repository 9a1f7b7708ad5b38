#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "loadpct/cli.hpp"
#include "loadpct/core.hpp"
#include "loadpct/data.hpp"
#include "loadpct/eval.hpp"
#include "loadpct/export.hpp"
#include "loadpct/pct.hpp"
#include "loadpct/scengen.hpp"

namespace py = pybind11;
using namespace loadpct;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const SeriesMatrix& m) {
  Array out({m.rows(), m.width()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

SeriesMatrix from_array(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  SeriesMatrix m(static_cast<std::size_t>(a.shape(1)));
  for (py::ssize_t r = 0; r < a.shape(0); ++r) {
    m.push_back(std::span<const double>(a.data(r, 0), static_cast<std::size_t>(a.shape(1))));
  }
  return m;
}

std::span<const double> as_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return {a.data(), static_cast<std::size_t>(a.shape(0))};
}

std::vector<Method> methods_of(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(method_from_string(n));
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["fold"] = r.fold;
  d["method"] = std::string(to_string(r.method));
  d["n_train_instances"] = r.n_train_instances;
  d["n_test_instances"] = r.n_test_instances;
  d["n_leaves"] = r.n_leaves;
  d["mean_es"] = r.mean_es;
  d["train_s"] = r.train_s;
  d["predict_s"] = r.predict_s;
  d["per_instance_es"] = py::array_t<double>(r.per_instance_es.size(), r.per_instance_es.data());
  return d;
}

EvalOptions eval_options(std::size_t folds, std::size_t n_scenarios, std::uint64_t seed, std::size_t max_depth,
                         std::size_t min_leaf, double prune_fraction, std::size_t threads) {
  EvalOptions o;
  o.folds = folds;
  o.n_scenarios = n_scenarios;
  o.seed = seed;
  o.build.max_depth = max_depth;
  o.build.min_leaf = min_leaf;
  o.build.prune_fraction = prune_fraction;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_loadpct, m) {
  m.doc() = "Predictive clustering trees for load scenario generation";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", m.attr("Error"));
  py::register_exception<SchemaError>(m, "SchemaError", m.attr("Error"));

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", &Dataset::size)
      .def_property_readonly("series_length", &Dataset::series_length)
      .def_property_readonly("attribute_names",
                             [](const Dataset& d) {
                               std::vector<std::string> names;
                               for (const auto& e : d.schema()) names.push_back(e.name);
                               return names;
                             })
      .def_property_readonly("consumer_ids", [](const Dataset& d) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < d.size(); ++i) ids.push_back(d.consumer_id(i));
        return ids;
      })
      .def_property_readonly("dates", [](const Dataset& d) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < d.size(); ++i) out.push_back(format_date(d.date(i)));
        return out;
      })
      .def("consumers", &Dataset::consumers)
      .def("attributes", [](const Dataset& d) { return to_array(d.attribute_matrix()); })
      .def("series", [](const Dataset& d) { return to_array(d.series_matrix()); })
      .def("subset_consumers", [](const Dataset& d, const std::vector<std::string>& ids) {
        return d.subset(d.rows_of(ids));
      })
      .def("validate", [](const Dataset& d) {
        const auto report = validate_dataset(d);
        return report.to_string();
      })
      .def("write_csv", [](const Dataset& d, const std::string& path) { write_dataset_csv(path, d); });

  m.def("read_dataset", [](const std::string& path) { return read_dataset_csv(path); }, py::arg("path"));

  m.def(
      "synth",
      [](std::size_t n_consumers, double noise, double weather_coupling, std::uint64_t seed, int years,
         std::size_t series_length) {
        SynthSpec spec;
        spec.n_consumers = n_consumers;
        spec.noise = noise;
        spec.weather_coupling = weather_coupling;
        spec.seed = seed;
        spec.years = years;
        spec.series_length = series_length;
        return synth_dataset(spec).dataset;
      },
      py::arg("n_consumers") = 200, py::arg("noise") = 0.0, py::arg("weather_coupling") = 0.0,
      py::arg("seed") = 1, py::arg("years") = 1, py::arg("series_length") = 48);

  py::class_<Pct>(m, "Model")
      .def_property_readonly("node_count", &Pct::node_count)
      .def_property_readonly("leaf_count", &Pct::leaf_count)
      .def_property_readonly("depth", &Pct::depth)
      .def_property_readonly("has_embedded_series", &Pct::has_embedded_series)
      .def_property_readonly("root_attribute",
                             [](const Pct& t) -> py::object {
                               if (t.node(0).is_leaf) return py::none();
                               return py::str(t.schema()[t.node(0).attribute].name);
                             })
      .def("route", [](const Pct& t, const Array& q) { return t.route(as_vector(q)); }, py::arg("attributes"))
      .def("to_json", &serialize_model)
      .def("save", [](const Pct& t, const std::string& path) { save_model(path, t); })
      .def("embed_series", [](const Pct& t, const Dataset& train) { return t.with_embedded_series(train.series_matrix()); })
      .def("dot",
           [](const Pct& t, const Dataset* train) {
             std::ostringstream os;
             RenderOptions opts;
             opts.train = train;
             write_dot(os, compress_tree(t), t, opts);
             return os.str();
           },
           py::arg("train") = nullptr)
      .def("outline", [](const Pct& t) {
        std::ostringstream os;
        write_outline(os, compress_tree(t), t);
        return os.str();
      });

  m.def("load_model", &load_model, py::arg("path"));
  m.def("model_from_json", [](const std::string& text) { return deserialize_model(text); }, py::arg("text"));

  m.def(
      "fit",
      [](const Dataset& train, std::size_t max_depth, std::size_t min_leaf, double prune_fraction,
         std::uint64_t seed, std::size_t threads) {
        BuildConfig cfg;
        cfg.max_depth = max_depth;
        cfg.min_leaf = min_leaf;
        cfg.prune_fraction = prune_fraction;
        cfg.seed = seed;
        cfg.threads = threads;
        py::gil_scoped_release release;
        return fit_pct(train, cfg).tree();
      },
      py::arg("train"), py::arg("max_depth") = 12, py::arg("min_leaf") = 300, py::arg("prune_fraction") = 0.25,
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "generate",
      [](const Pct& tree, const Dataset* train, const Array& query, std::size_t n, std::uint64_t seed) {
        const auto set =
            generate_scenarios(tree, train ? &train->series_matrix() : nullptr, as_vector(query), n, seed);
        return py::make_tuple(to_array(set.scenarios), set.leaf_id);
      },
      py::arg("model"), py::arg("train"), py::arg("query"), py::arg("n_scenarios") = 250, py::arg("seed") = 0);

  m.def(
      "random_baseline",
      [](const Dataset& train, std::size_t n, std::uint64_t seed, std::uint64_t query_index) {
        const std::vector<double> none;
        return to_array(random_baseline(train.series_matrix(), none, n, seed, query_index).scenarios);
      },
      py::arg("train"), py::arg("n_scenarios") = 250, py::arg("seed") = 0, py::arg("query_index") = 0);

  m.def(
      "energy_score", [](const Array& scenarios, const Array& truth) {
        return energy_score(from_array(scenarios), as_vector(truth));
      },
      py::arg("scenarios"), py::arg("truth"));

  m.def(
      "node_quantiles",
      [](const Pct& tree, const Dataset* train, std::size_t node, std::optional<std::vector<double>> levels) {
        const auto lv = levels ? *levels : default_quantile_levels();
        return to_array(node_quantiles(tree, tree.store(train ? &train->series_matrix() : nullptr), node, lv).curves);
      },
      py::arg("model"), py::arg("train"), py::arg("node"), py::arg("levels") = py::none());

  m.def(
      "cross_validate",
      [](const Dataset& data, const std::vector<std::string>& methods, std::size_t folds, std::size_t n_scenarios,
         std::uint64_t seed, std::size_t max_depth, std::size_t min_leaf, double prune_fraction,
         std::size_t threads) {
        const auto ms = methods_of(methods);
        const auto opts = eval_options(folds, n_scenarios, seed, max_depth, min_leaf, prune_fraction, threads);
        std::vector<EvalReport> reports;
        {
          py::gil_scoped_release release;
          reports = cross_validate(data, ms, opts);
        }
        py::list out;
        for (const auto& r : reports) out.append(report_dict(r));
        return out;
      },
      py::arg("data"), py::arg("methods") = std::vector<std::string>{"pct"}, py::arg("folds") = 5,
      py::arg("n_scenarios") = 250, py::arg("seed") = 0, py::arg("max_depth") = 12, py::arg("min_leaf") = 300,
      py::arg("prune_fraction") = 0.25, py::arg("threads") = 1);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int status = cli::run(args, out, err);
        return py::make_tuple(status, out.str(), err.str());
      },
      py::arg("args"));
}
