#include "loadpct/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "loadpct/core.hpp"
#include "loadpct/csv.hpp"
#include "loadpct/data.hpp"
#include "loadpct/eval.hpp"
#include "loadpct/export.hpp"
#include "loadpct/pct.hpp"
#include "loadpct/rng.hpp"
#include "loadpct/scengen.hpp"

namespace loadpct::cli {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "0.1.0";

/// Flat JSON object of long option names for the invoked subcommand;
/// arrays become repeated values. Underscores may replace dashes.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json doc = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
      const auto& name = opt->get_lnames().front();
      if (name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        doc[name] = opt->results().size() == 1 ? json(opt->results().front()) : json(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        doc[name] = opt->get_default_str();
      }
    }
    return doc.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      doc = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    const auto active = root_->get_subcommands();
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      CLI::ConfigItem item;
      if (!active.empty()) item.parents = {active.front()->get_name()};
      item.name = key;
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(text(v));
      } else {
        item.inputs.push_back(text(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* root_;
};

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << contents;
  if (!out) throw Error("failed writing " + path);
}

/// Common per-run state: the reproducibility log under construction.
struct Run {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string log_path;
  std::string config_path;
  json inputs = json::object();
  json outputs = json::array();
  json seeds = json::object();
  json timings = json::object();
  json details = json::object();

  void input(const std::string& path) { inputs[path] = csv::hex64(csv::hash_file(path)); }
  void output(const std::string& path, const std::string& contents) {
    write_file(path, contents);
    outputs.push_back(path);
  }
};

json effective_config(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1 || r.size() > 1) {
        cfg[name] = r;
      } else {
        cfg[name] = r.empty() ? std::string() : r.front();
      }
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

void write_log(const Run& run, const CLI::App& sub) {
  if (run.log_path.empty()) return;
  json log;
  log["tool"] = "loadpct";
  log["version"] = kVersion;
  log["command"] = run.command;
  log["argv"] = run.argv;
  log["config_file"] = run.config_path;
  log["effective_config"] = effective_config(sub);
  log["rng"] = Rng::kAlgorithm;
  json seeds = run.seeds;
  seeds["seed"] = run.seed;
  log["seeds"] = std::move(seeds);
  log["threads"] = run.threads;
  log["inputs"] = run.inputs;
  log["outputs"] = run.outputs;
  log["timings_s"] = run.timings;
  log["details"] = run.details;
  write_file(run.log_path, log.dump(2) + "\n");
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Dataset load_dataset(Run& run, const std::string& path) {
  run.input(path);
  return read_dataset_csv(path);
}

/// Loads a model and, when given, the training file its member ids index.
struct LoadedModel {
  Pct tree;
  std::optional<Dataset> train;
  const SeriesMatrix* store() const { return train ? &train->series_matrix() : nullptr; }
};

LoadedModel load_model_with_train(Run& run, const std::string& model_path,
                                  const std::string& train_path) {
  run.input(model_path);
  LoadedModel m{load_model(model_path), std::nullopt};
  if (!train_path.empty()) {
    m.train = load_dataset(run, train_path);
    m.tree.check_compatible(m.train->schema(), m.train->series_length());
    if (!m.tree.has_embedded_series()) {
      const StoreRef actual{m.train->size(), m.train->series_matrix().fingerprint()};
      if (!(actual == m.tree.store_ref())) {
        throw SchemaError("training file " + train_path + " is not the one the model was built on (" +
                          std::to_string(actual.rows) + " rows, fingerprint " +
                          csv::hex64(actual.fingerprint) + "; model expects " +
                          std::to_string(m.tree.store_ref().rows) + " rows, fingerprint " +
                          csv::hex64(m.tree.store_ref().fingerprint) + ")");
      }
    }
  } else if (!m.tree.has_embedded_series()) {
    throw Error("model " + model_path +
                " does not embed its series; pass --train with the training file it was built on");
  }
  return m;
}

/// Query attributes from a CSV holding at least the model's attribute
/// columns; other columns are ignored.
SeriesMatrix read_queries(Run& run, const std::string& path, const Schema& schema) {
  run.input(path);
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  do {
    if (!csv::next_line(in, line)) throw ParseError(path + ": missing header");
  } while (line.starts_with('#'));
  const auto header = csv::split_line(line);
  std::vector<std::size_t> col(schema.size());
  std::string missing;
  for (std::size_t a = 0; a < schema.size(); ++a) {
    const auto it = std::find(header.begin(), header.end(), schema[a].name);
    if (it == header.end()) {
      missing += (missing.empty() ? "" : ", ") + schema[a].name;
    } else {
      col[a] = static_cast<std::size_t>(it - header.begin());
    }
  }
  if (!missing.empty()) throw SchemaError(path + ": missing attribute columns " + missing);
  SeriesMatrix queries(schema.size());
  std::vector<double> row(schema.size());
  std::size_t line_no = 1;
  while (csv::next_line(in, line)) {
    ++line_no;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (std::size_t a = 0; a < schema.size(); ++a) {
      row[a] = csv::parse_number(fields[col[a]], path + ":" + std::to_string(line_no));
    }
    queries.push_back(row);
  }
  return queries;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> methods;
  for (const auto& n : names) methods.push_back(method_from_string(n));
  return methods;
}

json pruning_details(const FitResult& fit) {
  return {{"build_rows", fit.split.build_rows.size()},
          {"prune_rows", fit.split.prune_rows.size()},
          {"nodes_before", fit.pruning.nodes_before},
          {"nodes_after", fit.pruning.nodes_after},
          {"error_before", fit.pruning.error_before},
          {"error_after", fit.pruning.error_after},
          {"unreached_collapsed", fit.pruning.unreached_collapsed},
          {"empty_prune_set", fit.pruning.empty_prune_set}};
}

/// Options shared by every command that induces a tree.
struct TreeFlags {
  std::size_t max_depth = 12;
  std::size_t min_leaf = 300;
  double prune_fraction = 0.25;

  void add(CLI::App* sub) {
    sub->add_option("--max-depth", max_depth, "Maximum splits on any root-to-leaf path")
        ->capture_default_str();
    sub->add_option("--min-leaf", min_leaf, "Minimum training instances per leaf")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--prune-fraction", prune_fraction,
                    "Share of training consumers held out for reduced-error pruning (0 disables)")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.99));
  }
  BuildConfig config(std::uint64_t seed, std::size_t threads) const {
    BuildConfig c;
    c.max_depth = max_depth;
    c.min_leaf = min_leaf;
    c.prune_fraction = prune_fraction;
    c.seed = seed;
    c.threads = threads;
    return c;
  }
};

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Predictive clustering trees for daylong load scenario generation", "loadpct"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.fallthrough(true);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "",
                 "JSON file of option defaults for the subcommand (keys are long flag names; flags win)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Run run;
  run.argv = args;
  std::string out_path;
  std::vector<CLI::App*> subs;

  auto add_sub = [&](const std::string& name, const std::string& description) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--seed", run.seed, "Base random seed")->capture_default_str();
    sub->add_option("--threads", run.threads, "Worker threads; results do not depend on it")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--log", run.log_path,
                    "Reproducibility log path (default: <output>.log.json)");
    subs.push_back(sub);
    return sub;
  };

  // ingest
  std::string meter_path, survey_path, encoding_path, weather_path, holidays_path;
  int period_minutes = 30;
  bool no_yearly = false;
  CLI::App* ingest = add_sub("ingest", "Build a day-instance dataset from meter, survey and weather files");
  ingest->add_option("--meter", meter_path, "Meter CSV consumer_id,timestamp,kwh")->required()->check(CLI::ExistingFile);
  ingest->add_option("--survey", survey_path, "Survey CSV consumer_id,<raw columns>")->required()->check(CLI::ExistingFile);
  ingest->add_option("--encoding", encoding_path, "JSON encoding schema for the survey columns")->required()->check(CLI::ExistingFile);
  ingest->add_option("--weather", weather_path, "Weather CSV, one row per date")->required()->check(CLI::ExistingFile);
  ingest->add_option("--holidays", holidays_path, "Holiday dates, one ISO date per line")->required()->check(CLI::ExistingFile);
  ingest->add_option("--period-minutes", period_minutes, "Meter sampling period")->capture_default_str()->check(CLI::PositiveNumber);
  ingest->add_flag("--no-yearly-consumption", no_yearly, "Do not derive yearly_consumption from meter data");
  ingest->add_option("-o,--out", out_path, "Output dataset CSV")->required();

  // synth
  std::string spec_path, weather_out, holidays_out, truth_out;
  std::optional<std::size_t> synth_consumers, synth_length;
  std::optional<int> synth_years;
  std::optional<double> synth_noise, synth_coupling;
  CLI::App* synth = add_sub("synth", "Generate a synthetic dataset with known structure");
  synth->add_option("--spec", spec_path, "JSON generator spec (built-in defaults otherwise)")->check(CLI::ExistingFile);
  synth->add_option("--consumers", synth_consumers, "Override the number of consumers");
  synth->add_option("--years", synth_years, "Override the number of years");
  synth->add_option("--length", synth_length, "Override the values per day");
  synth->add_option("--noise", synth_noise, "Override the noise standard deviation");
  synth->add_option("--weather-coupling", synth_coupling, "Override the heating-degree coupling");
  synth->add_option("--weather-out", weather_out, "Also write the weather table");
  synth->add_option("--holidays-out", holidays_out, "Also write the holiday list");
  synth->add_option("--truth-out", truth_out, "Also write ground-truth JSON");
  synth->add_option("-o,--out", out_path, "Output dataset CSV")->required();

  // train
  std::string train_path, model_path;
  bool embed_series = false;
  TreeFlags tree_flags;
  CLI::App* train = add_sub("train", "Fit a pruned PCT on a dataset and save the model");
  train->add_option("--train", train_path, "Training dataset CSV")->required()->check(CLI::ExistingFile);
  tree_flags.add(train);
  train->add_flag("--embed-series", embed_series, "Store leaf series in the model instead of referencing the training file");
  train->add_option("-o,--out", out_path, "Output model JSON")->required();

  // generate
  std::string query_path, method_name = "pct";
  std::size_t n_scenarios = 250;
  CLI::App* generate = add_sub("generate", "Generate load scenarios for each query row");
  generate->add_option("--model", model_path, "Model JSON (required for --method pct)")->check(CLI::ExistingFile);
  generate->add_option("--train", train_path, "Training dataset the model references, or the pool for --method random")->check(CLI::ExistingFile);
  generate->add_option("--queries", query_path, "CSV with the model's attribute columns")->required()->check(CLI::ExistingFile);
  generate->add_option("--method", method_name, "pct or random")->capture_default_str();
  generate->add_option("-n,--n-scenarios", n_scenarios, "Scenarios per query")->capture_default_str()->check(CLI::PositiveNumber);
  generate->add_option("-o,--out", out_path, "Output scenario CSV")->required();

  // evaluate
  std::string test_path, per_instance_path;
  CLI::App* evaluate = add_sub("evaluate", "Score a saved model on a test dataset with the Energy Score");
  evaluate->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--train", train_path, "Training dataset the model references")->check(CLI::ExistingFile);
  evaluate->add_option("--test", test_path, "Test dataset CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("-n,--n-scenarios", n_scenarios, "Scenarios per test instance")->capture_default_str()->check(CLI::PositiveNumber);
  evaluate->add_option("--per-instance", per_instance_path, "Also write per-instance scores");
  evaluate->add_option("-o,--out", out_path, "Output report CSV")->required();

  // crossval
  std::string data_path;
  std::size_t folds = 5;
  std::vector<std::string> method_names;
  CLI::App* crossval = add_sub("crossval", "Consumer-level k-fold cross-validation");
  crossval->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  crossval->add_option("-k,--folds", folds, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000000));
  crossval->add_option("--method", method_names, "pct or random; repeat for several (default pct)");
  crossval->add_option("-n,--n-scenarios", n_scenarios, "Scenarios per test instance")->capture_default_str()->check(CLI::PositiveNumber);
  tree_flags.add(crossval);
  crossval->add_option("--per-instance", per_instance_path, "Also write per-instance scores");
  crossval->add_option("-o,--out", out_path, "Output report CSV")->required();

  // scaling-bench
  std::vector<std::size_t> sizes;
  std::size_t test_consumers = 0;
  CLI::App* scaling = add_sub("scaling-bench", "Train on nested consumer subsets and score a fixed test set");
  scaling->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
  scaling->add_option("--sizes", sizes, "Ascending training sizes in consumers, e.g. 100,250,500")->required()->delimiter(',');
  scaling->add_option("--test-consumers", test_consumers, "Held-out test consumers (default: a fifth of all consumers)");
  scaling->add_option("--method", method_names, "pct or random; repeat for several (default both)");
  scaling->add_option("-n,--n-scenarios", n_scenarios, "Scenarios per test instance")->capture_default_str()->check(CLI::PositiveNumber);
  tree_flags.add(scaling);
  scaling->add_option("-o,--out", out_path, "Output table CSV")->required();

  // export-tree
  std::string format = "dot";
  CLI::App* export_tree = add_sub("export-tree", "Render the compressed tree as DOT or a text outline");
  export_tree->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  export_tree->add_option("--train", train_path, "Training dataset, adds yearly-consumption ranges")->check(CLI::ExistingFile);
  export_tree->add_option("--format", format, "dot or outline")->capture_default_str()->check(CLI::IsMember({"dot", "outline"}));
  export_tree->add_option("-o,--out", out_path, "Output file")->required();

  // node-quantiles
  std::vector<std::size_t> node_ids;
  std::vector<double> levels;
  CLI::App* quantiles = add_sub("node-quantiles", "Pointwise quantile bands of node members");
  quantiles->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  quantiles->add_option("--train", train_path, "Training dataset the model references")->check(CLI::ExistingFile);
  quantiles->add_option("--node", node_ids, "Node id; repeatable (default: every leaf)");
  quantiles->add_option("--levels", levels, "Quantile levels (default 0.05,0.10,...,0.95)")->delimiter(',');
  quantiles->add_option("-o,--out", out_path, "Output quantiles CSV")->required();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  CLI::App* sub = nullptr;
  for (CLI::App* s : subs)
    if (s->parsed()) sub = s;
  run.command = sub->get_name();
  if (auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0) {
    run.config_path = cfg->as<std::string>();
    run.input(run.config_path);
  }
  if (run.log_path.empty()) run.log_path = out_path + ".log.json";

  EvalOptions eval;
  eval.folds = folds;
  eval.n_scenarios = n_scenarios;
  eval.seed = run.seed;
  eval.threads = run.threads;
  eval.build = tree_flags.config(run.seed, run.threads);

  if (sub == ingest) {
    const auto t0 = Clock::now();
    for (const auto* p : {&meter_path, &survey_path, &encoding_path, &weather_path, &holidays_path}) run.input(*p);
    const MeterTable meter = read_meter_csv(meter_path);
    const SurveyTable survey = read_survey_csv(survey_path);
    const EncodingSchema encoding = read_encoding_json(encoding_path);
    const WeatherTable weather = read_weather_csv(weather_path);
    const HolidaySet holidays = read_holidays(holidays_path);
    run.timings["read"] = seconds_since(t0);
    IngestOptions opts;
    opts.sampling_period = std::chrono::minutes(period_minutes);
    opts.derive_yearly_consumption = !no_yearly;
    const auto t1 = Clock::now();
    const IngestResult result = assemble_dataset(meter, encode_attributes(survey, encoding), weather, holidays, opts);
    run.timings["assemble"] = seconds_since(t1);
    std::ostringstream ss;
    write_dataset_csv(ss, result.dataset);
    run.output(out_path, ss.str());
    run.details["instances"] = result.dataset.size();
    run.details["consumers"] = result.dataset.consumers().size();
    run.details["dropped_days"] = result.dropped_days;
    out << "wrote " << result.dataset.size() << " day instances to " << out_path << '\n';
  } else if (sub == synth) {
    SynthSpec spec;
    if (!spec_path.empty()) {
      run.input(spec_path);
      spec = read_synth_spec(spec_path);
    }
    if (synth->get_option("--seed")->count() > 0 || spec_path.empty()) spec.seed = run.seed;
    else run.seed = spec.seed;
    if (synth_consumers) spec.n_consumers = *synth_consumers;
    if (synth_years) spec.years = *synth_years;
    if (synth_length) spec.series_length = *synth_length;
    if (synth_noise) spec.noise = *synth_noise;
    if (synth_coupling) spec.weather_coupling = *synth_coupling;
    const auto t0 = Clock::now();
    const SynthResult result = synth_dataset(spec);
    run.timings["generate"] = seconds_since(t0);
    std::ostringstream ss;
    write_dataset_csv(ss, result.dataset, result.header_comments);
    run.output(out_path, ss.str());
    if (!weather_out.empty()) {
      std::ostringstream ws;
      write_weather_csv(ws, result.weather);
      run.output(weather_out, ws.str());
    }
    if (!holidays_out.empty()) {
      std::string text;
      for (const Date& d : result.holidays) text += format_date(d) + "\n";
      run.output(holidays_out, text);
    }
    if (!truth_out.empty()) run.output(truth_out, synth_truth_to_json(result.truth));
    run.details["spec"] = json::parse(synth_spec_to_json(spec));
    out << "wrote " << result.dataset.size() << " day instances to " << out_path << '\n';
  } else if (sub == train) {
    const Dataset data = load_dataset(run, train_path);
    const BuildConfig config = tree_flags.config(run.seed, run.threads);
    const auto t0 = Clock::now();
    const FitResult fit = fit_pct(data, config);
    run.timings["train"] = seconds_since(t0);
    const Pct tree = embed_series ? fit.tree().with_embedded_series(data.series_matrix()) : fit.tree();
    run.output(out_path, serialize_model(tree));
    run.details["pruning"] = pruning_details(fit);
    run.details["leaves"] = tree.leaf_count();
    run.details["depth"] = tree.depth();
    out << "trained " << tree.node_count() << " nodes, " << tree.leaf_count() << " leaves; model in " << out_path << '\n';
  } else if (sub == generate) {
    const Method method = method_from_string(method_name);
    std::vector<ScenarioSet> sets;
    if (method == Method::pct) {
      if (model_path.empty()) throw Error("--method pct needs --model");
      const LoadedModel m = load_model_with_train(run, model_path, train_path);
      const SeriesMatrix queries = read_queries(run, query_path, m.tree.schema());
      const auto t0 = Clock::now();
      sets.resize(queries.rows());
      for (std::size_t q = 0; q < queries.rows(); ++q) {
        sets[q] = generate_scenarios(m.tree, m.store(), queries.row(q), n_scenarios, run.seed, q);
      }
      run.timings["generate"] = seconds_since(t0);
    } else {
      if (train_path.empty()) throw Error("--method random needs --train");
      const Dataset pool = load_dataset(run, train_path);
      const SeriesMatrix queries = read_queries(run, query_path, pool.schema());
      const auto t0 = Clock::now();
      sets.resize(queries.rows());
      for (std::size_t q = 0; q < queries.rows(); ++q) {
        sets[q] = random_baseline(pool.series_matrix(), queries.row(q), n_scenarios, run.seed, q);
      }
      run.timings["generate"] = seconds_since(t0);
    }
    std::ostringstream ss;
    write_scenarios_csv(ss, sets);
    run.output(out_path, ss.str());
    run.details["queries"] = sets.size();
    json query_seeds = json::array();
    for (const auto& s : sets) query_seeds.push_back(s.seed);
    run.seeds["per_query"] = std::move(query_seeds);
    out << "wrote " << sets.size() << " x " << n_scenarios << " scenarios to " << out_path << '\n';
  } else if (sub == evaluate) {
    const LoadedModel m = load_model_with_train(run, model_path, train_path);
    const Dataset test = load_dataset(run, test_path);
    const EvalReport report = evaluate_model(m.tree, m.store(), test, eval, run.seed);
    const std::vector<EvalReport> reports{report};
    std::ostringstream ss;
    write_report_csv(ss, reports);
    run.output(out_path, ss.str());
    if (!per_instance_path.empty()) {
      std::ostringstream ps;
      write_per_instance_csv(ps, reports);
      run.output(per_instance_path, ps.str());
    }
    run.timings["predict"] = report.predict_s;
    run.timings["score"] = report.score_s;
    out << "mean ES " << csv::format_number(report.mean_es) << " over " << report.n_test_instances << " instances\n";
  } else if (sub == crossval || sub == scaling) {
    const Dataset data = load_dataset(run, data_path);
    if (method_names.empty()) {
      method_names = sub == crossval ? std::vector<std::string>{"pct"} : std::vector<std::string>{"pct", "random"};
    }
    const auto methods = parse_methods(method_names);
    std::ostringstream ss;
    if (sub == crossval) {
      const auto t0 = Clock::now();
      const auto reports = cross_validate(data, methods, eval);
      run.timings["total"] = seconds_since(t0);
      json per = json::array();
      for (const auto& r : reports) {
        per.push_back({{"fold", r.fold}, {"method", to_string(r.method)}, {"train", r.train_s},
                       {"predict", r.predict_s}, {"score", r.score_s}});
      }
      run.timings["reports"] = std::move(per);
      json folds_seeds = json::array();
      for (std::size_t f = 0; f < eval.folds; ++f) folds_seeds.push_back(mix_seed(run.seed, f));
      run.seeds["per_fold"] = std::move(folds_seeds);
      write_report_csv(ss, reports);
      run.output(out_path, ss.str());
      if (!per_instance_path.empty()) {
        std::ostringstream ps;
        write_per_instance_csv(ps, reports);
        run.output(per_instance_path, ps.str());
      }
      for (const auto& r : reports) {
        out << "fold " << r.fold << ' ' << to_string(r.method) << " mean ES " << csv::format_number(r.mean_es) << '\n';
      }
    } else {
      const std::size_t n_consumers = data.consumers().size();
      const std::size_t n_test = test_consumers > 0 ? test_consumers : std::max<std::size_t>(1, n_consumers / 5);
      const auto test_ids = pick_consumers(data, n_test, run.seed);
      const auto t0 = Clock::now();
      const auto rows = size_scaling_experiment(data, sizes, test_ids, methods, eval);
      run.timings["total"] = seconds_since(t0);
      run.details["test_consumers"] = test_ids;
      write_scaling_csv(ss, rows);
      run.output(out_path, ss.str());
      for (const auto& r : rows) {
        out << r.n_consumers << " consumers " << to_string(r.method) << " mean ES " << csv::format_number(r.mean_es) << '\n';
      }
    }
  } else if (sub == export_tree) {
    run.input(model_path);
    const Pct tree = load_model(model_path);
    std::optional<Dataset> data;
    if (!train_path.empty()) {
      data = load_dataset(run, train_path);
      tree.check_compatible(data->schema(), data->series_length());
    }
    const DisplayTree display = compress_tree(tree);
    RenderOptions opts;
    if (data && data->size() == tree.store_ref().rows &&
        data->series_matrix().fingerprint() == tree.store_ref().fingerprint) {
      opts.train = &*data;
    }
    std::ostringstream ss;
    if (format == "dot") write_dot(ss, display, tree, opts);
    else write_outline(ss, display, tree, opts);
    run.output(out_path, ss.str());
    run.details["display_nodes"] = display.nodes.size();
    out << "wrote " << format << " for " << display.nodes.size() << " display nodes to " << out_path << '\n';
  } else if (sub == quantiles) {
    const LoadedModel m = load_model_with_train(run, model_path, train_path);
    if (levels.empty()) levels = default_quantile_levels();
    if (node_ids.empty()) node_ids = m.tree.leaves();
    const SeriesMatrix& store = m.tree.store(m.store());
    std::vector<NodeQuantiles> bands;
    for (std::size_t id : node_ids) bands.push_back(node_quantiles(m.tree, store, id, levels));
    std::ostringstream ss;
    write_quantiles_csv(ss, bands);
    run.output(out_path, ss.str());
    out << "wrote quantiles for " << bands.size() << " nodes to " << out_path << '\n';
  }
  write_log(run, *sub);
  return 0;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(std::vector<std::string>(args.begin(), args.end()), out, err);
  } catch (const SchemaError& e) {
    err << "loadpct: schema mismatch: " << e.what() << '\n';
  } catch (const ParseError& e) {
    err << "loadpct: parse error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "loadpct: error: " << e.what() << '\n';
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace loadpct::cli
