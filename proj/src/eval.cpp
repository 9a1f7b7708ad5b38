#include "loadpct/eval.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "loadpct/csv.hpp"
#include "loadpct/parallel.hpp"
#include "loadpct/rng.hpp"
#include "loadpct/scengen.hpp"
#include "loadpct/variance.hpp"

namespace loadpct {

namespace {

constexpr std::uint64_t kFoldStream = 0x666f6c64ULL;
constexpr std::uint64_t kBuildStream = 0x6275696cULL;
constexpr std::uint64_t kGenerateStream = 0x67656e65ULL;
constexpr std::uint64_t kScalingStream = 0x7363616cULL;
// Test instances generated and scored per batch; bounds scenario memory.
constexpr std::size_t kBatch = 512;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Generates scenarios for every test row with `make`, scores them, and
/// records the generation and scoring wall time separately.
template <typename Make>
void predict_and_score(const Dataset& test, std::size_t threads, EvalReport& report, Make&& make) {
  report.n_test_instances = test.size();
  report.per_instance_es.assign(test.size(), 0.0);
  std::vector<ScenarioSet> batch;
  for (std::size_t begin = 0; begin < test.size(); begin += kBatch) {
    const std::size_t end = std::min(test.size(), begin + kBatch);
    batch.assign(end - begin, ScenarioSet{});
    auto t0 = Clock::now();
    parallel_for(end - begin, threads, [&](std::size_t k) { batch[k] = make(begin + k); });
    report.predict_s += seconds_since(t0);
    t0 = Clock::now();
    parallel_for(end - begin, threads, [&](std::size_t k) {
      report.per_instance_es[begin + k] = energy_score(batch[k].scenarios, test.series(begin + k));
    });
    report.score_s += seconds_since(t0);
  }
  double total = 0.0;
  for (double es : report.per_instance_es) total += es;
  report.mean_es = test.empty() ? 0.0 : total / static_cast<double>(test.size());
  report.test_consumers.resize(test.size());
  report.test_dates.resize(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    report.test_consumers[i] = test.consumer_id(i);
    report.test_dates[i] = test.date(i);
  }
}

}  // namespace

double energy_score(const SeriesMatrix& scenarios, std::span<const double> truth) {
  const std::size_t n = scenarios.rows();
  if (n == 0) throw std::invalid_argument("energy score needs at least one scenario");
  if (scenarios.width() != truth.size()) {
    throw SchemaError("scenario length " + std::to_string(scenarios.width()) +
                      " differs from observation length " + std::to_string(truth.size()));
  }
  double to_truth = 0.0;
  for (std::size_t s = 0; s < n; ++s) to_truth += euclidean_distance(scenarios.row(s), truth);
  // The double sum is symmetric with a zero diagonal: sum over s < r twice.
  double spread = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const auto xs = scenarios.row(s);
    double row_sum = 0.0;
    for (std::size_t r = s + 1; r < n; ++r) row_sum += euclidean_distance(xs, scenarios.row(r));
    spread += row_sum;
  }
  const double dn = static_cast<double>(n);
  return to_truth / dn - spread / (dn * dn);
}

// ---------------------------------------------------------------------------
// Folds

std::size_t FoldAssignment::fold(const std::string& consumer_id) const {
  const auto it = fold_of.find(consumer_id);
  if (it == fold_of.end()) throw Error("consumer '" + consumer_id + "' has no fold");
  return it->second;
}

std::vector<std::string> FoldAssignment::consumers_in(std::size_t f) const {
  std::vector<std::string> ids;
  for (const auto& [id, fold] : fold_of)
    if (fold == f) ids.push_back(id);
  return ids;
}

FoldAssignment make_folds(std::span<const std::string> consumer_ids, std::size_t k,
                          std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
  std::vector<std::string> ids(consumer_ids.begin(), consumer_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < k) {
    throw Error("cannot split " + std::to_string(ids.size()) + " consumers into " +
                std::to_string(k) + " folds");
  }
  Rng rng(mix_seed(seed, kFoldStream));
  rng.shuffle(ids);
  FoldAssignment folds;
  folds.k = k;
  folds.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) folds.fold_of[ids[i]] = i % k;
  return folds;
}

std::string_view to_string(Method method) {
  return method == Method::pct ? "pct" : "random";
}

Method method_from_string(std::string_view text) {
  if (text == "pct") return Method::pct;
  if (text == "random") return Method::random;
  throw Error("unknown method '" + std::string(text) + "' (expected pct or random)");
}

// ---------------------------------------------------------------------------
// Evaluation

EvalReport evaluate_split(const Dataset& train, const Dataset& test, Method method,
                          const EvalOptions& options, std::uint64_t seed) {
  if (train.empty()) throw Error("training set is empty");
  if (train.schema() != test.schema() || train.series_length() != test.series_length()) {
    throw SchemaError("training and test sets disagree on schema or series length");
  }
  EvalReport report;
  report.method = method;
  report.n_train_instances = train.size();
  const std::uint64_t gen_seed = mix_seed(seed, kGenerateStream);

  if (method == Method::pct) {
    BuildConfig config = options.build;
    config.seed = mix_seed(seed, kBuildStream);
    config.threads = options.threads;
    const auto t0 = Clock::now();
    auto fit = std::make_shared<const FitResult>(fit_pct(train, config));
    report.train_s = seconds_since(t0);
    const Pct& tree = fit->tree();
    report.n_leaves = tree.leaf_count();
    const SeriesMatrix& store = train.series_matrix();
    predict_and_score(test, options.threads, report, [&](std::size_t i) {
      return generate_scenarios(tree, &store, test.attributes(i), options.n_scenarios, gen_seed, i);
    });
    if (options.keep_models) report.fit = std::move(fit);
  } else {
    const auto t0 = Clock::now();
    const SeriesMatrix pool = train.series_matrix();
    report.train_s = seconds_since(t0);
    report.n_leaves = 1;
    predict_and_score(test, options.threads, report, [&](std::size_t i) {
      return random_baseline(pool, test.attributes(i), options.n_scenarios, gen_seed, i);
    });
  }
  return report;
}

EvalReport evaluate_model(const Pct& tree, const SeriesMatrix* train_store, const Dataset& test,
                          const EvalOptions& options, std::uint64_t seed) {
  tree.check_compatible(test.schema(), test.series_length());
  const SeriesMatrix& store = tree.store(train_store);
  EvalReport report;
  report.method = Method::pct;
  report.n_train_instances = tree.members_under(0).size();
  report.n_leaves = tree.leaf_count();
  const std::uint64_t gen_seed = mix_seed(seed, kGenerateStream);
  predict_and_score(test, options.threads, report, [&](std::size_t i) {
    return generate_scenarios(tree, &store, test.attributes(i), options.n_scenarios, gen_seed, i);
  });
  return report;
}

std::vector<EvalReport> cross_validate(const Dataset& dataset, std::span<const Method> methods,
                                       const EvalOptions& options) {
  const auto consumers = dataset.consumers();
  const FoldAssignment folds = make_folds(consumers, options.folds, options.seed);
  std::vector<EvalReport> reports;
  for (std::size_t f = 0; f < folds.k; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < dataset.size(); ++r) {
      (folds.fold(dataset.consumer_id(r)) == f ? test_rows : train_rows).push_back(r);
    }
    const Dataset train = dataset.subset(train_rows);
    const Dataset test = dataset.subset(test_rows);
    for (const Method m : methods) {
      EvalReport report = evaluate_split(train, test, m, options, mix_seed(options.seed, f));
      report.fold = f;
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

std::vector<std::string> pick_consumers(const Dataset& dataset, std::size_t count,
                                        std::uint64_t seed) {
  auto ids = dataset.consumers();
  if (count > ids.size()) {
    throw Error("requested " + std::to_string(count) + " consumers, dataset has " +
                std::to_string(ids.size()));
  }
  Rng rng(mix_seed(seed, kScalingStream + 1));
  rng.shuffle(ids);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<ScalingRow> size_scaling_experiment(const Dataset& dataset,
                                                std::span<const std::size_t> train_sizes,
                                                std::span<const std::string> test_consumers,
                                                std::span<const Method> methods,
                                                const EvalOptions& options) {
  if (!std::is_sorted(train_sizes.begin(), train_sizes.end())) {
    throw Error("training sizes must be ascending");
  }
  const std::set<std::string> test_ids(test_consumers.begin(), test_consumers.end());
  std::vector<std::string> pool;
  for (const auto& id : dataset.consumers())
    if (!test_ids.count(id)) pool.push_back(id);
  for (const auto& id : test_ids) {
    if (dataset.rows_of(std::span<const std::string>(&id, 1)).empty()) {
      throw Error("test consumer '" + id + "' is not in the dataset");
    }
  }
  Rng rng(mix_seed(options.seed, kScalingStream));
  rng.shuffle(pool);

  const Dataset test = dataset.subset(dataset.rows_of(test_consumers));
  std::vector<ScalingRow> rows;
  for (const std::size_t size : train_sizes) {
    if (size > pool.size()) {
      throw Error("training size " + std::to_string(size) + " exceeds the " +
                  std::to_string(pool.size()) + " consumers outside the test set");
    }
    const std::span<const std::string> ids(pool.data(), size);
    const Dataset train = dataset.subset(dataset.rows_of(ids));
    for (const Method m : methods) {
      const EvalReport report = evaluate_split(train, test, m, options, options.seed);
      rows.push_back({size, m, report.n_train_instances, report.mean_es, report.train_s,
                      report.predict_s, report.fit});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report files

void write_report_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "# train_s and predict_s are wall-clock seconds excluding file I/O\n";
  out << "fold,method,n_train_instances,mean_es,train_s,predict_s\n";
  for (const auto& r : reports) {
    out << r.fold << ',' << to_string(r.method) << ',' << r.n_train_instances << ','
        << csv::format_number(r.mean_es) << ',' << csv::format_number(r.train_s) << ','
        << csv::format_number(r.predict_s) << '\n';
  }
}

void write_per_instance_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "fold,method,consumer_id,date,es\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.per_instance_es.size(); ++i) {
      const std::string id[1] = {r.test_consumers[i]};
      out << r.fold << ',' << to_string(r.method) << ',' << csv::join_line(id) << ','
          << format_date(r.test_dates[i]) << ',' << csv::format_number(r.per_instance_es[i])
          << '\n';
    }
  }
}

void write_scaling_csv(std::ostream& out, std::span<const ScalingRow> rows) {
  out << "# train_s and predict_s are wall-clock seconds excluding file I/O\n";
  out << "n_consumers,method,n_train_instances,mean_es,train_s,predict_s\n";
  for (const auto& r : rows) {
    out << r.n_consumers << ',' << to_string(r.method) << ',' << r.n_train_instances << ','
        << csv::format_number(r.mean_es) << ',' << csv::format_number(r.train_s) << ','
        << csv::format_number(r.predict_s) << '\n';
  }
}

}  // namespace loadpct
