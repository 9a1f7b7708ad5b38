#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loadpct/core.hpp"
#include "loadpct/pct.hpp"

namespace loadpct {

/// Energy score of equally likely scenarios against one observed series:
///   1/N sum_s ||x_s - y|| - 1/(2 N^2) sum_s sum_r ||x_s - x_r||
double energy_score(const SeriesMatrix& scenarios, std::span<const double> truth);

struct FoldAssignment {
  std::map<std::string, std::size_t> fold_of;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  std::size_t fold(const std::string& consumer_id) const;
  std::vector<std::string> consumers_in(std::size_t fold) const;
};

/// Seeded shuffle of the distinct consumer ids followed by round-robin
/// assignment, so fold sizes differ by at most one.
FoldAssignment make_folds(std::span<const std::string> consumer_ids, std::size_t k,
                          std::uint64_t seed);

enum class Method { pct, random };

std::string_view to_string(Method method);
Method method_from_string(std::string_view text);

struct EvalOptions {
  std::size_t folds = 5;
  std::size_t n_scenarios = 250;
  std::uint64_t seed = 0;
  BuildConfig build;
  std::size_t threads = 1;
  /// Keep each fitted tree in its report (for audits).
  bool keep_models = false;
};

struct EvalReport {
  std::size_t fold = 0;
  Method method = Method::pct;
  std::size_t n_train_instances = 0;
  std::size_t n_test_instances = 0;
  std::size_t n_leaves = 0;
  double mean_es = 0.0;
  std::vector<double> per_instance_es;
  /// Identity of each scored test instance, aligned with per_instance_es.
  std::vector<std::string> test_consumers;
  std::vector<Date> test_dates;
  /// Wall-clock seconds, file I/O excluded.
  double train_s = 0.0;
  double predict_s = 0.0;
  double score_s = 0.0;
  /// Fitted pct model when EvalOptions::keep_models is set.
  std::shared_ptr<const FitResult> fit;
};

/// Trains `method` on `train`, generates scenarios for every test instance
/// and scores them. Scenario streams are derived from `seed`.
EvalReport evaluate_split(const Dataset& train, const Dataset& test, Method method,
                          const EvalOptions& options, std::uint64_t seed);

/// Scores an already trained tree on `test`. train_s stays zero.
EvalReport evaluate_model(const Pct& tree, const SeriesMatrix* train_store, const Dataset& test,
                          const EvalOptions& options, std::uint64_t seed);

/// Consumer-level k-fold cross-validation. Reports are ordered by fold,
/// then by the order of `methods`.
std::vector<EvalReport> cross_validate(const Dataset& dataset, std::span<const Method> methods,
                                       const EvalOptions& options);

struct ScalingRow {
  std::size_t n_consumers = 0;
  Method method = Method::pct;
  std::size_t n_train_instances = 0;
  double mean_es = 0.0;
  double train_s = 0.0;
  double predict_s = 0.0;
  std::shared_ptr<const FitResult> fit;
};

/// Trains on nested consumer subsets of the non-test pool (each size a
/// superset of the previous) and scores every one on the same test set.
std::vector<ScalingRow> size_scaling_experiment(const Dataset& dataset,
                                                std::span<const std::size_t> train_sizes,
                                                std::span<const std::string> test_consumers,
                                                std::span<const Method> methods,
                                                const EvalOptions& options);

/// Picks `count` test consumers by seeded shuffle.
std::vector<std::string> pick_consumers(const Dataset& dataset, std::size_t count,
                                        std::uint64_t seed);

void write_report_csv(std::ostream& out, std::span<const EvalReport> reports);
/// `fold,method,consumer_id,date,es` rows.
void write_per_instance_csv(std::ostream& out, std::span<const EvalReport> reports);
void write_scaling_csv(std::ostream& out, std::span<const ScalingRow> rows);

}  // namespace loadpct
