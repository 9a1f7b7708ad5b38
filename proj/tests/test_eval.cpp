#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "loadpct/data.hpp"
#include "loadpct/eval.hpp"
#include "test_util.hpp"

using namespace loadpct;

namespace {

/// Energy score written directly from its definition, full double sum.
double naive_es(const SeriesMatrix& x, std::span<const double> y) {
  const std::size_t n = x.rows();
  auto dist = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += (a[t] - b[t]) * (a[t] - b[t]);
    return std::sqrt(s);
  };
  double first = 0.0, second = 0.0;
  for (std::size_t s = 0; s < n; ++s) first += dist(x.row(s), y);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t r = 0; r < n; ++r) second += dist(x.row(s), x.row(r));
  return first / n - second / (2.0 * n * n);
}

}  // namespace

TEST_CASE("energy score hand cases") {
  SeriesMatrix x(2);
  const double a[] = {0.0, 0.0};
  const double b[] = {3.0, 4.0};
  x.push_back(a);
  x.push_back(b);
  CHECK(std::abs(energy_score(x, a) - 1.25) <= 1e-12);

  SeriesMatrix same(2);
  for (int i = 0; i < 4; ++i) same.push_back(b);
  CHECK(energy_score(same, b) == 0.0);

  const double wrong[] = {1.0};
  CHECK_THROWS_AS(energy_score(x, wrong), SchemaError);
  CHECK_THROWS_AS(energy_score(SeriesMatrix(2), a), std::invalid_argument);
}

TEST_CASE("energy score matches the naive loop and its properties") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = 1 + rng.uniform_index(12);
    const auto T = 1 + rng.uniform_index(6);
    const auto x = testutil::random_matrix(rng, n, T);
    const auto yv = testutil::random_matrix(rng, 1, T);
    const auto y = yv.row(0);
    const double es = energy_score(x, y);
    CHECK(std::abs(es - naive_es(x, y)) <= 1e-12 * std::max(1.0, std::abs(es)));
    CHECK(es >= -1e-12);

    SeriesMatrix reversed(T), doubled(T);
    for (std::size_t s = n; s-- > 0;) reversed.push_back(x.row(s));
    for (int k = 0; k < 2; ++k)
      for (std::size_t s = 0; s < n; ++s) doubled.push_back(x.row(s));
    CHECK(std::abs(energy_score(reversed, y) - es) <= 1e-12 * std::max(1.0, es));
    CHECK(std::abs(energy_score(doubled, y) - es) <= 1e-12 * std::max(1.0, es));
  }
}

TEST_CASE("folds") {
  auto ids = [](int n) {
    std::vector<std::string> v;
    for (int i = 0; i < n; ++i) v.push_back("c" + std::to_string(i));
    return v;
  };
  auto sizes = [](const FoldAssignment& f) {
    std::multiset<std::size_t> s;
    for (std::size_t k = 0; k < f.k; ++k) s.insert(f.consumers_in(k).size());
    return s;
  };
  CHECK(sizes(make_folds(ids(10), 5, 1)) == std::multiset<std::size_t>{2, 2, 2, 2, 2});
  CHECK(sizes(make_folds(ids(11), 5, 1)) == std::multiset<std::size_t>{2, 2, 2, 2, 3});
  CHECK(make_folds(ids(11), 5, 1).fold_of == make_folds(ids(11), 5, 1).fold_of);
  CHECK(make_folds(ids(50), 5, 1).fold_of != make_folds(ids(50), 5, 2).fold_of);
  CHECK_THROWS_AS(make_folds(ids(4), 5, 1), Error);
  CHECK_THROWS_AS(make_folds(ids(4), 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_folds(ids(4), 2, 1).fold("nobody"), Error);
}

TEST_CASE("cross-validation partitions consumers without leakage") {
  Rng rng(32);
  const Dataset d = testutil::random_dataset(rng, 12, 25, 3, 4);
  EvalOptions opt;
  opt.n_scenarios = 20;
  opt.build.min_leaf = 20;
  opt.seed = 3;
  const Method methods[] = {Method::pct, Method::random};
  const auto reports = cross_validate(d, methods, opt);
  REQUIRE(reports.size() == 10);
  const auto folds = make_folds(d.consumers(), 5, opt.seed);
  std::map<std::string, int> tested;
  std::size_t tested_rows = 0;
  for (const auto& r : reports) {
    CHECK(r.fold == (&r - reports.data()) / 2);
    CHECK(r.per_instance_es.size() == r.n_test_instances);
    CHECK(r.n_train_instances + r.n_test_instances == d.size());
    double total = 0.0;
    for (double es : r.per_instance_es) total += es;
    CHECK(r.mean_es == doctest::Approx(total / r.per_instance_es.size()));
    if (r.method != Method::pct) continue;
    tested_rows += r.n_test_instances;
    for (const auto& id : r.test_consumers) {
      CHECK(folds.fold(id) == r.fold);
      tested[id] = static_cast<int>(r.fold);
    }
  }
  CHECK(tested_rows == d.size());
  CHECK(tested.size() == d.consumers().size());
}

TEST_CASE("scaling experiment uses nested training sets") {
  SynthSpec spec;
  spec.n_consumers = 30;
  spec.years = 1;
  spec.noise = 0.1;
  const Dataset d = synth_dataset(spec).dataset;
  const auto test_ids = pick_consumers(d, 6, 4);
  CHECK(test_ids.size() == 6);
  EvalOptions opt;
  opt.n_scenarios = 20;
  opt.build.min_leaf = 100;
  const std::size_t sizes[] = {10, 20};
  const Method methods[] = {Method::pct, Method::random};
  const auto rows = size_scaling_experiment(d, sizes, test_ids, methods, opt);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].n_consumers == 10);
  CHECK(rows[2].n_consumers == 20);
  CHECK(rows[0].n_train_instances == 10 * 365);
  for (const auto& r : rows) {
    CHECK(r.train_s > 0.0);
    CHECK(r.predict_s > 0.0);
  }
  const std::size_t too_big[] = {25};
  CHECK_THROWS_AS(size_scaling_experiment(d, too_big, test_ids, methods, opt), Error);
  const std::size_t descending[] = {20, 10};
  CHECK_THROWS_AS(size_scaling_experiment(d, descending, test_ids, methods, opt), Error);
}

TEST_CASE("report CSV columns") {
  EvalReport r;
  r.fold = 2;
  r.method = Method::random;
  r.n_train_instances = 10;
  r.mean_es = 0.5;
  r.train_s = 0.25;
  r.predict_s = 0.125;
  r.per_instance_es = {0.5};
  r.test_consumers = {"x"};
  r.test_dates = {parse_date("2013-01-02")};
  const EvalReport reports[] = {r};
  std::ostringstream out, per;
  write_report_csv(out, reports);
  CHECK(out.str().find("fold,method,n_train_instances,mean_es,train_s,predict_s\n2,random,10,0.5,0.25,0.125\n") !=
        std::string::npos);
  write_per_instance_csv(per, reports);
  CHECK(per.str() == "fold,method,consumer_id,date,es\n2,random,x,2013-01-02,0.5\n");
  CHECK(method_from_string("pct") == Method::pct);
  CHECK_THROWS_AS(method_from_string("kmeans"), Error);
}
