#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "doctest.h"
#include "loadpct/variance.hpp"
#include "test_util.hpp"

using namespace loadpct;

namespace {

SeriesMatrix column(std::initializer_list<double> values) {
  SeriesMatrix m(1);
  for (double v : values) m.push_back(std::span<const double>(&v, 1));
  return m;
}

/// Eq. 4 evaluated on an explicit row subset, straight from the definition.
double naive_variance(const SeriesMatrix& series, const std::vector<std::uint32_t>& rows) {
  const std::size_t T = series.width();
  std::vector<double> mean(T, 0.0);
  for (auto r : rows)
    for (std::size_t t = 0; t < T; ++t) mean[t] += series.row(r)[t];
  for (auto& m : mean) m /= static_cast<double>(rows.size());
  double total = 0.0;
  for (auto r : rows)
    for (std::size_t t = 0; t < T; ++t) total += (series.row(r)[t] - mean[t]) * (series.row(r)[t] - mean[t]);
  return total / static_cast<double>(rows.size());
}

struct NaiveSplit {
  double threshold;
  double h;
};

/// Every midpoint candidate scored by recomputing both child variances.
std::optional<NaiveSplit> naive_scan(const std::vector<double>& values, const SeriesMatrix& series,
                                     std::size_t min_leaf) {
  std::vector<std::uint32_t> all(values.size());
  std::iota(all.begin(), all.end(), 0u);
  const double parent = naive_variance(series, all);
  std::vector<double> distinct = values;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::optional<NaiveSplit> best;
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    const double thr = midpoint_threshold(distinct[i], distinct[i + 1]);
    std::vector<std::uint32_t> left, right;
    for (std::uint32_t r = 0; r < values.size(); ++r) (values[r] < thr ? left : right).push_back(r);
    if (left.size() < min_leaf || right.size() < min_leaf) continue;
    const double n = static_cast<double>(values.size());
    const double h = parent - static_cast<double>(left.size()) / n * naive_variance(series, left) -
                     static_cast<double>(right.size()) / n * naive_variance(series, right);
    if (h > kMinVarianceReduction && (!best || h > best->h)) best = NaiveSplit{thr, h};
  }
  return best;
}

std::optional<ScanResult> scan(const std::vector<double>& values, const SeriesMatrix& series,
                               std::size_t min_leaf) {
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> sorted;
  for (auto r : order) sorted.push_back(values[r]);
  return split_scan(sorted, order, series, min_leaf);
}

}  // namespace

TEST_CASE("hand cases") {
  CHECK(variance_centroid(column({3.5})) == 0.0);
  CHECK(variance_centroid(column({0.0, 2.0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(variance_pairwise(column({0.0, 2.0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(variance_pairwise(column({4.0, 4.0})) == 0.0);
  CHECK(NodeStats::of(column({0.0, 2.0})).variance() == doctest::Approx(1.0));
  CHECK_THROWS_AS(variance_centroid(SeriesMatrix(3)), Error);
  CHECK_THROWS_AS(variance_pairwise(SeriesMatrix(3)), Error);
  CHECK_THROWS_AS(NodeStats(3).centroid(), Error);
}

TEST_CASE("centroid variance equals pairwise variance") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.uniform_index(50);
    const auto T = 1 + rng.uniform_index(8);
    const auto m = testutil::random_matrix(rng, n, T);
    const double pairwise = variance_pairwise(m);
    CHECK(std::abs(variance_centroid(m) - pairwise) <= 1e-9 * std::max(1.0, pairwise));
    CHECK(std::abs(NodeStats::of(m).variance() - pairwise) <= 1e-9 * std::max(1.0, pairwise));
  }
}

TEST_CASE("incremental stats match stats built from scratch") {
  Rng rng(12);
  const auto m = testutil::random_matrix(rng, 40, 5);
  NodeStats left(5), right = NodeStats::of(m);
  for (std::uint32_t k = 0; k < 40; ++k) {
    left.add(m.row(k));
    right.remove(m.row(k));
    std::vector<std::uint32_t> lrows(k + 1), rrows;
    std::iota(lrows.begin(), lrows.end(), 0u);
    for (std::uint32_t r = k + 1; r < 40; ++r) rrows.push_back(r);
    const NodeStats l2 = NodeStats::of(m, lrows);
    CHECK(left.count() == l2.count());
    for (std::size_t t = 0; t < 5; ++t) CHECK(left.sum()[t] == doctest::Approx(l2.sum()[t]));
    CHECK(left.variance() == doctest::Approx(l2.variance()).epsilon(1e-9));
    if (!rrows.empty()) {
      CHECK(right.variance() == doctest::Approx(NodeStats::of(m, rrows).variance()).epsilon(1e-9));
    }
  }
  NodeStats merged = NodeStats::of(m, std::vector<std::uint32_t>{0, 1, 2});
  merged.merge(NodeStats::of(m, std::vector<std::uint32_t>{3, 4}));
  CHECK(merged.variance() ==
        doctest::Approx(variance_centroid(m, std::vector<std::uint32_t>{0, 1, 2, 3, 4})));
}

TEST_CASE("closed form is clamped near zero") {
  // Large identical values: sumsq/n - ||mean||^2 cancels to rounding noise.
  SeriesMatrix m(3);
  const double row[] = {1e8 + 0.1, 1e8 + 0.2, 1e8 + 0.3};
  for (int i = 0; i < 1000; ++i) m.push_back(row);
  CHECK(NodeStats::of(m).variance() == 0.0);
  CHECK(variance_centroid(m) == doctest::Approx(0.0));
}

TEST_CASE("variance reduction identity matches the term-by-term form") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = testutil::random_matrix(rng, 30, 4);
    const auto cut = 1 + rng.uniform_index(28);
    NodeStats l(4), r(4);
    for (std::size_t i = 0; i < 30; ++i) (i < cut ? l : r).add(m.row(i));
    const NodeStats parent = NodeStats::of(m);
    CHECK(variance_reduction(l, r) ==
          doctest::Approx(variance_reduction_direct(parent, l, r)).epsilon(1e-9));
    CHECK(variance_reduction(l, r) >= 0.0);
  }
}

TEST_CASE("split scan hand example") {
  const std::vector<double> values{0, 0, 1, 1};
  const auto series = column({0, 0, 10, 10});
  const auto best = scan(values, series, 1);
  REQUIRE(best);
  CHECK(best->threshold == 0.5);
  CHECK(best->h == doctest::Approx(25.0));
  CHECK(best->left_count == 2);
}

TEST_CASE("split scan returns none when nothing is admissible") {
  const auto series = column({0, 1, 2, 3});
  CHECK_FALSE(scan({5, 5, 5, 5}, series, 1));
  CHECK_FALSE(scan({0, 1, 2, 3}, series, 3));
  // Distinct attribute values, identical series: h = 0.
  CHECK_FALSE(scan({0, 1, 2, 3}, column({7, 7, 7, 7}), 1));
}

TEST_CASE("split scan agrees with naive recomputation") {
  Rng rng(14);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = 2 + rng.uniform_index(200);
    const auto T = 1 + rng.uniform_index(6);
    const auto series = testutil::random_matrix(rng, n, T);
    std::vector<double> values(n);
    const auto levels = 1 + rng.uniform_index(30);
    for (auto& v : values) v = static_cast<double>(rng.uniform_index(levels)) * 0.25;
    const auto min_leaf = 1 + rng.uniform_index(std::max<std::uint64_t>(1, n / 4));
    const auto fast = scan(values, series, min_leaf);
    const auto slow = naive_scan(values, series, min_leaf);
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) {
      CHECK(fast->threshold == slow->threshold);
      CHECK(std::abs(fast->h - slow->h) <= 1e-8 * std::max(1.0, slow->h));
    }
  }
}

TEST_CASE("translation leaves variances and reductions unchanged") {
  Rng rng(15);
  const auto m = testutil::random_matrix(rng, 60, 3);
  SeriesMatrix shifted(3);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.row(i).begin(), m.row(i).end());
    row[0] += 100.0;
    row[2] -= 7.0;
    shifted.push_back(row);
  }
  CHECK(variance_centroid(shifted) == doctest::Approx(variance_centroid(m)).epsilon(1e-9));
  std::vector<double> values(60);
  for (auto& v : values) v = static_cast<double>(rng.uniform_index(10));
  const auto a = scan(values, m, 5), b = scan(values, shifted, 5);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->threshold == b->threshold);
  CHECK(a->h == doctest::Approx(b->h).epsilon(1e-9));
}

TEST_CASE("midpoint threshold separates adjacent doubles") {
  CHECK(midpoint_threshold(1.0, 2.0) == 1.5);
  const double lo = 1.0, hi = std::nextafter(1.0, 2.0);
  const double t = midpoint_threshold(lo, hi);
  CHECK(lo < t);
  CHECK(t <= hi);
}
