#include "loadpct/variance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loadpct {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  // Four partial sums in a fixed order keep the result reproducible while
  // letting the compiler vectorise.
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = a[i + k] - b[i + k];
      acc[k] += d * d;
    }
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc[0] += d * d;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

namespace {

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// NodeStats

NodeStats::NodeStats(std::size_t count, std::vector<double> sum, double sum_squares)
    : count_(count), sum_(std::move(sum)), sum_squares_(sum_squares) {}

NodeStats NodeStats::of(const SeriesMatrix& series) {
  NodeStats stats(series.width());
  for (std::size_t r = 0; r < series.rows(); ++r) stats.add(series.row(r));
  return stats;
}

NodeStats NodeStats::of(const SeriesMatrix& series, std::span<const std::uint32_t> rows) {
  NodeStats stats(series.width());
  for (auto r : rows) stats.add(series.row(r));
  return stats;
}

void NodeStats::accumulate_squares(double value) {
  // Kahan-Babuska (Neumaier) summation.
  const double t = sum_squares_ + value;
  if (std::abs(sum_squares_) >= std::abs(value)) {
    compensation_ += (sum_squares_ - t) + value;
  } else {
    compensation_ += (value - t) + sum_squares_;
  }
  sum_squares_ = t;
}

void NodeStats::add(std::span<const double> series) {
  for (std::size_t t = 0; t < sum_.size(); ++t) sum_[t] += series[t];
  accumulate_squares(squared_norm(series));
  ++count_;
}

void NodeStats::remove(std::span<const double> series) {
  for (std::size_t t = 0; t < sum_.size(); ++t) sum_[t] -= series[t];
  accumulate_squares(-squared_norm(series));
  --count_;
}

void NodeStats::merge(const NodeStats& other) {
  if (other.width() != width()) throw std::invalid_argument("NodeStats width mismatch");
  for (std::size_t t = 0; t < sum_.size(); ++t) sum_[t] += other.sum_[t];
  accumulate_squares(other.sum_squares_);
  accumulate_squares(other.compensation_);
  count_ += other.count_;
}

std::vector<double> NodeStats::centroid() const {
  if (count_ == 0) throw Error("centroid of empty node");
  std::vector<double> c(sum_);
  const double inv = 1.0 / static_cast<double>(count_);
  for (double& v : c) v *= inv;
  return c;
}

double NodeStats::variance() const {
  if (count_ == 0) throw Error("variance of empty node");
  const double n = static_cast<double>(count_);
  const double mean_sq = sum_squares() / n;
  double centroid_sq = 0.0;
  for (double s : sum_) centroid_sq += (s / n) * (s / n);
  const double v = mean_sq - centroid_sq;
  // Below this band the difference is cancellation noise.
  if (std::abs(v) <= kVarianceClampRelative * mean_sq) return 0.0;
  return std::max(v, 0.0);
}

// ---------------------------------------------------------------------------
// Node variance, two routes

double variance_centroid(const SeriesMatrix& series) {
  if (series.rows() == 0) throw Error("variance of empty node");
  std::vector<double> centroid(series.width(), 0.0);
  for (std::size_t r = 0; r < series.rows(); ++r) {
    const auto row = series.row(r);
    for (std::size_t t = 0; t < centroid.size(); ++t) centroid[t] += row[t];
  }
  for (double& c : centroid) c /= static_cast<double>(series.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < series.rows(); ++r) total += squared_distance(series.row(r), centroid);
  return total / static_cast<double>(series.rows());
}

double variance_centroid(const SeriesMatrix& series, std::span<const std::uint32_t> rows) {
  SeriesMatrix subset(series.width());
  subset.reserve(rows.size());
  for (auto r : rows) subset.push_back(series.row(r));
  return variance_centroid(subset);
}

double variance_pairwise(const SeriesMatrix& series) {
  const std::size_t n = series.rows();
  if (n == 0) throw Error("variance of empty node");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total += squared_distance(series.row(i), series.row(j));
  return total / (2.0 * static_cast<double>(n) * static_cast<double>(n));
}

double variance_reduction(const NodeStats& left, const NodeStats& right) {
  const double nl = static_cast<double>(left.count());
  const double nr = static_cast<double>(right.count());
  if (nl == 0.0 || nr == 0.0) return 0.0;
  const auto sl = left.sum();
  const auto sr = right.sum();
  double dist = 0.0;
  for (std::size_t t = 0; t < sl.size(); ++t) {
    const double d = sl[t] / nl - sr[t] / nr;
    dist += d * d;
  }
  const double n = nl + nr;
  return (nl / n) * (nr / n) * dist;
}

double variance_reduction_direct(const NodeStats& parent, const NodeStats& left,
                                 const NodeStats& right) {
  const double n = static_cast<double>(parent.count());
  return parent.variance() - static_cast<double>(left.count()) / n * left.variance() -
         static_cast<double>(right.count()) / n * right.variance();
}

// ---------------------------------------------------------------------------
// Split scan

double midpoint_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid > lo ? mid : hi;
}

std::optional<ScanResult> split_scan(std::span<const double> sorted_values,
                                     std::span<const std::uint32_t> sorted_rows,
                                     const SeriesMatrix& series, std::size_t min_leaf) {
  const std::size_t n = sorted_rows.size();
  if (sorted_values.size() != n) throw std::invalid_argument("split_scan: size mismatch");
  if (n < 2) return std::nullopt;
  min_leaf = std::max<std::size_t>(min_leaf, 1);
  if (2 * min_leaf > n) return std::nullopt;

  NodeStats left(series.width());
  NodeStats right = NodeStats::of(series, sorted_rows);
  std::optional<ScanResult> best;
  double best_h = kMinVarianceReduction;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto row = series.row(sorted_rows[i]);
    left.add(row);
    right.remove(row);
    const std::size_t left_count = i + 1;
    if (n - left_count < min_leaf) break;
    if (sorted_values[i] == sorted_values[i + 1] || left_count < min_leaf) continue;
    const double h = variance_reduction(left, right);
    if (h > best_h) {
      best_h = h;
      best = ScanResult{midpoint_threshold(sorted_values[i], sorted_values[i + 1]), h, left_count};
    }
  }
  return best;
}

}  // namespace loadpct
