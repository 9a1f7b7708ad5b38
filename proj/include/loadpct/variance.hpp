#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loadpct/core.hpp"

namespace loadpct {

/// Smallest variance reduction accepted as a split.
inline constexpr double kMinVarianceReduction = 1e-12;
/// Relative band below zero in which the closed-form variance is clamped.
inline constexpr double kVarianceClampRelative = 1e-9;

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Sufficient statistics of a set of series: count, pointwise sum and the
/// (compensated) sum of squared norms. Centroid and variance follow in O(T).
class NodeStats {
 public:
  explicit NodeStats(std::size_t width = 0) : sum_(width, 0.0) {}
  NodeStats(std::size_t count, std::vector<double> sum, double sum_squares);

  static NodeStats of(const SeriesMatrix& series);
  static NodeStats of(const SeriesMatrix& series, std::span<const std::uint32_t> rows);

  void add(std::span<const double> series);
  void remove(std::span<const double> series);
  void merge(const NodeStats& other);

  std::size_t count() const { return count_; }
  std::size_t width() const { return sum_.size(); }
  std::span<const double> sum() const { return sum_; }
  double sum_squares() const { return sum_squares_ + compensation_; }

  std::vector<double> centroid() const;
  /// sumsq/n - ||sum/n||^2, clamped at zero.
  double variance() const;

 private:
  void accumulate_squares(double value);

  std::size_t count_ = 0;
  std::vector<double> sum_;
  double sum_squares_ = 0.0;
  double compensation_ = 0.0;
};

/// Mean squared distance to the pointwise-mean centroid (two passes).
double variance_centroid(const SeriesMatrix& series);
double variance_centroid(const SeriesMatrix& series, std::span<const std::uint32_t> rows);

/// Half the mean squared pairwise distance. Quadratic; for cross-checking.
double variance_pairwise(const SeriesMatrix& series);

/// Variance reduction of splitting the union of `left` and `right` into
/// those two parts. Uses the exact Euclidean identity
///   var(P) - nL/n var(L) - nR/n var(R) = nL nR / n^2 * ||mean(L) - mean(R)||^2
/// which avoids the cancellation in the sumsq form.
double variance_reduction(const NodeStats& left, const NodeStats& right);
/// Same quantity evaluated term by term from closed-form variances.
double variance_reduction_direct(const NodeStats& parent, const NodeStats& left,
                                 const NodeStats& right);

struct ScanResult {
  double threshold = 0.0;
  double h = 0.0;
  std::size_t left_count = 0;
};

/// Single sweep over rows sorted ascending by one attribute. Candidate
/// thresholds sit midway between consecutive distinct values; rows with
/// value < threshold go left. Returns the admissible candidate with the
/// largest reduction (lowest threshold on ties), or nullopt if none has
/// reduction above kMinVarianceReduction with min_leaf rows on each side.
std::optional<ScanResult> split_scan(std::span<const double> sorted_values,
                                     std::span<const std::uint32_t> sorted_rows,
                                     const SeriesMatrix& series, std::size_t min_leaf);

/// Midpoint threshold between two consecutive distinct values, nudged to
/// `hi` when rounding would place it on `lo`.
double midpoint_threshold(double lo, double hi);

}  // namespace loadpct
