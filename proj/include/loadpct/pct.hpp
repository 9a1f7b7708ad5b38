#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "loadpct/core.hpp"
#include "loadpct/variance.hpp"

namespace loadpct {

struct BuildConfig {
  std::size_t max_depth = 12;
  std::size_t min_leaf = 300;
  /// Share of training consumers held out as the pruning set.
  double prune_fraction = 0.25;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct SplitCandidate {
  std::size_t attribute = 0;
  double threshold = 0.0;
  double h = 0.0;
  std::size_t left_count = 0;
};

/// Node of a tree stored in pre-order. Split nodes send attribute <
/// threshold to `left`; leaves list the store rows they cluster.
struct PctNode {
  bool is_leaf = true;
  std::size_t attribute = 0;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t depth = 0;
  NodeStats stats;
  std::vector<std::uint32_t> members;
};

/// Identity of the series store that leaf member ids index into.
struct StoreRef {
  std::size_t rows = 0;
  std::uint64_t fingerprint = 0;

  bool operator==(const StoreRef&) const = default;
};

/// Predictive clustering tree over day series. Immutable after
/// construction; routing is safe from concurrent callers.
class Pct {
 public:
  Pct() = default;
  /// Checks structural invariants (pre-order, child links, nonempty leaves).
  Pct(Schema schema, std::size_t series_length, BuildConfig config, std::vector<PctNode> nodes,
      StoreRef store, std::optional<SeriesMatrix> embedded = std::nullopt);

  const Schema& schema() const { return schema_; }
  std::size_t series_length() const { return series_length_; }
  const BuildConfig& config() const { return config_; }
  std::span<const PctNode> nodes() const { return nodes_; }
  const PctNode& node(std::size_t id) const { return nodes_[id]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  /// Maximum number of splits on any root-to-leaf path.
  std::size_t depth() const;
  std::vector<std::size_t> leaves() const;

  /// Leaf id reached by `attributes`; throws SchemaError on a length mismatch.
  std::size_t route(std::span<const double> attributes) const;
  /// Node ids visited from the root down to the leaf.
  std::vector<std::size_t> path(std::span<const double> attributes) const;
  /// Sorted member ids of every leaf below `id`.
  std::vector<std::uint32_t> members_under(std::size_t id) const;

  const StoreRef& store_ref() const { return store_; }
  bool has_embedded_series() const { return embedded_.has_value(); }
  const std::optional<SeriesMatrix>& embedded_series() const { return embedded_; }
  /// Series store for member lookup: the embedded matrix, else `external`
  /// after checking it matches store_ref(). Throws Error if neither works.
  const SeriesMatrix& store(const SeriesMatrix* external) const;
  /// Copy of this tree whose member ids index a compact embedded matrix
  /// holding only the referenced rows of `store`.
  Pct with_embedded_series(const SeriesMatrix& store) const;

  /// Throws SchemaError when `schema` or `series_length` differ.
  void check_compatible(const Schema& schema, std::size_t series_length) const;

 private:
  Schema schema_;
  std::size_t series_length_ = 0;
  BuildConfig config_;
  std::vector<PctNode> nodes_;
  StoreRef store_;
  std::optional<SeriesMatrix> embedded_;
};

/// Best admissible split of `rows` across all attributes. Ties prefer the
/// lowest attribute index, then the lowest threshold. Returns nullopt
/// when depth + 1 > max_depth or nothing beats kMinVarianceReduction.
std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const std::uint32_t> rows,
                                         const BuildConfig& config, std::size_t depth);

/// Greedy top-down induction over all rows of `train`.
Pct build_tree(const Dataset& train, const BuildConfig& config);
/// Induction over a subset; member ids stay row indices of `data`.
Pct build_tree(const Dataset& data, std::span<const std::uint32_t> rows, const BuildConfig& config);

/// Sum over instances of squared distance to the training centroid of the
/// leaf each instance reaches.
double pruning_error(const Pct& tree, const Dataset& prune_set);
double pruning_error(const Pct& tree, const Dataset& data, std::span<const std::uint32_t> rows);

struct PruneResult {
  Pct tree;
  /// Set when the pruning set was empty and the tree collapsed to its root.
  bool empty_prune_set = false;
  /// Subtrees collapsed because no pruning instance reached them.
  std::size_t unreached_collapsed = 0;
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;
  double error_before = 0.0;
  double error_after = 0.0;
};

/// Reduced-error pruning: bottom-up, a subtree becomes a leaf when its
/// pruning error at the node's training centroid is no larger than the sum
/// of errors at its leaves.
PruneResult prune(const Pct& tree, const Dataset& prune_set);
PruneResult prune(const Pct& tree, const Dataset& data, std::span<const std::uint32_t> rows);

struct ConsumerSplit {
  std::vector<std::uint32_t> build_rows;
  std::vector<std::uint32_t> prune_rows;
};

/// Seeded partition of consumers into build and pruning groups; all days of
/// one consumer stay together.
ConsumerSplit split_by_consumer(const Dataset& data, double prune_fraction, std::uint64_t seed);

struct FitResult {
  Pct unpruned;
  PruneResult pruning;
  ConsumerSplit split;

  const Pct& tree() const { return pruning.tree; }
};

/// Consumer split, induction on the build rows and pruning on the rest.
/// Member ids index rows of `train`.
FitResult fit_pct(const Dataset& train, const BuildConfig& config);

}  // namespace loadpct
