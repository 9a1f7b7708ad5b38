#include "loadpct/pct.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "loadpct/parallel.hpp"
#include "loadpct/rng.hpp"

namespace loadpct {

namespace {

// Attribute scans below this node size run on the calling thread.
constexpr std::size_t kParallelScanMinRows = 4096;

constexpr std::uint64_t kPruneSplitStream = 0x70727566ULL;

/// Rows of one node sorted by each attribute, with the gathered values.
struct SortedNode {
  std::vector<std::vector<std::uint32_t>> rows;   // per attribute
  std::vector<std::vector<double>> values;        // per attribute, aligned with rows
};

std::optional<SplitCandidate> pick_best(std::span<const std::optional<ScanResult>> scans) {
  std::optional<SplitCandidate> best;
  for (std::size_t a = 0; a < scans.size(); ++a) {
    if (!scans[a]) continue;
    // Strict comparison keeps the lowest attribute index on ties.
    if (!best || scans[a]->h > best->h) {
      best = SplitCandidate{a, scans[a]->threshold, scans[a]->h, scans[a]->left_count};
    }
  }
  return best;
}

std::vector<std::optional<ScanResult>> scan_all(const SortedNode& node, const SeriesMatrix& series,
                                                std::size_t min_leaf, std::size_t threads) {
  const std::size_t A = node.rows.size();
  std::vector<std::optional<ScanResult>> scans(A);
  const std::size_t n = A ? node.rows[0].size() : 0;
  const std::size_t workers = n >= kParallelScanMinRows ? threads : 1;
  parallel_for(A, workers, [&](std::size_t a) {
    scans[a] = split_scan(node.values[a], node.rows[a], series, min_leaf);
  });
  return scans;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::span<const std::uint32_t> rows, const BuildConfig& config)
      : data_(data), series_(data.series_matrix()), config_(config), A_(data.schema().size()) {
    columns_.assign(A_, std::vector<double>(data.size()));
    for (std::size_t r = 0; r < data.size(); ++r) {
      const auto attrs = data.attributes(r);
      for (std::size_t a = 0; a < A_; ++a) columns_[a][r] = attrs[a];
    }
    std::vector<std::uint32_t> base(rows.begin(), rows.end());
    std::sort(base.begin(), base.end());
    order_.assign(A_, base);
    for (std::size_t a = 0; a < A_; ++a) {
      const auto& col = columns_[a];
      std::stable_sort(order_[a].begin(), order_[a].end(),
                       [&](std::uint32_t x, std::uint32_t y) { return col[x] < col[y]; });
    }
    base_ = std::move(base);
    goes_left_.assign(data.size(), 0);
  }

  std::vector<PctNode> build() {
    grow(0, base_.size(), 0);
    return std::move(nodes_);
  }

 private:
  std::span<const std::uint32_t> segment(std::size_t a, std::size_t begin, std::size_t end) const {
    if (A_ == 0) return std::span<const std::uint32_t>(base_).subspan(begin, end - begin);
    return std::span<const std::uint32_t>(order_[a]).subspan(begin, end - begin);
  }

  std::optional<SplitCandidate> search(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    const std::size_t min_leaf = std::max<std::size_t>(config_.min_leaf, 1);
    if (A_ == 0 || depth + 1 > config_.max_depth || n < 2 * min_leaf) return std::nullopt;
    std::vector<std::optional<ScanResult>> scans(A_);
    const std::size_t workers = n >= kParallelScanMinRows ? config_.threads : 1;
    parallel_for(A_, workers, [&](std::size_t a) {
      const auto rows = segment(a, begin, end);
      std::vector<double> values(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) values[i] = columns_[a][rows[i]];
      scans[a] = split_scan(values, rows, series_, min_leaf);
    });
    return pick_best(scans);
  }

  std::uint32_t grow(std::size_t begin, std::size_t end, std::uint32_t depth) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    const auto rows = segment(0, begin, end);
    PctNode node;
    node.depth = depth;
    node.stats = NodeStats::of(series_, rows);

    const auto split = search(begin, end, depth);
    if (!split) {
      node.is_leaf = true;
      node.members.assign(rows.begin(), rows.end());
      std::sort(node.members.begin(), node.members.end());
      nodes_.push_back(std::move(node));
      return id;
    }

    node.is_leaf = false;
    node.attribute = split->attribute;
    node.threshold = split->threshold;
    nodes_.push_back(std::move(node));

    const auto& col = columns_[split->attribute];
    std::size_t left_count = 0;
    for (auto r : rows) {
      goes_left_[r] = col[r] < split->threshold ? 1 : 0;
      left_count += goes_left_[r];
    }
    if (left_count != split->left_count) {
      throw std::logic_error("split partition disagrees with scan");
    }
    for (std::size_t a = 0; a < A_; ++a) {
      auto first = order_[a].begin() + static_cast<std::ptrdiff_t>(begin);
      auto last = order_[a].begin() + static_cast<std::ptrdiff_t>(end);
      std::stable_partition(first, last, [&](std::uint32_t r) { return goes_left_[r] != 0; });
    }

    const std::size_t mid = begin + left_count;
    const auto left = grow(begin, mid, depth + 1);
    const auto right = grow(mid, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  const Dataset& data_;
  const SeriesMatrix& series_;
  BuildConfig config_;
  std::size_t A_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint32_t> base_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<PctNode> nodes_;
};

PctNode collapsed(const PctNode& node, std::vector<std::uint32_t> members) {
  PctNode leaf;
  leaf.is_leaf = true;
  leaf.depth = node.depth;
  leaf.stats = node.stats;
  leaf.members = std::move(members);
  return leaf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pct

Pct::Pct(Schema schema, std::size_t series_length, BuildConfig config, std::vector<PctNode> nodes,
         StoreRef store, std::optional<SeriesMatrix> embedded)
    : schema_(std::move(schema)),
      series_length_(series_length),
      config_(config),
      nodes_(std::move(nodes)),
      store_(store),
      embedded_(std::move(embedded)) {
  if (nodes_.empty()) throw Error("tree has no nodes");
  if (embedded_) {
    if (embedded_->width() != series_length_) throw Error("embedded series width differs from T");
    store_ = StoreRef{embedded_->rows(), embedded_->fingerprint()};
  }
  // Walk in pre-order and require that node ids match the visit order.
  std::size_t next = 0;
  auto check = [&](auto&& self, std::size_t id, std::uint32_t depth) -> void {
    if (id != next || id >= nodes_.size()) throw Error("tree nodes are not in pre-order");
    ++next;
    PctNode& node = nodes_[id];
    node.depth = depth;
    if (node.stats.width() != series_length_) throw Error("node statistics width differs from T");
    if (node.is_leaf) {
      if (node.members.empty()) throw Error("leaf " + std::to_string(id) + " has no members");
      for (auto m : node.members) {
        if (m >= store_.rows) throw Error("leaf member id out of range of the series store");
      }
      return;
    }
    if (node.attribute >= schema_.size()) throw Error("split on unknown attribute index");
    if (!std::isfinite(node.threshold)) throw Error("split threshold is not finite");
    self(self, node.left, depth + 1);
    self(self, node.right, depth + 1);
  };
  check(check, 0, 0);
  if (next != nodes_.size()) throw Error("tree contains unreachable nodes");
}

std::size_t Pct::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const PctNode& n) { return n.is_leaf; }));
}

std::size_t Pct::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_)
    if (n.is_leaf) d = std::max<std::size_t>(d, n.depth);
  return d;
}

std::vector<std::size_t> Pct::leaves() const {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf) ids.push_back(i);
  return ids;
}

std::size_t Pct::route(std::span<const double> attributes) const {
  if (attributes.size() != schema_.size()) {
    throw SchemaError("query has " + std::to_string(attributes.size()) +
                      " attributes, tree schema has " + std::to_string(schema_.size()));
  }
  std::size_t id = 0;
  while (!nodes_[id].is_leaf) {
    const PctNode& n = nodes_[id];
    id = attributes[n.attribute] < n.threshold ? n.left : n.right;
  }
  return id;
}

std::vector<std::size_t> Pct::path(std::span<const double> attributes) const {
  if (attributes.size() != schema_.size()) throw SchemaError("query length differs from schema");
  std::vector<std::size_t> ids{0};
  while (!nodes_[ids.back()].is_leaf) {
    const PctNode& n = nodes_[ids.back()];
    ids.push_back(attributes[n.attribute] < n.threshold ? n.left : n.right);
  }
  return ids;
}

std::vector<std::uint32_t> Pct::members_under(std::size_t id) const {
  std::vector<std::uint32_t> out;
  std::vector<std::size_t> stack{id};
  while (!stack.empty()) {
    const PctNode& n = nodes_[stack.back()];
    stack.pop_back();
    if (n.is_leaf) {
      out.insert(out.end(), n.members.begin(), n.members.end());
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

const SeriesMatrix& Pct::store(const SeriesMatrix* external) const {
  if (embedded_) return *embedded_;
  if (!external) {
    throw Error("model does not embed its series; supply the training data it was built from");
  }
  if (external->rows() != store_.rows || external->width() != series_length_) {
    throw Error("training data has " + std::to_string(external->rows()) + " rows of length " +
                std::to_string(external->width()) + "; model expects " +
                std::to_string(store_.rows) + " rows of length " + std::to_string(series_length_));
  }
  return *external;
}

Pct Pct::with_embedded_series(const SeriesMatrix& source) const {
  const SeriesMatrix& full = store(&source);
  std::vector<std::uint32_t> used;
  for (const auto& n : nodes_)
    if (n.is_leaf) used.insert(used.end(), n.members.begin(), n.members.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());

  SeriesMatrix compact(series_length_);
  compact.reserve(used.size());
  for (auto r : used) compact.push_back(full.row(r));
  std::vector<PctNode> nodes = nodes_;
  for (auto& n : nodes) {
    for (auto& m : n.members) {
      m = static_cast<std::uint32_t>(std::lower_bound(used.begin(), used.end(), m) - used.begin());
    }
  }
  return Pct(schema_, series_length_, config_, std::move(nodes), StoreRef{}, std::move(compact));
}

void Pct::check_compatible(const Schema& schema, std::size_t series_length) const {
  if (schema.hash() != schema_.hash()) {
    throw SchemaError("schema hash mismatch: model " + schema_.hash_hex() + ", data " +
                      schema.hash_hex());
  }
  if (series_length != series_length_) {
    throw SchemaError("series length mismatch: model T=" + std::to_string(series_length_) +
                      ", data T=" + std::to_string(series_length));
  }
}

// ---------------------------------------------------------------------------
// Induction

std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const std::uint32_t> rows,
                                         const BuildConfig& config, std::size_t depth) {
  if (rows.empty()) throw std::invalid_argument("best_split on an empty node");
  if (depth + 1 > config.max_depth) return std::nullopt;
  const std::size_t A = data.schema().size();
  SortedNode node;
  node.rows.assign(A, std::vector<std::uint32_t>(rows.begin(), rows.end()));
  node.values.resize(A);
  for (std::size_t a = 0; a < A; ++a) {
    auto& r = node.rows[a];
    std::sort(r.begin(), r.end());
    std::stable_sort(r.begin(), r.end(), [&](std::uint32_t x, std::uint32_t y) {
      return data.attributes(x)[a] < data.attributes(y)[a];
    });
    node.values[a].resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) node.values[a][i] = data.attributes(r[i])[a];
  }
  const auto scans = scan_all(node, data.series_matrix(), config.min_leaf, config.threads);
  return pick_best(scans);
}

Pct build_tree(const Dataset& data, std::span<const std::uint32_t> rows, const BuildConfig& config) {
  if (rows.empty()) throw Error("cannot build a tree from an empty dataset");
  for (auto r : rows) {
    if (r >= data.size()) throw std::out_of_range("build_tree: row index out of range");
  }
  TreeBuilder builder(data, rows, config);
  auto nodes = builder.build();
  const StoreRef store{data.size(), data.series_matrix().fingerprint()};
  return Pct(data.schema(), data.series_length(), config, std::move(nodes), store);
}

Pct build_tree(const Dataset& train, const BuildConfig& config) {
  std::vector<std::uint32_t> rows(train.size());
  std::iota(rows.begin(), rows.end(), 0U);
  return build_tree(train, rows, config);
}

// ---------------------------------------------------------------------------
// Pruning

double pruning_error(const Pct& tree, const Dataset& data, std::span<const std::uint32_t> rows) {
  tree.check_compatible(data.schema(), data.series_length());
  std::vector<std::vector<double>> centroids(tree.node_count());
  double total = 0.0;
  for (auto r : rows) {
    const std::size_t leaf = tree.route(data.attributes(r));
    if (centroids[leaf].empty()) centroids[leaf] = tree.node(leaf).stats.centroid();
    total += squared_distance(data.series(r), centroids[leaf]);
  }
  return total;
}

double pruning_error(const Pct& tree, const Dataset& prune_set) {
  std::vector<std::uint32_t> rows(prune_set.size());
  std::iota(rows.begin(), rows.end(), 0U);
  return pruning_error(tree, prune_set, rows);
}

PruneResult prune(const Pct& tree, const Dataset& data, std::span<const std::uint32_t> rows) {
  tree.check_compatible(data.schema(), data.series_length());
  const std::size_t N = tree.node_count();
  std::vector<std::vector<double>> centroids(N);
  for (std::size_t i = 0; i < N; ++i) centroids[i] = tree.node(i).stats.centroid();

  // Error of predicting each node's training centroid for the pruning
  // instances that pass through it.
  std::vector<double> node_error(N, 0.0);
  std::vector<std::size_t> reached(N, 0);
  for (auto r : rows) {
    const auto attrs = data.attributes(r);
    const auto series = data.series(r);
    std::size_t id = 0;
    while (true) {
      node_error[id] += squared_distance(series, centroids[id]);
      ++reached[id];
      const PctNode& n = tree.node(id);
      if (n.is_leaf) break;
      id = attrs[n.attribute] < n.threshold ? n.left : n.right;
    }
  }

  PruneResult result;
  result.nodes_before = N;
  result.empty_prune_set = rows.empty();
  std::vector<PctNode> out;
  out.reserve(N);
  auto visit = [&](auto&& self, std::size_t id) -> double {
    const PctNode& node = tree.node(id);
    if (node.is_leaf) {
      out.push_back(node);
      return node_error[id];
    }
    if (reached[id] == 0) {
      ++result.unreached_collapsed;
      out.push_back(collapsed(node, tree.members_under(id)));
      return 0.0;
    }
    const std::size_t at = out.size();
    out.push_back(node);
    out[at].left = static_cast<std::uint32_t>(out.size());
    const double left = self(self, node.left);
    out[at].right = static_cast<std::uint32_t>(out.size());
    const double right = self(self, node.right);
    const double subtree = left + right;
    if (node_error[id] <= subtree) {
      out.resize(at);
      out.push_back(collapsed(node, tree.members_under(id)));
      return node_error[id];
    }
    return subtree;
  };
  // Both totals share one bottom-up summation order so that the pruned
  // total can never exceed the unpruned one through rounding alone.
  auto unpruned = [&](auto&& self, std::size_t id) -> double {
    const PctNode& node = tree.node(id);
    if (node.is_leaf) return node_error[id];
    return self(self, node.left) + self(self, node.right);
  };
  result.error_before = unpruned(unpruned, 0);
  result.error_after = visit(visit, 0);
  result.nodes_after = out.size();
  result.tree = Pct(tree.schema(), tree.series_length(), tree.config(), std::move(out),
                    tree.store_ref(), tree.embedded_series());
  return result;
}

PruneResult prune(const Pct& tree, const Dataset& prune_set) {
  std::vector<std::uint32_t> rows(prune_set.size());
  std::iota(rows.begin(), rows.end(), 0U);
  return prune(tree, prune_set, rows);
}

// ---------------------------------------------------------------------------
// Fitting

ConsumerSplit split_by_consumer(const Dataset& data, double prune_fraction, std::uint64_t seed) {
  if (prune_fraction < 0.0 || prune_fraction >= 1.0) {
    throw std::invalid_argument("prune fraction must lie in [0, 1)");
  }
  auto consumers = data.consumers();
  Rng rng(mix_seed(seed, kPruneSplitStream));
  rng.shuffle(consumers);
  std::size_t n_prune = 0;
  if (prune_fraction > 0.0 && consumers.size() >= 2) {
    n_prune = static_cast<std::size_t>(
        std::llround(prune_fraction * static_cast<double>(consumers.size())));
    n_prune = std::clamp<std::size_t>(n_prune, 1, consumers.size() - 1);
  }
  const std::span<const std::string> prune_ids(consumers.data(), n_prune);
  const auto prune_rows = data.rows_of(prune_ids);
  std::vector<std::uint8_t> is_prune(data.size(), 0);
  for (auto r : prune_rows) is_prune[r] = 1;

  ConsumerSplit split;
  for (std::size_t r = 0; r < data.size(); ++r) {
    (is_prune[r] ? split.prune_rows : split.build_rows).push_back(static_cast<std::uint32_t>(r));
  }
  return split;
}

FitResult fit_pct(const Dataset& train, const BuildConfig& config) {
  if (train.empty()) throw Error("cannot fit a tree on an empty dataset");
  FitResult fit;
  fit.split = split_by_consumer(train, config.prune_fraction, config.seed);
  fit.unpruned = build_tree(train, fit.split.build_rows, config);
  if (config.prune_fraction > 0.0 && !fit.split.prune_rows.empty()) {
    fit.pruning = prune(fit.unpruned, train, fit.split.prune_rows);
  } else {
    fit.pruning.tree = fit.unpruned;
    fit.pruning.nodes_before = fit.pruning.nodes_after = fit.unpruned.node_count();
  }
  return fit;
}

}  // namespace loadpct
