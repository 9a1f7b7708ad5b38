#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loadpct/core.hpp"
#include "loadpct/pct.hpp"

namespace loadpct {

inline constexpr std::string_view kModelFormat = "loadpct-model";
inline constexpr int kModelVersion = 1;

/// Canonical JSON: fixed key order, shortest round-trip numbers, nodes in
/// pre-order. Identical trees give identical bytes.
std::string serialize_model(const Pct& tree);
/// Throws ParseError on malformed or truncated input or an unknown version.
Pct deserialize_model(std::string_view text);
void save_model(const std::string& path, const Pct& tree);
Pct load_model(const std::string& path);

/// Tree for display in which chains of splits on one attribute are merged
/// into a single node with ordered interval children.
struct DisplayNode {
  bool is_leaf = true;
  std::size_t attribute = 0;
  /// Ascending boundaries; child i covers [cuts[i-1], cuts[i]).
  std::vector<double> cuts;
  std::vector<std::size_t> children;
  /// Pct node this display node stands for: the leaf itself, or the top
  /// split of the merged chain.
  std::size_t pct_node = 0;
  std::size_t count = 0;
};

struct DisplayTree {
  Schema schema;
  std::vector<DisplayNode> nodes;

  /// Pct leaf id reached by `attributes`.
  std::size_t route(std::span<const double> attributes) const;
  std::size_t leaf_count() const;
};

DisplayTree compress_tree(const Pct& tree);

/// Human-readable interval such as "[2, 5)" or "< 2".
std::string interval_label(double lo, double hi);

struct RenderOptions {
  /// Training dataset whose rows the tree's member ids index; enables
  /// yearly-consumption ranges in node labels.
  const Dataset* train = nullptr;
};

void write_dot(std::ostream& out, const DisplayTree& display, const Pct& tree,
               const RenderOptions& options = {});
/// Indented plain-text outline of the display tree.
void write_outline(std::ostream& out, const DisplayTree& display, const Pct& tree,
                   const RenderOptions& options = {});

/// 0.05, 0.10, ..., 0.95.
std::vector<double> default_quantile_levels();

/// Empirical quantile of ascending `sorted` at level p in [0, 1], linear
/// interpolation between order statistics: with h = (n - 1) p the result is
/// x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h]).
double quantile_linear(std::span<const double> sorted, double p);

struct NodeQuantiles {
  std::size_t node_id = 0;
  std::vector<double> levels;
  /// One row per level, width T.
  SeriesMatrix curves;
  std::size_t member_count = 0;
};

/// Pointwise quantiles of `members` at each level; throws Error when empty.
NodeQuantiles node_quantiles(const SeriesMatrix& members, std::span<const double> levels,
                             std::size_t node_id = 0);
/// Quantiles over every member below `node_id` of `tree`.
NodeQuantiles node_quantiles(const Pct& tree, const SeriesMatrix& store, std::size_t node_id,
                             std::span<const double> levels);

/// `node_id,level,v_0..v_{T-1}`.
void write_quantiles_csv(std::ostream& out, std::span<const NodeQuantiles> quantiles);

}  // namespace loadpct
