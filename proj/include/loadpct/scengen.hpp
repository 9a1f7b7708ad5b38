#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "loadpct/core.hpp"
#include "loadpct/pct.hpp"

namespace loadpct {

/// leaf_id of scenarios drawn without a tree.
inline constexpr std::size_t kNoLeaf = std::numeric_limits<std::size_t>::max();

struct ScenarioSet {
  std::vector<double> query;
  SeriesMatrix scenarios;
  std::size_t leaf_id = kNoLeaf;
  std::uint64_t seed = 0;
  /// Store row each scenario was copied from.
  std::vector<std::uint32_t> source_rows;
};

/// Per-query stream seed for tree-based generation: depends on the base
/// seed, the query attribute values and the query's position in its batch.
std::uint64_t scenario_seed(std::uint64_t seed, std::span<const double> query,
                            std::uint64_t query_index);

/// Routes `query` to a leaf and draws `n_scenarios` member series uniformly
/// with replacement. `train_store` may be null when the tree embeds series.
ScenarioSet generate_scenarios(const Pct& tree, const SeriesMatrix* train_store,
                               std::span<const double> query, std::size_t n_scenarios,
                               std::uint64_t seed, std::uint64_t query_index = 0);

/// Uniform with-replacement draw from every training series, ignoring the
/// query. The stream depends on (seed, query_index) only.
ScenarioSet random_baseline(const SeriesMatrix& train_series, std::span<const double> query,
                            std::size_t n_scenarios, std::uint64_t seed,
                            std::uint64_t query_index = 0);

/// CSV `query_id,scenario_id,leaf_id,v_0..v_{T-1}`; query_id is the
/// position in `sets`, leaf_id is -1 for baseline draws.
void write_scenarios_csv(std::ostream& out, std::span<const ScenarioSet> sets);

}  // namespace loadpct
