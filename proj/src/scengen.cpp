#include "loadpct/scengen.hpp"

#include <ostream>
#include <stdexcept>
#include <string>

#include "loadpct/csv.hpp"
#include "loadpct/rng.hpp"

namespace loadpct {

namespace {

constexpr std::uint64_t kTreeStream = 0x7063742dULL;
constexpr std::uint64_t kBaselineStream = 0x72616e64ULL;

}  // namespace

std::uint64_t scenario_seed(std::uint64_t seed, std::span<const double> query,
                            std::uint64_t query_index) {
  return mix_seed(mix_seed(mix_seed(seed, kTreeStream), hash_values(query)), query_index);
}

ScenarioSet generate_scenarios(const Pct& tree, const SeriesMatrix* train_store,
                               std::span<const double> query, std::size_t n_scenarios,
                               std::uint64_t seed, std::uint64_t query_index) {
  if (n_scenarios == 0) throw std::invalid_argument("number of scenarios must be at least 1");
  const SeriesMatrix& store = tree.store(train_store);
  const std::size_t leaf = tree.route(query);
  const auto& members = tree.node(leaf).members;

  ScenarioSet set;
  set.query.assign(query.begin(), query.end());
  set.leaf_id = leaf;
  set.seed = scenario_seed(seed, query, query_index);
  set.scenarios = SeriesMatrix(store.width());
  set.scenarios.reserve(n_scenarios);
  set.source_rows.reserve(n_scenarios);
  Rng rng(set.seed);
  for (std::size_t s = 0; s < n_scenarios; ++s) {
    const auto row = members[rng.uniform_index(members.size())];
    set.source_rows.push_back(row);
    set.scenarios.push_back(store.row(row));
  }
  return set;
}

ScenarioSet random_baseline(const SeriesMatrix& train_series, std::span<const double> query,
                            std::size_t n_scenarios, std::uint64_t seed,
                            std::uint64_t query_index) {
  if (train_series.rows() == 0) throw Error("random baseline needs a nonempty training set");
  if (n_scenarios == 0) throw std::invalid_argument("number of scenarios must be at least 1");
  ScenarioSet set;
  set.query.assign(query.begin(), query.end());
  set.leaf_id = kNoLeaf;
  set.seed = mix_seed(mix_seed(seed, kBaselineStream), query_index);
  set.scenarios = SeriesMatrix(train_series.width());
  set.scenarios.reserve(n_scenarios);
  set.source_rows.reserve(n_scenarios);
  Rng rng(set.seed);
  for (std::size_t s = 0; s < n_scenarios; ++s) {
    const auto row = static_cast<std::uint32_t>(rng.uniform_index(train_series.rows()));
    set.source_rows.push_back(row);
    set.scenarios.push_back(train_series.row(row));
  }
  return set;
}

void write_scenarios_csv(std::ostream& out, std::span<const ScenarioSet> sets) {
  const std::size_t T = sets.empty() ? 0 : sets.front().scenarios.width();
  std::string line = "query_id,scenario_id,leaf_id";
  for (std::size_t t = 0; t < T; ++t) (line += ",v_") += std::to_string(t);
  out << line << '\n';
  for (std::size_t q = 0; q < sets.size(); ++q) {
    const auto& set = sets[q];
    const std::string leaf = set.leaf_id == kNoLeaf ? "-1" : std::to_string(set.leaf_id);
    for (std::size_t s = 0; s < set.scenarios.rows(); ++s) {
      line = std::to_string(q);
      (line += ',') += std::to_string(s);
      (line += ',') += leaf;
      for (double v : set.scenarios.row(s)) {
        line += ',';
        csv::append_number(line, v);
      }
      out << line << '\n';
    }
  }
}

}  // namespace loadpct
