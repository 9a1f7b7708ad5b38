#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "loadpct/data.hpp"
#include "loadpct/export.hpp"
#include "test_util.hpp"

using namespace loadpct;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

NodeStats stats_of_count(std::size_t n) { return NodeStats(n, std::vector<double>(1, 0.0), 0.0); }

PctNode split(std::size_t attribute, double threshold, std::uint32_t left, std::uint32_t right,
              std::size_t n) {
  PctNode node;
  node.is_leaf = false;
  node.attribute = attribute;
  node.threshold = threshold;
  node.left = left;
  node.right = right;
  node.stats = stats_of_count(n);
  return node;
}

PctNode leaf(std::vector<std::uint32_t> members) {
  PctNode node;
  node.stats = stats_of_count(members.size());
  node.members = std::move(members);
  return node;
}

Pct make_tree(std::vector<PctNode> nodes, std::size_t attributes, std::size_t rows) {
  return Pct(testutil::consumer_schema(attributes), 1, {}, std::move(nodes), {rows, 0});
}

Pct trained_tree(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_consumers = 30;
  spec.noise = 0.2;
  spec.weather_coupling = 0.04;
  spec.seed = seed;
  BuildConfig cfg;
  cfg.min_leaf = 60;
  cfg.prune_fraction = 0.0;
  return build_tree(synth_dataset(spec).dataset, cfg);
}

}  // namespace

TEST_CASE("same-attribute splits merge into intervals") {
  // a < 5 whose left child splits a < 2.
  const Pct t = make_tree({split(0, 5, 1, 4, 3), split(0, 2, 2, 3, 2), leaf({0}), leaf({1}), leaf({2})}, 1, 3);
  const DisplayTree d = compress_tree(t);
  REQUIRE(d.nodes.size() == 4);
  CHECK(d.nodes[0].cuts == std::vector<double>{2, 5});
  CHECK(d.nodes[0].children.size() == 3);
  CHECK(interval_label(-kInf, 2) == "< 2");
  CHECK(interval_label(2, 5) == "[2, 5)");
  CHECK(interval_label(5, kInf) == ">= 5");
  CHECK(d.leaf_count() == t.leaf_count());
  for (double a : {-1.0, 2.0, 4.99, 5.0, 9.0}) {
    const double q[] = {a};
    CHECK(d.route(q) == t.route(q));
  }
}

TEST_CASE("no merge across a different attribute") {
  // a < 5 -> b < 1 -> a < 2.
  const Pct t = make_tree({split(0, 5, 1, 6, 4), split(1, 1, 2, 3, 3), leaf({0}), split(0, 2, 4, 5, 2),
                           leaf({1}), leaf({2}), leaf({3})},
                          2, 4);
  const DisplayTree d = compress_tree(t);
  CHECK(d.nodes.size() == t.node_count());
  CHECK(d.nodes[0].cuts == std::vector<double>{5});
}

TEST_CASE("display tree routes like the tree") {
  const Pct t = trained_tree(3);
  const DisplayTree d = compress_tree(t);
  CHECK(d.leaf_count() == t.leaf_count());
  CHECK(d.nodes.size() <= t.node_count());
  Rng rng(4);
  std::vector<double> q(t.schema().size());
  for (int i = 0; i < 2000; ++i) {
    for (std::size_t a = 0; a < q.size(); ++a) q[a] = rng.uniform(-5.0, 370.0);
    if (i % 3 == 0) q[5] = rng.uniform(-5.0, 20.0);
    CHECK(d.route(q) == t.route(q));
  }
}

TEST_CASE("renderers") {
  const Pct t = make_tree({split(0, 5, 1, 4, 3), split(0, 2, 2, 3, 2), leaf({0}), leaf({1}), leaf({2})}, 1, 3);
  const DisplayTree d = compress_tree(t);
  std::ostringstream dot, outline;
  write_dot(dot, d, t);
  write_outline(outline, d, t);
  CHECK(dot.str().rfind("digraph pct {", 0) == 0);
  CHECK(dot.str().find("label=\"[2, 5)\"") != std::string::npos);
  CHECK(outline.str() == "a0 (n=3)\n  < 2: leaf 2 (n=1)\n  [2, 5): leaf 3 (n=1)\n  >= 5: leaf 4 (n=1)\n");
}

TEST_CASE("yearly consumption range appears in labels") {
  Dataset data(Schema({{"yearly_consumption", AttributeKind::consumer}}), 1);
  const double v[] = {1.0};
  for (double yc : {1000.0, 1500.0, 4000.0}) {
    data.add("c" + std::to_string(static_cast<int>(yc)), parse_date("2013-01-01"), std::span(&yc, 1), v);
  }
  BuildConfig cfg;
  cfg.max_depth = 0;
  cfg.min_leaf = 1;
  cfg.prune_fraction = 0.0;
  const Pct t = build_tree(data, cfg);
  std::ostringstream dot;
  RenderOptions opts;
  opts.train = &data;
  write_dot(dot, compress_tree(t), t, opts);
  CHECK(dot.str().find("yearly_consumption 1000-4000") != std::string::npos);
}

TEST_CASE("quantiles") {
  SUBCASE("single member") {
    SeriesMatrix m(3);
    const double v[] = {1.0, -2.0, 0.5};
    m.push_back(v);
    const auto levels = default_quantile_levels();
    CHECK(levels.size() == 19);
    CHECK(levels.front() == doctest::Approx(0.05));
    CHECK(levels.back() == doctest::Approx(0.95));
    const auto q = node_quantiles(m, levels);
    for (std::size_t l = 0; l < levels.size(); ++l) CHECK(std::equal(v, v + 3, q.curves.row(l).begin()));
  }
  SUBCASE("midpoint of two points") {
    SeriesMatrix m(1);
    const double a = 0.0, b = 10.0;
    m.push_back(std::span(&a, 1));
    m.push_back(std::span(&b, 1));
    const double level = 0.5;
    CHECK(node_quantiles(m, std::span(&level, 1)).curves.row(0)[0] == 5.0);
  }
  SUBCASE("monotone in level and invariant to member order") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
      const auto m = testutil::random_matrix(rng, 1 + rng.uniform_index(40), 4, -1e3, 1e3);
      SeriesMatrix reversed(4);
      for (std::size_t r = m.rows(); r-- > 0;) reversed.push_back(m.row(r));
      const auto levels = default_quantile_levels();
      const auto q = node_quantiles(m, levels);
      CHECK(q.curves == node_quantiles(reversed, levels).curves);
      for (std::size_t l = 1; l < levels.size(); ++l)
        for (std::size_t t = 0; t < 4; ++t) CHECK(q.curves.row(l - 1)[t] <= q.curves.row(l)[t]);
    }
  }
  SUBCASE("empty node is an error") {
    const auto levels = default_quantile_levels();
    CHECK_THROWS_AS(node_quantiles(SeriesMatrix(2), levels), Error);
  }
  SUBCASE("CSV layout") {
    SeriesMatrix m(2);
    const double v[] = {1.0, 2.0};
    m.push_back(v);
    const double level = 0.5;
    const NodeQuantiles q[] = {node_quantiles(m, std::span(&level, 1), 7)};
    std::ostringstream out;
    write_quantiles_csv(out, q);
    CHECK(out.str() == "node_id,level,v_0,v_1\n7,0.5,1,2\n");
  }
}

TEST_CASE("model round trip") {
  const Pct t = trained_tree(6);
  const std::string text = serialize_model(t);
  const Pct back = deserialize_model(text);
  CHECK(serialize_model(back) == text);
  Rng rng(7);
  std::vector<double> q(t.schema().size());
  for (int i = 0; i < 1000; ++i) {
    for (auto& v : q) v = rng.uniform(-5.0, 370.0);
    CHECK(back.route(q) == t.route(q));
  }
  SUBCASE("embedded series survive") {
    SynthSpec spec;
    spec.n_consumers = 30;
    spec.noise = 0.2;
    spec.weather_coupling = 0.04;
    spec.seed = 6;
    const Dataset data = synth_dataset(spec).dataset;
    const Pct e = t.with_embedded_series(data.series_matrix());
    const Pct e2 = deserialize_model(serialize_model(e));
    CHECK(e2.has_embedded_series());
    CHECK(*e2.embedded_series() == *e.embedded_series());
  }
}

TEST_CASE("model file errors") {
  const Pct t = trained_tree(8);
  const std::string text = serialize_model(t);
  CHECK_THROWS_AS(deserialize_model(text.substr(0, text.size() / 2)), ParseError);
  CHECK_THROWS_AS(deserialize_model("not json"), ParseError);
  std::string wrong_version = text;
  wrong_version.replace(wrong_version.find("\"version\":1"), 11, "\"version\":9");
  CHECK_THROWS_AS(deserialize_model(wrong_version), ParseError);
  std::string bad_hash = text;
  const auto at = bad_hash.find("\"schema_hash\":\"") + 15;
  bad_hash[at] = bad_hash[at] == '0' ? '1' : '0';
  CHECK_THROWS_AS(deserialize_model(bad_hash), SchemaError);
  std::string bad_child = text;
  const auto left = bad_child.find("\"left\":");
  bad_child.replace(left, 8, "\"left\":9");
  CHECK_THROWS(deserialize_model(bad_child));

  const Pct back = deserialize_model(text);
  CHECK_THROWS_AS(back.check_compatible(testutil::consumer_schema(3), 48), SchemaError);
}
