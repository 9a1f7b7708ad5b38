#include "loadpct/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "loadpct/csv.hpp"
#include "loadpct/data.hpp"

namespace loadpct {

namespace {

using json = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t parse_hex64(const std::string& text) {
  if (text.size() != 16) throw ParseError("invalid 64-bit hex value '" + text + "'");
  std::uint64_t v = 0;
  for (char c : text) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      throw ParseError("invalid 64-bit hex value '" + text + "'");
    }
  }
  return v;
}

json stats_fields(json node, const NodeStats& stats) {
  node["n"] = stats.count();
  node["sum"] = std::vector<double>(stats.sum().begin(), stats.sum().end());
  node["sumsq"] = stats.sum_squares();
  return node;
}

std::string short_number(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string dot_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

/// "yearly_consumption 1200-4300" over the members of a Pct node, when the
/// training data is available and the tree indexes it directly.
std::string consumption_range(const Pct& tree, std::size_t pct_node, const RenderOptions& options) {
  if (!options.train || tree.has_embedded_series()) return {};
  if (options.train->size() != tree.store_ref().rows) return {};
  const auto col = options.train->schema().index_of(kYearlyConsumptionName);
  if (!col) return {};
  double lo = kInf, hi = -kInf;
  for (auto m : tree.members_under(pct_node)) {
    const double v = options.train->attributes(m)[*col];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return std::string(kYearlyConsumptionName) + " " + short_number(lo) + "-" + short_number(hi);
}

std::string node_caption(const DisplayTree& display, const DisplayNode& node) {
  if (node.is_leaf) return "leaf " + std::to_string(node.pct_node);
  return display.schema[node.attribute].name;
}

std::string child_interval(const DisplayNode& node, std::size_t i) {
  const double lo = i == 0 ? -kInf : node.cuts[i - 1];
  const double hi = i == node.cuts.size() ? kInf : node.cuts[i];
  return interval_label(lo, hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Model file

std::string serialize_model(const Pct& tree) {
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  doc["schema_hash"] = tree.schema().hash_hex();
  json schema = json::array();
  for (const auto& e : tree.schema()) schema.push_back({{"name", e.name}, {"kind", to_string(e.kind)}});
  doc["schema"] = std::move(schema);
  doc["T"] = tree.series_length();
  const auto& c = tree.config();
  doc["config"] = {{"max_depth", c.max_depth},
                   {"min_leaf", c.min_leaf},
                   {"prune_fraction", c.prune_fraction},
                   {"seed", c.seed}};
  doc["store"] = {{"rows", tree.store_ref().rows},
                  {"fingerprint", csv::hex64(tree.store_ref().fingerprint)},
                  {"embedded", tree.has_embedded_series()}};
  json nodes = json::array();
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const PctNode& n = tree.node(i);
    json node;
    node["id"] = i;
    if (n.is_leaf) {
      node["type"] = "leaf";
      node = stats_fields(std::move(node), n.stats);
      node["members"] = n.members;
    } else {
      node["type"] = "split";
      node["attribute"] = n.attribute;
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
      node = stats_fields(std::move(node), n.stats);
    }
    nodes.push_back(std::move(node));
  }
  doc["nodes"] = std::move(nodes);
  if (tree.has_embedded_series()) {
    const SeriesMatrix& m = *tree.embedded_series();
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    }
    doc["series"] = std::move(rows);
  }
  return doc.dump() + "\n";
}

Pct deserialize_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", std::string()) != kModelFormat) {
      throw ParseError("not a loadpct model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion) {
      throw ParseError("unsupported model version " + std::to_string(version) + " (expected " +
                       std::to_string(kModelVersion) + ")");
    }
    std::vector<AttributeSpec> specs;
    for (const auto& e : doc.at("schema")) {
      specs.push_back({e.at("name").get<std::string>(),
                       attribute_kind_from_string(e.at("kind").get<std::string>())});
    }
    Schema schema(std::move(specs));
    if (schema.hash_hex() != doc.at("schema_hash").get<std::string>()) {
      throw SchemaError("model schema does not match its schema hash");
    }
    const auto T = doc.at("T").get<std::size_t>();
    BuildConfig config;
    const auto& c = doc.at("config");
    config.max_depth = c.at("max_depth").get<std::size_t>();
    config.min_leaf = c.at("min_leaf").get<std::size_t>();
    config.prune_fraction = c.at("prune_fraction").get<double>();
    config.seed = c.at("seed").get<std::uint64_t>();

    const auto& s = doc.at("store");
    StoreRef store{s.at("rows").get<std::size_t>(),
                   parse_hex64(s.at("fingerprint").get<std::string>())};
    std::optional<SeriesMatrix> embedded;
    if (s.at("embedded").get<bool>()) {
      SeriesMatrix m(T);
      for (const auto& row : doc.at("series")) m.push_back(row.get<std::vector<double>>());
      if (m.rows() != store.rows || m.fingerprint() != store.fingerprint) {
        throw ParseError("embedded series do not match the store fingerprint");
      }
      embedded = std::move(m);
    }

    std::vector<PctNode> nodes;
    for (const auto& jn : doc.at("nodes")) {
      PctNode n;
      if (jn.at("id").get<std::size_t>() != nodes.size()) throw ParseError("node ids out of order");
      const auto type = jn.at("type").get<std::string>();
      auto sum = jn.at("sum").get<std::vector<double>>();
      if (sum.size() != T) throw ParseError("node sum has wrong length");
      n.stats = NodeStats(jn.at("n").get<std::size_t>(), std::move(sum), jn.at("sumsq").get<double>());
      if (type == "leaf") {
        n.is_leaf = true;
        n.members = jn.at("members").get<std::vector<std::uint32_t>>();
      } else if (type == "split") {
        n.is_leaf = false;
        n.attribute = jn.at("attribute").get<std::size_t>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<std::uint32_t>();
        n.right = jn.at("right").get<std::uint32_t>();
      } else {
        throw ParseError("unknown node type '" + type + "'");
      }
      nodes.push_back(std::move(n));
    }
    return Pct(std::move(schema), T, config, std::move(nodes), store, std::move(embedded));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent model file: ") + e.what());
  }
}

void save_model(const std::string& path, const Pct& tree) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path);
  out << serialize_model(tree);
}

Pct load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

// ---------------------------------------------------------------------------
// Display tree

DisplayTree compress_tree(const Pct& tree) {
  DisplayTree display;
  display.schema = tree.schema();

  struct Frontier {
    std::size_t pct_node;
    double lo;
    double hi;
  };
  auto build = [&](auto&& self, std::size_t id) -> std::size_t {
    const PctNode& node = tree.node(id);
    const std::size_t at = display.nodes.size();
    display.nodes.push_back({});
    display.nodes[at].pct_node = id;
    display.nodes[at].count = node.stats.count();
    if (node.is_leaf) return at;

    // Expand the maximal same-attribute subtree into ordered intervals.
    const std::size_t attribute = node.attribute;
    std::vector<Frontier> frontier;
    auto expand = [&](auto&& rec, std::size_t nid, double lo, double hi) -> void {
      const PctNode& n = tree.node(nid);
      if (n.is_leaf || n.attribute != attribute) {
        frontier.push_back({nid, lo, hi});
        return;
      }
      if (n.threshold <= lo) {
        rec(rec, n.right, lo, hi);
      } else if (n.threshold >= hi) {
        rec(rec, n.left, lo, hi);
      } else {
        rec(rec, n.left, lo, n.threshold);
        rec(rec, n.right, n.threshold, hi);
      }
    };
    expand(expand, id, -kInf, kInf);

    std::vector<double> cuts;
    for (std::size_t i = 1; i < frontier.size(); ++i) cuts.push_back(frontier[i].lo);
    std::vector<std::size_t> children;
    for (const auto& f : frontier) children.push_back(self(self, f.pct_node));
    DisplayNode& out = display.nodes[at];
    out.is_leaf = false;
    out.attribute = attribute;
    out.cuts = std::move(cuts);
    out.children = std::move(children);
    return at;
  };
  build(build, 0);
  return display;
}

std::size_t DisplayTree::route(std::span<const double> attributes) const {
  if (attributes.size() != schema.size()) throw SchemaError("query length differs from schema");
  std::size_t id = 0;
  while (!nodes[id].is_leaf) {
    const DisplayNode& n = nodes[id];
    const auto k = std::upper_bound(n.cuts.begin(), n.cuts.end(), attributes[n.attribute]) -
                   n.cuts.begin();
    id = n.children[static_cast<std::size_t>(k)];
  }
  return nodes[id].pct_node;
}

std::size_t DisplayTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const DisplayNode& n) { return n.is_leaf; }));
}

std::string interval_label(double lo, double hi) {
  if (std::isinf(lo) && std::isinf(hi)) return "any";
  if (std::isinf(lo)) return "< " + short_number(hi);
  if (std::isinf(hi)) return ">= " + short_number(lo);
  return "[" + short_number(lo) + ", " + short_number(hi) + ")";
}

void write_dot(std::ostream& out, const DisplayTree& display, const Pct& tree,
               const RenderOptions& options) {
  out << "digraph pct {\n";
  out << "  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < display.nodes.size(); ++i) {
    const DisplayNode& n = display.nodes[i];
    std::string label = node_caption(display, n) + "\nn=" + std::to_string(n.count);
    const auto range = consumption_range(tree, n.pct_node, options);
    if (!range.empty()) label += "\n" + range;
    out << "  n" << i << " [label=\"" << dot_escape(label) << '"'
        << (n.is_leaf ? ", style=rounded" : "") << "];\n";
  }
  for (std::size_t i = 0; i < display.nodes.size(); ++i) {
    const DisplayNode& n = display.nodes[i];
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      out << "  n" << i << " -> n" << n.children[k] << " [label=\""
          << dot_escape(child_interval(n, k)) << "\"];\n";
    }
  }
  out << "}\n";
}

void write_outline(std::ostream& out, const DisplayTree& display, const Pct& tree,
                   const RenderOptions& options) {
  auto print = [&](auto&& self, std::size_t id, const std::string& edge, int indent) -> void {
    const DisplayNode& n = display.nodes[id];
    out << std::string(static_cast<std::size_t>(indent) * 2, ' ');
    if (!edge.empty()) out << edge << ": ";
    out << node_caption(display, n) << " (n=" << n.count;
    const auto range = consumption_range(tree, n.pct_node, options);
    if (!range.empty()) out << ", " << range;
    out << ")\n";
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      self(self, n.children[k], child_interval(n, k), indent + 1);
    }
  };
  print(print, 0, "", 0);
}

// ---------------------------------------------------------------------------
// Quantiles

std::vector<double> default_quantile_levels() {
  std::vector<double> levels;
  for (int i = 1; i <= 19; ++i) levels.push_back(static_cast<double>(i) * 5.0 / 100.0);
  return levels;
}

double quantile_linear(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  const double v = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
  return std::clamp(v, sorted[lo], sorted[lo + 1]);
}

NodeQuantiles node_quantiles(const SeriesMatrix& members, std::span<const double> levels,
                             std::size_t node_id) {
  if (members.rows() == 0) throw Error("quantiles of a node without members");
  if (!std::is_sorted(levels.begin(), levels.end())) {
    throw std::invalid_argument("quantile levels must be ascending");
  }
  NodeQuantiles q;
  q.node_id = node_id;
  q.levels.assign(levels.begin(), levels.end());
  q.member_count = members.rows();
  q.curves = SeriesMatrix(levels.size(), members.width());
  std::vector<double> column(members.rows());
  for (std::size_t t = 0; t < members.width(); ++t) {
    for (std::size_t r = 0; r < members.rows(); ++r) column[r] = members.row(r)[t];
    std::sort(column.begin(), column.end());
    for (std::size_t l = 0; l < levels.size(); ++l) q.curves.row(l)[t] = quantile_linear(column, levels[l]);
  }
  return q;
}

NodeQuantiles node_quantiles(const Pct& tree, const SeriesMatrix& store, std::size_t node_id,
                             std::span<const double> levels) {
  if (node_id >= tree.node_count()) throw Error("no node " + std::to_string(node_id) + " in tree");
  const SeriesMatrix& source = tree.store(&store);
  SeriesMatrix members(source.width());
  for (auto m : tree.members_under(node_id)) members.push_back(source.row(m));
  return node_quantiles(members, levels, node_id);
}

void write_quantiles_csv(std::ostream& out, std::span<const NodeQuantiles> quantiles) {
  const std::size_t T = quantiles.empty() ? 0 : quantiles.front().curves.width();
  std::string line = "node_id,level";
  for (std::size_t t = 0; t < T; ++t) (line += ",v_") += std::to_string(t);
  out << line << '\n';
  for (const auto& q : quantiles) {
    for (std::size_t l = 0; l < q.levels.size(); ++l) {
      line = std::to_string(q.node_id) + ",";
      csv::append_number(line, q.levels[l]);
      for (double v : q.curves.row(l)) {
        line += ',';
        csv::append_number(line, v);
      }
      out << line << '\n';
    }
  }
}

}  // namespace loadpct
