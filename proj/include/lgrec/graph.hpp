#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lgrec/common.hpp"
#include "lgrec/entity_table.hpp"
#include "lgrec/tsv.hpp"

namespace lgrec {

// One weighted subgraph over an external entity vocabulary. Adjacency is
// CSR with per-source neighbors sorted by target index; weights already
// carry the flattening exponent.
struct GraphLayer {
  std::string name;
  double weight_exponent = 1.0;
  std::vector<size_t> offsets;     // size = |V| + 1
  std::vector<uint32_t> targets;
  std::vector<double> weights;

  size_t edge_count() const { return targets.size(); }
  size_t node_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }

  std::span<const uint32_t> neighbors(uint32_t node) const {
    return {targets.data() + offsets[node], offsets[node + 1] - offsets[node]};
  }
  std::span<const double> neighbor_weights(uint32_t node) const {
    return {weights.data() + offsets[node], offsets[node + 1] - offsets[node]};
  }
  size_t out_degree(uint32_t node) const { return offsets[node + 1] - offsets[node]; }

  // Stored weight of edge src->dst, 0 when absent.
  double edge_weight(uint32_t src, uint32_t dst) const {
    auto nb = neighbors(src);
    auto it = std::lower_bound(nb.begin(), nb.end(), dst);
    if (it == nb.end() || *it != dst) return 0.0;
    return weights[offsets[src] + static_cast<size_t>(it - nb.begin())];
  }
};

// load_layer result: the layer plus the vocabulary its indices refer to
// (local until build_layered_graph unifies the layers).
struct LoadedLayer {
  GraphLayer layer;
  EntityTable vocab;
};

namespace detail {

inline GraphLayer build_csr(std::string name, double exponent, uint32_t node_count,
                            std::vector<std::pair<std::pair<uint32_t, uint32_t>, double>> edges) {
  std::sort(edges.begin(), edges.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  GraphLayer layer;
  layer.name = std::move(name);
  layer.weight_exponent = exponent;
  layer.offsets.assign(node_count + 1, 0);
  layer.targets.reserve(edges.size());
  layer.weights.reserve(edges.size());
  for (const auto& [key, w] : edges) layer.offsets[key.first + 1]++;
  for (size_t i = 1; i < layer.offsets.size(); ++i) layer.offsets[i] += layer.offsets[i - 1];
  for (const auto& [key, w] : edges) {
    layer.targets.push_back(key.second);
    layer.weights.push_back(w);
  }
  return layer;
}

}  // namespace detail

/// Ingest one edge-list layer: TSV `src \t dst [\t weight]`, weight default
/// 1.0, '#' comment lines skipped. Self-loops are dropped; duplicate
/// (src,dst) raw weights are summed, then the exponent is applied.
inline LoadedLayer load_layer(const std::string& path, const std::string& name,
                              double weight_exponent) {
  if (!(weight_exponent > 0.0 && weight_exponent <= 1.0))
    throw ConfigError("layer '" + name + "': weight exponent must be in (0,1], got " +
                      format_double(weight_exponent));

  LoadedLayer out;
  std::map<std::pair<uint32_t, uint32_t>, double> raw;  // summed raw weights
  for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
    if (f.size() < 2 || f.size() > 3)
      throw Error(path + ":" + std::to_string(line_no) + ": expected 2 or 3 columns, got " +
                  std::to_string(f.size()));
    if (f[0].empty() || f[1].empty())
      throw Error(path + ":" + std::to_string(line_no) + ": empty entity field");
    double w = 1.0;
    if (f.size() == 3) {
      w = parse_double(f[2], path, line_no);
      if (!(w > 0.0) || !std::isfinite(w))
        throw Error(path + ":" + std::to_string(line_no) + ": edge weight must be positive and finite");
    }
    uint32_t src = out.vocab.intern(f[0]);
    uint32_t dst = out.vocab.intern(f[1]);
    if (src == dst) return;  // self-loop
    raw[{src, dst}] += w;
  });
  if (raw.empty()) throw Error(path + ": no edges (empty or self-loops only)");

  std::vector<std::pair<std::pair<uint32_t, uint32_t>, double>> edges;
  edges.reserve(raw.size());
  for (const auto& [key, sum] : raw) {
    double w = weight_exponent == 1.0 ? sum : std::pow(sum, weight_exponent);
    edges.push_back({key, w});
  }
  out.layer = detail::build_csr(name, weight_exponent, out.vocab.size(), std::move(edges));
  return out;
}

struct DenoiseStats {
  size_t nodes_removed = 0;
  size_t edges_removed = 0;  // edges dropped because an endpoint was removed
};

// Unified entity vocabulary plus the per-layer subgraphs and the yearly
// pageview counts (0 when absent from the pageview file).
struct LayeredGraph {
  EntityTable vocabulary;
  std::vector<GraphLayer> layers;
  std::vector<uint64_t> pageview;
  DenoiseStats stats;

  size_t total_edges() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.edge_count();
    return n;
  }

  int layer_index(std::string_view name) const {
    for (size_t i = 0; i < layers.size(); ++i)
      if (layers[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

// alias -> canonical, resolved transitively. A cycle is an error.
class AliasMap {
 public:
  AliasMap() = default;

  static AliasMap load(const std::string& path) {
    AliasMap m;
    for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
      if (f.size() != 2 || f[0].empty() || f[1].empty())
        throw Error(path + ":" + std::to_string(line_no) + ": expected `alias \\t canonical`");
      auto [it, inserted] = m.map_.emplace(std::string(f[0]), std::string(f[1]));
      if (!inserted && it->second != f[1])
        throw Error(path + ":" + std::to_string(line_no) + ": conflicting alias for '" +
                    std::string(f[0]) + "'");
    });
    m.check_cycles();
    return m;
  }

  const std::string& resolve(const std::string& symbol) const {
    const std::string* cur = &symbol;
    for (size_t hops = 0; hops <= map_.size(); ++hops) {
      auto it = map_.find(*cur);
      if (it == map_.end()) return *cur;
      cur = &it->second;
    }
    throw Error("alias cycle involving '" + symbol + "'");
  }

  bool empty() const { return map_.empty(); }

 private:
  void check_cycles() const {
    for (const auto& [alias, canon] : map_) resolve(alias);
  }

  std::unordered_map<std::string, std::string> map_;
};

/// Unify layers over one vocabulary (after alias substitution), attach
/// pageviews, and drop every node below the pageview threshold together
/// with its incident edges. Entities missing from the pageview file count
/// as pageview 0.
inline LayeredGraph build_layered_graph(const std::vector<LoadedLayer>& loaded,
                                        const std::string& pageview_path,
                                        const std::string& alias_path, int64_t min_pageview) {
  if (loaded.empty()) throw ConfigError("build_layered_graph: no layers");
  if (min_pageview < 0) throw ConfigError("min_pageview must be >= 0");

  AliasMap aliases;
  if (!alias_path.empty()) aliases = AliasMap::load(alias_path);

  // Union vocabulary in (layer order, local first-seen order).
  EntityTable unified;
  std::vector<std::vector<uint32_t>> local_to_union(loaded.size());
  for (size_t li = 0; li < loaded.size(); ++li) {
    const EntityTable& local = loaded[li].vocab;
    local_to_union[li].resize(local.size());
    for (uint32_t i = 0; i < local.size(); ++i)
      local_to_union[li][i] = unified.intern(aliases.resolve(local.symbol(i)));
  }

  // Pageviews keyed by canonical symbol; alias duplicates accumulate.
  std::vector<uint64_t> pageview(unified.size(), 0);
  if (!pageview_path.empty()) {
    for_each_tsv_row(pageview_path, [&](const std::vector<std::string_view>& f, size_t line_no) {
      if (f.size() != 2)
        throw Error(pageview_path + ":" + std::to_string(line_no) + ": expected `entity \\t count`");
      uint64_t count = parse_u64(f[1], pageview_path, line_no);
      uint32_t id = unified.find(aliases.resolve(std::string(f[0])));
      if (id != kNoEntity) pageview[id] += count;
    });
  }

  std::vector<bool> keep(unified.size());
  for (uint32_t i = 0; i < unified.size(); ++i)
    keep[i] = pageview[i] >= static_cast<uint64_t>(min_pageview);

  LayeredGraph graph;
  std::vector<uint32_t> compact(unified.size(), kNoEntity);
  for (uint32_t i = 0; i < unified.size(); ++i) {
    if (keep[i]) {
      compact[i] = graph.vocabulary.intern(unified.symbol(i));
      graph.pageview.push_back(pageview[i]);
    } else {
      ++graph.stats.nodes_removed;
    }
  }

  for (size_t li = 0; li < loaded.size(); ++li) {
    const GraphLayer& src = loaded[li].layer;
    std::map<std::pair<uint32_t, uint32_t>, double> merged;
    for (uint32_t s = 0; s < src.node_count(); ++s) {
      auto nb = src.neighbors(s);
      auto wts = src.neighbor_weights(s);
      uint32_t us = local_to_union[li][s];
      for (size_t j = 0; j < nb.size(); ++j) {
        uint32_t ud = local_to_union[li][nb[j]];
        if (us == ud) continue;  // self-loop introduced by aliasing
        if (!keep[us] || !keep[ud]) {
          ++graph.stats.edges_removed;
          continue;
        }
        merged[{compact[us], compact[ud]}] += wts[j];
      }
    }
    std::vector<std::pair<std::pair<uint32_t, uint32_t>, double>> edges(merged.begin(), merged.end());
    graph.layers.push_back(detail::build_csr(src.name, src.weight_exponent,
                                             graph.vocabulary.size(), std::move(edges)));
  }
  return graph;
}

/// Transition distribution of `node` in layer `layer_idx`: neighbor j with
/// probability w_j / sum(w). Empty when the node has no out-edges there.
inline std::vector<std::pair<uint32_t, double>> out_distribution(const LayeredGraph& graph,
                                                                 size_t layer_idx, uint32_t node) {
  if (layer_idx >= graph.layers.size())
    throw Error("layer index out of range: " + std::to_string(layer_idx));
  if (node >= graph.vocabulary.size())
    throw Error("node index out of range: " + std::to_string(node));
  const GraphLayer& layer = graph.layers[layer_idx];
  auto nb = layer.neighbors(node);
  auto wts = layer.neighbor_weights(node);
  double total = 0.0;
  for (double w : wts) total += w;
  std::vector<std::pair<uint32_t, double>> dist;
  dist.reserve(nb.size());
  for (size_t j = 0; j < nb.size(); ++j) dist.emplace_back(nb[j], wts[j] / total);
  return dist;
}

// --- graph artifact (pipeline stage output) --------------------------------

inline void save_graph(const LayeredGraph& graph, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "lgrec-graph\t1\n";
  out << "nodes\t" << graph.vocabulary.size() << "\n";
  for (uint32_t i = 0; i < graph.vocabulary.size(); ++i)
    out << graph.vocabulary.symbol(i) << "\t" << graph.pageview[i] << "\n";
  out << "layers\t" << graph.layers.size() << "\n";
  for (const auto& layer : graph.layers) {
    out << "layer\t" << layer.name << "\t" << format_double(layer.weight_exponent) << "\t"
        << layer.edge_count() << "\n";
    for (uint32_t s = 0; s < layer.node_count(); ++s) {
      auto nb = layer.neighbors(s);
      auto wts = layer.neighbor_weights(s);
      for (size_t j = 0; j < nb.size(); ++j)
        out << s << "\t" << nb[j] << "\t" << format_double(wts[j]) << "\n";
    }
  }
  if (!out) throw Error("write failed: " + path);
}

inline LayeredGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph artifact: " + path);
  std::string line;
  size_t line_no = 0;
  auto next_line = [&]() -> std::vector<std::string_view> {
    if (!std::getline(in, line)) throw Error(path + ": truncated graph artifact");
    ++line_no;
    return split_view(line, '\t');
  };

  auto header = next_line();
  if (header.size() != 2 || header[0] != "lgrec-graph" || header[1] != "1")
    throw Error(path + ": not a lgrec graph artifact");
  auto nodes_hdr = next_line();
  if (nodes_hdr.size() != 2 || nodes_hdr[0] != "nodes") throw Error(path + ": missing node count");
  uint64_t n = parse_u64(nodes_hdr[1], path, line_no);

  LayeredGraph graph;
  graph.pageview.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    auto f = next_line();
    if (f.size() != 2) throw Error(path + ":" + std::to_string(line_no) + ": bad node line");
    graph.vocabulary.intern(f[0]);
    graph.pageview.push_back(parse_u64(f[1], path, line_no));
  }

  auto layers_hdr = next_line();
  if (layers_hdr.size() != 2 || layers_hdr[0] != "layers")
    throw Error(path + ": missing layer count");
  uint64_t m = parse_u64(layers_hdr[1], path, line_no);
  for (uint64_t li = 0; li < m; ++li) {
    auto h = next_line();
    if (h.size() != 4 || h[0] != "layer")
      throw Error(path + ":" + std::to_string(line_no) + ": bad layer header");
    std::string layer_name(h[1]);  // h views into the line buffer the edge loop reuses
    double exponent = parse_double(h[2], path, line_no);
    uint64_t ecount = parse_u64(h[3], path, line_no);
    std::vector<std::pair<std::pair<uint32_t, uint32_t>, double>> edges;
    edges.reserve(ecount);
    for (uint64_t e = 0; e < ecount; ++e) {
      auto f = next_line();
      if (f.size() != 3) throw Error(path + ":" + std::to_string(line_no) + ": bad edge line");
      uint32_t s = static_cast<uint32_t>(parse_u64(f[0], path, line_no));
      uint32_t d = static_cast<uint32_t>(parse_u64(f[1], path, line_no));
      if (s >= n || d >= n)
        throw Error(path + ":" + std::to_string(line_no) + ": edge endpoint out of range");
      edges.push_back({{s, d}, parse_double(f[2], path, line_no)});
    }
    graph.layers.push_back(detail::build_csr(std::move(layer_name), exponent,
                                             graph.vocabulary.size(), std::move(edges)));
  }
  return graph;
}

}  // namespace lgrec
