#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lgrec/candidates.hpp"
#include "lgrec/common.hpp"
#include "lgrec/embedding.hpp"
#include "lgrec/graph.hpp"
#include "lgrec/tsv.hpp"

namespace lgrec {

// --- ranking features --------------------------------------------------------

enum Feature : uint32_t {
  kLg2vecSim = 0,
  kDoc2vecSim,
  kDoc2vecPresent,  // 1 when both q and d have document vectors
  kClickstream,
  kPageview,
  kPopratio,
  kSearchlog,
  kFeatureCount
};

inline const std::array<const char*, kFeatureCount>& feature_names() {
  static const std::array<const char*, kFeatureCount> names = {
      "lg2vec_sim", "doc2vec_sim", "doc2vec_present", "clickstream",
      "pageview",   "popratio",    "searchlog"};
  return names;
}

using FeatureMask = uint32_t;

constexpr FeatureMask feature_bit(uint32_t f) { return FeatureMask(1) << f; }
constexpr bool mask_has(FeatureMask mask, uint32_t f) { return (mask >> f) & 1; }

inline FeatureMask mask_from_names(const std::vector<std::string>& names) {
  FeatureMask mask = 0;
  for (const auto& name : names) {
    bool found = false;
    for (uint32_t f = 0; f < kFeatureCount; ++f) {
      if (name == feature_names()[f]) {
        mask |= feature_bit(f);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown feature name: '" + name + "'");
  }
  if (mask == 0) throw ConfigError("feature mask is empty");
  return mask;
}

inline std::vector<std::string> mask_names(FeatureMask mask) {
  std::vector<std::string> names;
  for (uint32_t f = 0; f < kFeatureCount; ++f)
    if (mask_has(mask, f)) names.push_back(feature_names()[f]);
  return names;
}

// Values for the active features; inactive slots stay 0 and are never read
// by a model trained with the same mask.
struct FeatureVector {
  std::array<double, kFeatureCount> v{};
  FeatureMask mask = 0;
};

// (q,d) -> count, from an external co-occurrence table.
class SearchlogTable {
 public:
  static SearchlogTable load(const std::string& path) {
    SearchlogTable t;
    for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
      if (f.size() != 3)
        throw Error(path + ":" + std::to_string(line_no) + ": expected `q \\t d \\t count`");
      t.counts_[key(f[0], f[1])] += parse_double(f[2], path, line_no);
    });
    return t;
  }

  double lookup(std::string_view q, std::string_view d) const {
    auto it = counts_.find(key(q, d));
    return it == counts_.end() ? 0.0 : it->second;
  }

 private:
  static std::string key(std::string_view q, std::string_view d) {
    std::string k;
    k.reserve(q.size() + d.size() + 1);
    k.append(q);
    k.push_back('\t');
    k.append(d);
    return k;
  }
  std::unordered_map<std::string, double> counts_;
};

// popratio cap when a pageview is zero; far outside any realistic ratio.
inline constexpr double kPopratioCap = 13.815510557964274;  // ln(1e6)

// Everything extract_features reads. The popratio_capped counter records
// how often the zero-pageview cap fired.
struct FeatureContext {
  const EmbeddingModel* lg2vec = nullptr;      // required
  const EmbeddingModel* doc2vec = nullptr;     // optional
  const LayeredGraph* graph = nullptr;         // optional: clickstream + pageview
  int clickstream_layer = -1;                  // index into graph->layers
  const SearchlogTable* searchlog = nullptr;   // optional
  mutable std::atomic<uint64_t> popratio_capped{0};

  uint64_t pageview_of(std::string_view entity) const {
    if (!graph) return 0;
    uint32_t id = graph->vocabulary.find(entity);
    return id == kNoEntity ? 0 : graph->pageview[id];
  }
};

/// Per-pair ranking features. q and d must be in the lg2vec vocabulary;
/// entities without document vectors get doc2vec_sim 0 and the presence
/// indicator cleared. popratio is ln(pageview(d)/pageview(q)), capped at
/// +-ln(1e6) when a pageview is zero.
inline FeatureVector extract_features(const FeatureContext& ctx, std::string_view q,
                                      std::string_view d, FeatureMask mask) {
  if (!ctx.lg2vec) throw Error("extract_features: lg2vec model missing");
  FeatureVector fv;
  fv.mask = mask;

  if (mask_has(mask, kLg2vecSim)) fv.v[kLg2vecSim] = cosine(*ctx.lg2vec, q, d);
  if (mask_has(mask, kDoc2vecSim) || mask_has(mask, kDoc2vecPresent)) {
    bool present = ctx.doc2vec && has_doc_tag(*ctx.doc2vec, q) && has_doc_tag(*ctx.doc2vec, d);
    if (present && mask_has(mask, kDoc2vecSim)) fv.v[kDoc2vecSim] = doc_cosine(*ctx.doc2vec, q, d);
    if (mask_has(mask, kDoc2vecPresent)) fv.v[kDoc2vecPresent] = present ? 1.0 : 0.0;
  }
  if (mask_has(mask, kClickstream) && ctx.graph && ctx.clickstream_layer >= 0) {
    uint32_t qi = ctx.graph->vocabulary.find(q);
    uint32_t di = ctx.graph->vocabulary.find(d);
    if (qi != kNoEntity && di != kNoEntity)
      fv.v[kClickstream] =
          ctx.graph->layers[static_cast<size_t>(ctx.clickstream_layer)].edge_weight(qi, di);
  }
  if (mask_has(mask, kPageview)) fv.v[kPageview] = static_cast<double>(ctx.pageview_of(d));
  if (mask_has(mask, kPopratio)) {
    double pq = static_cast<double>(ctx.pageview_of(q));
    double pd = static_cast<double>(ctx.pageview_of(d));
    if (pq == 0.0 && pd == 0.0) {
      fv.v[kPopratio] = 0.0;
      ctx.popratio_capped.fetch_add(1, std::memory_order_relaxed);
    } else if (pq == 0.0) {
      fv.v[kPopratio] = kPopratioCap;
      ctx.popratio_capped.fetch_add(1, std::memory_order_relaxed);
    } else if (pd == 0.0) {
      fv.v[kPopratio] = -kPopratioCap;
      ctx.popratio_capped.fetch_add(1, std::memory_order_relaxed);
    } else {
      fv.v[kPopratio] = std::clamp(std::log(pd / pq), -kPopratioCap, kPopratioCap);
    }
  }
  if (mask_has(mask, kSearchlog) && ctx.searchlog) fv.v[kSearchlog] = ctx.searchlog->lookup(q, d);
  return fv;
}

// --- golden sets ---------------------------------------------------------------

// Per-query ordered relevant entities, most relevant first.
struct GoldenSet {
  struct Entry {
    std::string query;
    std::vector<std::string> relevant;
  };
  std::vector<Entry> entries;

  const Entry* find(std::string_view query) const {
    for (const auto& e : entries)
      if (e.query == query) return &e;
    return nullptr;
  }
};

// TSV `query \t rec1,rec2,...`. Lists must be duplicate-free and must not
// contain the query itself.
inline GoldenSet load_golden(const std::string& path) {
  GoldenSet golden;
  std::unordered_set<std::string> queries;
  for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
    if (f.size() != 2 || f[0].empty() || f[1].empty())
      throw Error(path + ":" + std::to_string(line_no) + ": expected `query \\t rec1,rec2,...`");
    if (!queries.insert(std::string(f[0])).second)
      throw Error(path + ":" + std::to_string(line_no) + ": duplicate query '" + std::string(f[0]) + "'");
    GoldenSet::Entry entry;
    entry.query = std::string(f[0]);
    std::unordered_set<std::string_view> seen;
    for (std::string_view rec : split_view(f[1], ',')) {
      if (rec.empty())
        throw Error(path + ":" + std::to_string(line_no) + ": empty recommendation");
      if (rec == entry.query)
        throw Error(path + ":" + std::to_string(line_no) + ": golden list contains the query");
      if (!seen.insert(rec).second)
        throw Error(path + ":" + std::to_string(line_no) + ": duplicate recommendation '" +
                    std::string(rec) + "'");
      entry.relevant.emplace_back(rec);
    }
    golden.entries.push_back(std::move(entry));
  });
  if (golden.entries.empty()) throw Error(path + ": empty golden set");
  return golden;
}

inline void save_golden(const GoldenSet& golden, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& entry : golden.entries) {
    out << entry.query << '\t';
    for (size_t i = 0; i < entry.relevant.size(); ++i) {
      if (i) out << ',';
      out << entry.relevant[i];
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

// --- training pairs --------------------------------------------------------------

struct LabeledExample {
  FeatureVector features;
  bool relevant = false;
};

struct QueryGroup {
  std::string query;
  std::vector<LabeledExample> examples;
};

// Pairwise loss only ever compares examples within one query group.
struct PairSet {
  std::vector<QueryGroup> groups;
  FeatureMask mask = 0;

  size_t skipped_queries = 0;  // diagnostics from build_training_pairs
};

/// Training pairs per the two-stage scheme: the first 6 golden entities are
/// positives; 6 negatives are drawn uniformly without replacement from the
/// tail window of the candidate list (ranks 401-500 of a full list; the
/// last 100 of a shorter one), excluding golden entities. Queries whose
/// negative window holds fewer than 2 candidates are skipped with a warning.
inline PairSet build_training_pairs(const GoldenSet& golden,
                                    const std::vector<CandidateList>& candidates,
                                    const FeatureContext& ctx, FeatureMask mask, uint64_t seed) {
  if (golden.entries.empty()) throw Error("build_training_pairs: empty golden set");
  constexpr size_t kPositives = 6;
  constexpr size_t kNegatives = 6;
  constexpr size_t kWindowEnd = 500;
  constexpr size_t kWindowSize = 100;

  std::unordered_map<std::string_view, const CandidateList*> by_query;
  for (const auto& list : candidates) by_query[list.query] = &list;

  PairSet pairs;
  pairs.mask = mask;
  for (const auto& entry : golden.entries) {
    auto it = by_query.find(entry.query);
    if (it == by_query.end() || !ctx.lg2vec->vocab.contains(entry.query)) {
      std::cerr << "[pairs] skipping query '" << entry.query << "': no candidate list\n";
      ++pairs.skipped_queries;
      continue;
    }
    const CandidateList& list = *it->second;
    std::unordered_set<std::string_view> golden_set(entry.relevant.begin(), entry.relevant.end());

    std::vector<std::string> positives;
    for (const auto& rec : entry.relevant) {
      if (positives.size() >= kPositives) break;
      if (!ctx.lg2vec->vocab.contains(rec)) continue;  // cannot featurize
      positives.push_back(rec);
    }

    const size_t end = std::min(list.items.size(), kWindowEnd);
    const size_t begin = end > kWindowSize ? end - kWindowSize : 0;
    std::vector<std::string> window;
    for (size_t i = begin; i < end; ++i) {
      const auto& cand = list.items[i].entity;
      if (golden_set.count(cand) || cand == entry.query) continue;
      if (!ctx.lg2vec->vocab.contains(cand)) continue;
      window.push_back(cand);
    }
    if (positives.empty() || window.size() < 2) {
      std::cerr << "[pairs] skipping query '" << entry.query
                << "': negative window too small (" << window.size() << ")\n";
      ++pairs.skipped_queries;
      continue;
    }

    SplitMix64 rng(derive_seed(seed, fnv1a(entry.query)));
    std::vector<std::string> negatives =
        sample_without_replacement(std::move(window), kNegatives, rng);

    QueryGroup group;
    group.query = entry.query;
    for (const auto& pos : positives)
      group.examples.push_back({extract_features(ctx, entry.query, pos, mask), true});
    for (const auto& neg : negatives)
      group.examples.push_back({extract_features(ctx, entry.query, neg, mask), false});
    pairs.groups.push_back(std::move(group));
  }
  return pairs;
}

// --- gradient-boosted pairwise ranker ----------------------------------------------

struct GbdtConfig {
  uint32_t trees = 100;
  uint32_t max_depth = 3;
  double learning_rate = 0.1;  // eta
  uint32_t min_leaf = 1;
  double l2_leaf = 1.0;        // lambda, L2 on leaf values
};

struct TreeNode {
  int32_t feature = -1;  // -1: leaf
  double threshold = 0.0;
  int32_t left = -1;
  int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const FeatureVector& fv) const {
    size_t at = 0;
    while (!nodes[at].is_leaf())
      at = static_cast<size_t>(fv.v[nodes[at].feature] < nodes[at].threshold ? nodes[at].left
                                                                             : nodes[at].right);
    return nodes[at].value;
  }
};

// Ensemble of regression trees; raw leaf values, learning rate applied at
// scoring time.
struct RankerModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  FeatureMask mask = 0;
};

namespace detail {

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

struct FlatPairs {
  std::vector<const FeatureVector*> features;
  std::vector<std::pair<size_t, size_t>> pairs;  // (positive, negative), flat indices
};

inline FlatPairs flatten_pairs(const PairSet& pairs) {
  FlatPairs flat;
  for (const auto& group : pairs.groups) {
    size_t base = flat.features.size();
    std::vector<size_t> pos, neg;
    for (size_t i = 0; i < group.examples.size(); ++i) {
      flat.features.push_back(&group.examples[i].features);
      (group.examples[i].relevant ? pos : neg).push_back(base + i);
    }
    for (size_t p : pos)
      for (size_t n : neg) flat.pairs.emplace_back(p, n);
  }
  return flat;
}

inline double pairwise_loss(const FlatPairs& flat, const std::vector<double>& scores) {
  KahanSum sum;
  for (const auto& [p, n] : flat.pairs) sum.add(softplus(-(scores[p] - scores[n])));
  return sum.sum();
}

struct SplitSearch {
  const FlatPairs* flat;
  const std::vector<double>* grad;
  const std::vector<double>* hess;
  std::vector<uint32_t> active_features;
  uint32_t max_depth;
  uint32_t min_leaf;
  double lambda;

  // Exact greedy split over every distinct threshold of every active
  // feature; ties resolved toward the lowest feature index, then the lowest
  // threshold (features scan in order, improvements must be strict).
  int build(RegressionTree& tree, std::vector<size_t> items, uint32_t depth) {
    double g_sum = 0.0, h_sum = 0.0;
    for (size_t i : items) {
      g_sum += (*grad)[i];
      h_sum += (*hess)[i];
    }

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 1e-12;
    const double parent_score = g_sum * g_sum / (h_sum + lambda);

    if (depth < max_depth && items.size() >= 2 * min_leaf) {
      std::vector<std::pair<double, size_t>> order(items.size());
      for (uint32_t f : active_features) {
        for (size_t i = 0; i < items.size(); ++i)
          order[i] = {(*flat->features[items[i]]).v[f], items[i]};
        std::sort(order.begin(), order.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double gl = 0.0, hl = 0.0;
        for (size_t i = 0; i + 1 < order.size(); ++i) {
          gl += (*grad)[order[i].second];
          hl += (*hess)[order[i].second];
          if (order[i].first == order[i + 1].first) continue;
          size_t left_n = i + 1, right_n = order.size() - left_n;
          if (left_n < min_leaf || right_n < min_leaf) continue;
          double gr = g_sum - gl, hr = h_sum - hl;
          double gain =
              gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_score;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = (order[i].first + order[i + 1].first) / 2.0;
          }
        }
      }
    }

    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (best_feature < 0) {
      tree.nodes[index].value = -g_sum / (h_sum + lambda);  // Newton leaf
      return index;
    }
    std::vector<size_t> left, right;
    for (size_t i : items)
      ((*flat->features[i]).v[best_feature] < best_threshold ? left : right).push_back(i);
    tree.nodes[index].feature = best_feature;
    tree.nodes[index].threshold = best_threshold;
    int l = build(tree, std::move(left), depth + 1);
    int r = build(tree, std::move(right), depth + 1);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  }
};

}  // namespace detail

/// Gradient boosting on the pairwise logistic loss
/// sum over (p,n) in a group of log(1 + exp(-(s_p - s_n))). Each round fits
/// a regression tree to the negative gradients with second-order (Newton)
/// leaf values. `round_loss`, when given, receives the training-pair loss
/// before round 0 and after every round.
inline RankerModel train_ranker(const PairSet& pairs, const GbdtConfig& config,
                                std::vector<double>* round_loss = nullptr) {
  if (config.max_depth < 1) throw ConfigError("gbdt: max depth must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("gbdt: learning rate must be > 0");
  if (config.min_leaf < 1) throw ConfigError("gbdt: min leaf must be >= 1");
  if (config.l2_leaf < 0.0) throw ConfigError("gbdt: l2 regularization must be >= 0");

  detail::FlatPairs flat = detail::flatten_pairs(pairs);
  if (flat.pairs.empty())
    throw Error("train_ranker: no query group has both a positive and a negative example");

  RankerModel model;
  model.learning_rate = config.learning_rate;
  model.mask = pairs.mask;

  std::vector<uint32_t> active;
  for (uint32_t f = 0; f < kFeatureCount; ++f)
    if (mask_has(pairs.mask, f)) active.push_back(f);

  const size_t n = flat.features.size();
  std::vector<double> scores(n, 0.0), grad(n), hess(n);
  if (round_loss) round_loss->push_back(detail::pairwise_loss(flat, scores));

  for (uint32_t round = 0; round < config.trees; ++round) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (const auto& [p, q] : flat.pairs) {
      double lam = sigmoid(-(scores[p] - scores[q]));
      grad[p] -= lam;
      grad[q] += lam;
      double h = lam * (1.0 - lam);
      hess[p] += h;
      hess[q] += h;
    }

    detail::SplitSearch search{&flat, &grad, &hess, active,
                               config.max_depth, config.min_leaf, config.l2_leaf};
    RegressionTree tree;
    std::vector<size_t> all(n);
    for (size_t i = 0; i < n; ++i) all[i] = i;
    search.build(tree, std::move(all), 0);

    for (size_t i = 0; i < n; ++i)
      scores[i] += config.learning_rate * tree.predict(*flat.features[i]);
    model.trees.push_back(std::move(tree));
    if (round_loss) round_loss->push_back(detail::pairwise_loss(flat, scores));
  }
  return model;
}

/// Ensemble score: sum over trees of eta times the leaf value reached.
inline double score(const RankerModel& model, const FeatureVector& features) {
  if (features.mask != model.mask)
    throw Error("score: feature mask does not match the model's training mask");
  double s = 0.0;
  for (const auto& tree : model.trees) s += model.learning_rate * tree.predict(features);
  return s;
}

/// Score and sort candidates for a query: descending score, ties broken by
/// ascending interned index in the lg2vec vocabulary.
inline CandidateList rank(const RankerModel& model, const FeatureContext& ctx,
                          std::string_view query, const CandidateList& candidates) {
  if (candidates.items.empty()) throw Error("rank: empty candidate list");
  struct Row {
    ScoredEntity item;
    uint32_t index;
  };
  std::vector<Row> rows;
  rows.reserve(candidates.items.size());
  for (const auto& item : candidates.items) {
    FeatureVector fv = extract_features(ctx, query, item.entity, model.mask);
    rows.push_back({{item.entity, score(model, fv), item.source}, ctx.lg2vec->require(item.entity)});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.item.score != b.item.score) return a.item.score > b.item.score;
    return a.index < b.index;
  });
  CandidateList out;
  out.query = candidates.query;
  for (auto& row : rows) out.items.push_back(std::move(row.item));
  return out;
}

/// Split-count ("weight") importance: per feature, the number of split
/// nodes using it, normalized to sum to 1. All zeros for an empty ensemble.
inline std::array<double, kFeatureCount> feature_importance(const RankerModel& model) {
  std::array<double, kFeatureCount> counts{};
  double total = 0.0;
  for (const auto& tree : model.trees)
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) {
        counts[static_cast<size_t>(node.feature)] += 1.0;
        total += 1.0;
      }
  if (total > 0.0)
    for (double& c : counts) c /= total;
  return counts;
}

// --- model persistence (exact round-trip via hex floats) -------------------------

inline void save_ranker(const RankerModel& model, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "lgrec-ranker\t1\n";
  out << "learning_rate\t" << format_double_hex(model.learning_rate) << '\n';
  out << "features";
  for (const auto& name : mask_names(model.mask)) out << '\t' << name;
  out << '\n';
  out << "trees\t" << model.trees.size() << '\n';
  for (const auto& tree : model.trees) {
    out << "tree\t" << tree.nodes.size() << '\n';
    for (const auto& node : tree.nodes) {
      if (node.is_leaf())
        out << "leaf\t" << format_double_hex(node.value) << '\n';
      else
        out << "split\t" << feature_names()[node.feature] << '\t'
            << format_double_hex(node.threshold) << '\t' << node.left << '\t' << node.right
            << '\n';
    }
  }
  if (!out) throw Error("write failed: " + path);
}

inline RankerModel load_ranker(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ranker model: " + path);
  std::string line;
  size_t line_no = 0;
  auto next_line = [&]() -> std::vector<std::string_view> {
    if (!std::getline(in, line)) throw Error(path + ": truncated ranker model");
    ++line_no;
    return split_view(line, '\t');
  };
  auto parse_hex = [&](std::string_view field) {
    std::string s(field);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
      throw Error(path + ":" + std::to_string(line_no) + ": bad float '" + s + "'");
    return v;
  };

  auto header = next_line();
  if (header.size() != 2 || header[0] != "lgrec-ranker" || header[1] != "1")
    throw Error(path + ": not a lgrec ranker model");
  RankerModel model;
  auto lr = next_line();
  if (lr.size() != 2 || lr[0] != "learning_rate") throw Error(path + ": missing learning rate");
  model.learning_rate = parse_hex(lr[1]);
  auto feats = next_line();
  if (feats.empty() || feats[0] != "features") throw Error(path + ": missing feature list");
  std::vector<std::string> names(feats.begin() + 1, feats.end());
  model.mask = mask_from_names(names);
  auto trees_hdr = next_line();
  if (trees_hdr.size() != 2 || trees_hdr[0] != "trees") throw Error(path + ": missing tree count");
  uint64_t tree_count = parse_u64(trees_hdr[1], path, line_no);
  for (uint64_t t = 0; t < tree_count; ++t) {
    auto th = next_line();
    if (th.size() != 2 || th[0] != "tree")
      throw Error(path + ":" + std::to_string(line_no) + ": bad tree header");
    uint64_t node_count = parse_u64(th[1], path, line_no);
    RegressionTree tree;
    for (uint64_t i = 0; i < node_count; ++i) {
      auto f = next_line();
      TreeNode node;
      if (f.size() == 2 && f[0] == "leaf") {
        node.value = parse_hex(f[1]);
      } else if (f.size() == 5 && f[0] == "split") {
        node.feature = -1;
        for (uint32_t k = 0; k < kFeatureCount; ++k)
          if (f[1] == feature_names()[k]) node.feature = static_cast<int32_t>(k);
        if (node.feature < 0)
          throw Error(path + ":" + std::to_string(line_no) + ": unknown feature in split");
        node.threshold = parse_hex(f[2]);
        node.left = static_cast<int32_t>(parse_u64(f[3], path, line_no));
        node.right = static_cast<int32_t>(parse_u64(f[4], path, line_no));
        if (node.left < 0 || node.right < 0 || static_cast<uint64_t>(node.left) >= node_count ||
            static_cast<uint64_t>(node.right) >= node_count)
          throw Error(path + ":" + std::to_string(line_no) + ": child index out of range");
      } else {
        throw Error(path + ":" + std::to_string(line_no) + ": bad node line");
      }
      tree.nodes.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// --- entity-type table (post-rank filtering plumbing) ----------------------------

class TypeTable {
 public:
  static TypeTable load(const std::string& path) {
    TypeTable t;
    for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
      if (f.size() != 2)
        throw Error(path + ":" + std::to_string(line_no) + ": expected `entity \\t type`");
      t.types_[std::string(f[0])] = std::string(f[1]);
    });
    return t;
  }

  const std::string* lookup(std::string_view entity) const {
    auto it = types_.find(std::string(entity));
    return it == types_.end() ? nullptr : &it->second;
  }

 private:
  std::unordered_map<std::string, std::string> types_;
};

inline CandidateList filter_by_type(const CandidateList& ranked, const TypeTable& types,
                                    std::string_view wanted) {
  CandidateList out;
  out.query = ranked.query;
  for (const auto& item : ranked.items) {
    const std::string* t = types.lookup(item.entity);
    if (t && *t == wanted) out.items.push_back(item);
  }
  return out;
}

}  // namespace lgrec
