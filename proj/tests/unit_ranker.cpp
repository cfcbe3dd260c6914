#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "lgrec/ranker.hpp"
#include "lgrec/walks.hpp"

#include "test_util.hpp"

using namespace lgrec;

namespace {

constexpr FeatureMask kSimMask = feature_bit(kLg2vecSim);

FeatureVector fv_of(FeatureMask mask, std::initializer_list<std::pair<Feature, double>> values) {
  FeatureVector fv;
  fv.mask = mask;
  for (const auto& [f, v] : values) fv.v[f] = v;
  return fv;
}

// one informative feature, the rest noise; used by the separability tests
PairSet make_separable(size_t queries, size_t pos_per_query, size_t neg_per_query, uint64_t seed,
                       FeatureMask mask = feature_bit(kLg2vecSim) | feature_bit(kDoc2vecSim) |
                                          feature_bit(kPageview) | feature_bit(kPopratio)) {
  SplitMix64 rng(seed);
  PairSet pairs;
  pairs.mask = mask;
  for (size_t q = 0; q < queries; ++q) {
    QueryGroup group;
    group.query = "q" + std::to_string(q);
    for (size_t i = 0; i < pos_per_query + neg_per_query; ++i) {
      bool relevant = i < pos_per_query;
      FeatureVector fv;
      fv.mask = mask;
      fv.v[kLg2vecSim] = relevant ? 0.6 + 0.4 * rng.next_double() : 0.4 * rng.next_double();
      fv.v[kDoc2vecSim] = rng.next_double();
      fv.v[kPageview] = rng.next_double();
      fv.v[kPopratio] = rng.next_double();
      group.examples.push_back({fv, relevant});
    }
    pairs.groups.push_back(std::move(group));
  }
  return pairs;
}

struct TinyWorld {
  TempDir dir;
  LayeredGraph graph;
  EmbeddingModel lg;
  EmbeddingModel doc;
  SearchlogTable searchlog;
  FeatureContext ctx;

  TinyWorld() {
    std::vector<LoadedLayer> layers;
    layers.push_back(
        load_layer(write_file(dir, "clicks.tsv", "q\td1\t42\nq\td2\t7\nd1\tq\t5\n"), "clicks", 1.0));
    auto pv = write_file(dir, "pv.tsv", "q\t100\nd1\t1000\nd2\t100\n");
    graph = build_layered_graph(layers, pv, "", 0);

    lg.dim = 2;
    for (const char* s : {"q", "d1", "d2"}) lg.vocab.intern(s);
    lg.input = {1, 0, 0.8, 0.2, 0, 1};
    lg.output.assign(6, 0.0);
    lg.frequency.assign(3, 1);

    doc.dim = 2;
    doc.vocab.intern(doc_tag("q"));
    doc.vocab.intern(doc_tag("d1"));
    doc.input = {1, 0, 1, 0.5};
    doc.output.assign(4, 0.0);
    doc.frequency.assign(2, 1);

    searchlog = SearchlogTable();
    ctx.lg2vec = &lg;
    ctx.doc2vec = &doc;
    ctx.graph = &graph;
    ctx.clickstream_layer = graph.layer_index("clicks");
  }
};

}  // namespace

TEST_CASE("extract_features fills the documented definitions") {
  TinyWorld world;
  FeatureMask mask = feature_bit(kLg2vecSim) | feature_bit(kDoc2vecSim) |
                     feature_bit(kDoc2vecPresent) | feature_bit(kClickstream) |
                     feature_bit(kPageview) | feature_bit(kPopratio);

  FeatureVector fv = extract_features(world.ctx, "q", "d1", mask);
  REQUIRE(fv.v[kLg2vecSim] == Catch::Approx(cosine(world.lg, "q", "d1")));
  REQUIRE(fv.v[kDoc2vecPresent] == 1.0);
  REQUIRE(fv.v[kClickstream] == 42.0);
  REQUIRE(fv.v[kPageview] == 1000.0);
  REQUIRE(fv.v[kPopratio] == Catch::Approx(std::log(10.0)).margin(1e-12));

  FeatureVector fv2 = extract_features(world.ctx, "q", "d2", mask);
  REQUIRE(fv2.v[kPopratio] == 0.0);             // equal pageviews
  REQUIRE(fv2.v[kDoc2vecSim] == 0.0);           // d2 has no document tag
  REQUIRE(fv2.v[kDoc2vecPresent] == 0.0);
  REQUIRE(fv2.v[kClickstream] == 7.0);
}

TEST_CASE("popratio is capped when a pageview is zero") {
  TinyWorld world;
  // rebuild with d2 missing from the pageview table
  std::vector<LoadedLayer> layers;
  layers.push_back(load_layer(write_file(world.dir, "c2.tsv", "q\td2\t1\n"), "clicks", 1.0));
  auto pv = write_file(world.dir, "pv2.tsv", "q\t100\n");
  LayeredGraph graph = build_layered_graph(layers, pv, "", 0);
  world.ctx.graph = &graph;

  FeatureMask mask = feature_bit(kLg2vecSim) | feature_bit(kPopratio);
  FeatureVector fv = extract_features(world.ctx, "q", "d2", mask);
  REQUIRE(fv.v[kPopratio] == -kPopratioCap);
  REQUIRE(world.ctx.popratio_capped.load() == 1);

  FeatureVector fv2 = extract_features(world.ctx, "d2", "q", mask);
  REQUIRE(fv2.v[kPopratio] == kPopratioCap);
}

TEST_CASE("extract_features requires q and d in the lg2vec vocabulary") {
  TinyWorld world;
  REQUIRE_THROWS_AS(extract_features(world.ctx, "nope", "d1", kSimMask), Error);
  REQUIRE_THROWS_AS(extract_features(world.ctx, "q", "nope", kSimMask), Error);
}

TEST_CASE("golden set loader enforces the documented invariants") {
  TempDir dir;
  GoldenSet g = load_golden(write_file(dir, "g.tsv", "q1\ta,b,c\nq2\tx\n"));
  REQUIRE(g.entries.size() == 2);
  REQUIRE(g.entries[0].relevant == std::vector<std::string>{"a", "b", "c"});
  REQUIRE_THROWS_AS(load_golden(write_file(dir, "dup.tsv", "q\ta,a\n")), Error);
  REQUIRE_THROWS_AS(load_golden(write_file(dir, "self.tsv", "q\ta,q\n")), Error);
  REQUIRE_THROWS_AS(load_golden(write_file(dir, "empty.tsv", "")), Error);
}

namespace {

// A world big enough for pair construction: 30 entities, golden lists, and
// candidate lists long enough to have a tail window.
struct PairWorld {
  EmbeddingModel lg;
  FeatureContext ctx;
  GoldenSet golden;
  std::vector<CandidateList> candidates;

  explicit PairWorld(size_t golden_size) {
    lg.dim = 2;
    SplitMix64 rng(17);
    for (int i = 0; i < 30; ++i) {
      lg.vocab.intern("e" + std::to_string(i));
      lg.input.push_back(rng.next_double() + 0.1);
      lg.input.push_back(rng.next_double() + 0.1);
    }
    lg.output.assign(60, 0.0);
    lg.frequency.assign(30, 1);
    ctx.lg2vec = &lg;

    GoldenSet::Entry entry;
    entry.query = "e0";
    for (size_t i = 1; i <= golden_size; ++i) entry.relevant.push_back("e" + std::to_string(i));
    golden.entries.push_back(entry);

    CandidateList list;
    list.query = "e0";
    for (int i = 1; i < 30; ++i) list.items.push_back({"e" + std::to_string(i), 1.0 - i * 0.01,
                                                       CandidateSource::lg2vec});
    candidates.push_back(list);
  }
};

}  // namespace

TEST_CASE("training pairs take at most 6 positives from the golden list head") {
  PairWorld world(8);
  PairSet pairs = build_training_pairs(world.golden, world.candidates, world.ctx, kSimMask, 5);
  REQUIRE(pairs.groups.size() == 1);
  size_t positives = 0, negatives = 0;
  for (const auto& ex : pairs.groups[0].examples) (ex.relevant ? positives : negatives)++;
  REQUIRE(positives == 6);
  REQUIRE(negatives == 6);
}

TEST_CASE("short golden lists yield fewer positives but still 6 negatives") {
  PairWorld world(3);
  PairSet pairs = build_training_pairs(world.golden, world.candidates, world.ctx, kSimMask, 5);
  size_t positives = 0, negatives = 0;
  for (const auto& ex : pairs.groups[0].examples) (ex.relevant ? positives : negatives)++;
  REQUIRE(positives == 3);
  REQUIRE(negatives == 6);
}

TEST_CASE("negatives come from the candidate tail and exclude golden entities") {
  PairWorld world(4);
  // the tail window is the last 100 of the 29 candidates = all of them;
  // golden e1..e4 must never appear as negatives
  PairSet pairs = build_training_pairs(world.golden, world.candidates, world.ctx, kSimMask, 5);
  for (const auto& ex : pairs.groups[0].examples) {
    if (ex.relevant) continue;
    double sim = ex.features.v[kLg2vecSim];
    bool is_golden = false;
    for (size_t i = 1; i <= 4; ++i)
      if (sim == cosine(world.lg, "e0", "e" + std::to_string(i))) is_golden = true;
    REQUIRE_FALSE(is_golden);
  }
}

TEST_CASE("negative draws are deterministic for a fixed seed") {
  PairWorld world(6);
  PairSet a = build_training_pairs(world.golden, world.candidates, world.ctx, kSimMask, 99);
  PairSet b = build_training_pairs(world.golden, world.candidates, world.ctx, kSimMask, 99);
  REQUIRE(a.groups.size() == b.groups.size());
  for (size_t g = 0; g < a.groups.size(); ++g)
    for (size_t i = 0; i < a.groups[g].examples.size(); ++i)
      REQUIRE(a.groups[g].examples[i].features.v == b.groups[g].examples[i].features.v);
}

TEST_CASE("full-length candidate lists draw negatives from ranks 401-500 only") {
  EmbeddingModel lg;
  lg.dim = 2;
  SplitMix64 rng(29);
  for (int i = 0; i < 650; ++i) {
    lg.vocab.intern("e" + std::to_string(i));
    lg.input.push_back(rng.next_double() + 0.1);
    lg.input.push_back(rng.next_double() + 0.1);
  }
  lg.output.assign(1300, 0.0);
  lg.frequency.assign(650, 1);
  FeatureContext ctx;
  ctx.lg2vec = &lg;

  GoldenSet golden;
  golden.entries.push_back({"e0", {"e1", "e2"}});
  CandidateList list;
  list.query = "e0";
  for (int i = 1; i < 650; ++i)
    list.items.push_back({"e" + std::to_string(i), 1.0, CandidateSource::lg2vec});

  PairSet pairs = build_training_pairs(golden, {list}, ctx, kSimMask, 11);
  std::set<std::string> window;  // candidates at 0-based ranks 400..499 are e401..e500
  for (int i = 401; i <= 500; ++i) window.insert("e" + std::to_string(i));
  size_t negatives = 0;
  for (const auto& ex : pairs.groups[0].examples) {
    if (ex.relevant) continue;
    ++negatives;
    bool found = false;
    for (const auto& cand : window)
      if (ex.features.v[kLg2vecSim] == cosine(lg, "e0", cand)) found = true;
    REQUIRE(found);
  }
  REQUIRE(negatives == 6);
}

TEST_CASE("queries with a tiny negative window are skipped with a warning") {
  PairWorld world(2);
  world.candidates[0].items.resize(3);  // window after golden exclusion: 1 candidate
  PairSet pairs = build_training_pairs(world.golden, world.candidates, world.ctx, kSimMask, 5);
  REQUIRE(pairs.groups.empty());
  REQUIRE(pairs.skipped_queries == 1);
}

TEST_CASE("an empty golden set is an error") {
  PairWorld world(2);
  GoldenSet empty;
  REQUIRE_THROWS_AS(build_training_pairs(empty, world.candidates, world.ctx, kSimMask, 5), Error);
}

TEST_CASE("a linearly separable feature is fully solved") {
  PairSet pairs = make_separable(40, 3, 3, 7);
  GbdtConfig config;
  RankerModel model = train_ranker(pairs, config);
  for (const auto& group : pairs.groups) {
    double min_pos = 1e30, max_neg = -1e30;
    for (const auto& ex : group.examples) {
      double s = score(model, ex.features);
      if (ex.relevant)
        min_pos = std::min(min_pos, s);
      else
        max_neg = std::max(max_neg, s);
    }
    REQUIRE(min_pos > max_neg);
  }
}

TEST_CASE("zero trees make the constant zero scorer") {
  PairSet pairs = make_separable(5, 2, 2, 3);
  GbdtConfig config;
  config.trees = 0;
  RankerModel model = train_ranker(pairs, config);
  REQUIRE(model.trees.empty());
  REQUIRE(score(model, pairs.groups[0].examples[0].features) == 0.0);
}

TEST_CASE("training requires at least one mixed-label group") {
  PairSet pairs;
  pairs.mask = kSimMask;
  QueryGroup group;
  group.query = "q";
  group.examples.push_back({fv_of(kSimMask, {{kLg2vecSim, 1.0}}), true});
  group.examples.push_back({fv_of(kSimMask, {{kLg2vecSim, 0.9}}), true});
  pairs.groups.push_back(group);
  REQUIRE_THROWS_AS(train_ranker(pairs, GbdtConfig{}), Error);
}

TEST_CASE("the informative feature dominates split-count importance") {
  PairSet pairs = make_separable(60, 3, 3, 13);
  RankerModel model = train_ranker(pairs, GbdtConfig{});
  auto importance = feature_importance(model);
  for (uint32_t f = 0; f < kFeatureCount; ++f)
    if (f != kLg2vecSim && mask_has(pairs.mask, f))
      REQUIRE(importance[kLg2vecSim] > importance[f]);
  double total = 0;
  for (double x : importance) total += x;
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("score applies the learning rate to each tree's leaf") {
  RankerModel model;
  model.learning_rate = 0.1;
  model.mask = kSimMask;
  RegressionTree tree;
  TreeNode leaf;
  leaf.value = 2.0;
  tree.nodes.push_back(leaf);
  model.trees.push_back(tree);
  REQUIRE(score(model, fv_of(kSimMask, {{kLg2vecSim, 0.5}})) == Catch::Approx(0.2).margin(1e-15));

  RankerModel empty;
  empty.mask = kSimMask;
  REQUIRE(score(empty, fv_of(kSimMask, {{kLg2vecSim, 0.5}})) == 0.0);
}

TEST_CASE("score refuses a mismatched feature mask") {
  RankerModel model;
  model.mask = kSimMask;
  FeatureVector fv = fv_of(feature_bit(kPageview), {{kPageview, 10.0}});
  REQUIRE_THROWS_AS(score(model, fv), Error);
}

TEST_CASE("score equals an independent tree-walk oracle") {
  PairSet pairs = make_separable(30, 3, 3, 23);
  RankerModel model = train_ranker(pairs, GbdtConfig{});

  auto oracle_score = [&](const FeatureVector& fv) {
    double total = 0.0;
    for (const auto& tree : model.trees) {
      size_t at = 0;
      while (tree.nodes[at].feature >= 0) {
        const TreeNode& n = tree.nodes[at];
        at = static_cast<size_t>(fv.v[n.feature] < n.threshold ? n.left : n.right);
      }
      total += model.learning_rate * tree.nodes[at].value;
    }
    return total;
  };

  SplitMix64 rng(4);
  for (int i = 0; i < 50; ++i) {
    FeatureVector fv;
    fv.mask = pairs.mask;
    for (uint32_t f = 0; f < kFeatureCount; ++f) fv.v[f] = rng.next_double();
    REQUIRE(score(model, fv) == oracle_score(fv));
  }
}

TEST_CASE("rank sorts by descending score with index tie-breaks") {
  TinyWorld world;
  RankerModel constant;  // empty ensemble: every candidate scores 0
  constant.mask = kSimMask;

  CandidateList candidates;
  candidates.query = "q";
  candidates.items = {{"d2", 0.0, CandidateSource::lg2vec}, {"d1", 0.0, CandidateSource::lg2vec}};
  CandidateList ranked = rank(constant, world.ctx, "q", candidates);
  REQUIRE(ranked.items[0].entity == "d1");  // lower interned index wins ties
  REQUIRE(ranked.items[1].entity == "d2");

  CandidateList single;
  single.query = "q";
  single.items = {{"d1", 0.0, CandidateSource::lg2vec}};
  REQUIRE(rank(constant, world.ctx, "q", single).items[0].entity == "d1");

  CandidateList empty;
  empty.query = "q";
  REQUIRE_THROWS_AS(rank(constant, world.ctx, "q", empty), Error);
}

TEST_CASE("rank output is a permutation of the candidates") {
  TinyWorld world;
  PairSet pairs = make_separable(20, 3, 3, 31, kSimMask);
  RankerModel model = train_ranker(pairs, GbdtConfig{});
  CandidateList candidates;
  candidates.query = "q";
  candidates.items = {{"d1", 0.5, CandidateSource::lg2vec},
                      {"d2", 0.4, CandidateSource::doc2vec}};
  CandidateList ranked = rank(model, world.ctx, "q", candidates);
  REQUIRE(ranked.items.size() == candidates.items.size());
  for (const auto& item : candidates.items) REQUIRE(ranked.contains(item.entity));
}

TEST_CASE("pairwise loss never increases across boosting rounds") {
  PairSet pairs = make_separable(50, 3, 3, 41);
  std::vector<double> losses;
  train_ranker(pairs, GbdtConfig{}, &losses);
  REQUIRE(losses.size() == 101);  // initial + one per round
  for (size_t t = 1; t < losses.size(); ++t) REQUIRE(losses[t] <= losses[t - 1] + 1e-9);
}

TEST_CASE("one split on one feature gives it importance 1") {
  PairSet pairs = make_separable(10, 2, 2, 43, kSimMask);
  GbdtConfig config;
  config.trees = 1;
  config.max_depth = 1;
  RankerModel model = train_ranker(pairs, config);
  auto importance = feature_importance(model);
  REQUIRE(importance[kLg2vecSim] == 1.0);

  RankerModel empty;
  auto zero = feature_importance(empty);
  for (double x : zero) REQUIRE(x == 0.0);
}

TEST_CASE("ranker models round-trip exactly through the text format") {
  PairSet pairs = make_separable(25, 3, 3, 47);
  RankerModel model = train_ranker(pairs, GbdtConfig{});
  TempDir dir;
  save_ranker(model, dir.file("model.txt"));
  RankerModel loaded = load_ranker(dir.file("model.txt"));
  REQUIRE(loaded.learning_rate == model.learning_rate);
  REQUIRE(loaded.mask == model.mask);
  REQUIRE(loaded.trees.size() == model.trees.size());
  for (size_t t = 0; t < model.trees.size(); ++t) {
    REQUIRE(loaded.trees[t].nodes.size() == model.trees[t].nodes.size());
    for (size_t n = 0; n < model.trees[t].nodes.size(); ++n) {
      const TreeNode& a = model.trees[t].nodes[n];
      const TreeNode& b = loaded.trees[t].nodes[n];
      REQUIRE(a.feature == b.feature);
      REQUIRE(a.threshold == b.threshold);  // bitwise, via hex floats
      REQUIRE(a.left == b.left);
      REQUIRE(a.right == b.right);
      REQUIRE(a.value == b.value);
    }
  }
}

TEST_CASE("ranking is invariant under a monotone transform of one feature") {
  PairSet pairs = make_separable(30, 3, 3, 53);
  RankerModel base = train_ranker(pairs, GbdtConfig{});

  PairSet transformed = pairs;
  for (auto& group : transformed.groups)
    for (auto& ex : group.examples) ex.features.v[kLg2vecSim] = std::exp(ex.features.v[kLg2vecSim]);
  RankerModel refit = train_ranker(transformed, GbdtConfig{});

  for (size_t g = 0; g < pairs.groups.size(); ++g) {
    const auto& orig = pairs.groups[g].examples;
    const auto& trans = transformed.groups[g].examples;
    auto order_of = [&](const RankerModel& m, const std::vector<LabeledExample>& exs) {
      std::vector<size_t> idx(exs.size());
      for (size_t i = 0; i < exs.size(); ++i) idx[i] = i;
      std::vector<double> s(exs.size());
      for (size_t i = 0; i < exs.size(); ++i) s[i] = score(m, exs[i].features);
      std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return s[a] > s[b]; });
      return idx;
    };
    REQUIRE(order_of(base, orig) == order_of(refit, trans));
  }
}

TEST_CASE("type tables filter ranked lists as post-processing") {
  TempDir dir;
  TypeTable types = TypeTable::load(write_file(dir, "t.tsv", "a\tperson\nb\tcompany\nc\tperson\n"));
  CandidateList ranked;
  ranked.query = "q";
  ranked.items = {{"a", 3.0, CandidateSource::mixed},
                  {"b", 2.0, CandidateSource::mixed},
                  {"c", 1.0, CandidateSource::mixed},
                  {"d", 0.5, CandidateSource::mixed}};
  CandidateList people = filter_by_type(ranked, types, "person");
  REQUIRE(people.items.size() == 2);
  REQUIRE(people.items[0].entity == "a");
  REQUIRE(people.items[1].entity == "c");
}
