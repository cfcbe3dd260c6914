#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lgrec/eval.hpp"
#include "lgrec/synth.hpp"
#include "lgrec/walks.hpp"

#include "test_util.hpp"

using namespace lgrec;

namespace {

EmbeddingModel planted_model(const std::vector<std::string>& symbols,
                             const std::vector<std::vector<double>>& rows) {
  EmbeddingModel model;
  model.dim = static_cast<uint32_t>(rows.front().size());
  for (const auto& s : symbols) model.vocab.intern(s);
  for (const auto& row : rows) model.input.insert(model.input.end(), row.begin(), row.end());
  model.output.assign(model.input.size(), 0.0);
  model.frequency.assign(symbols.size(), 1);
  return model;
}

// brute-force AP@k straight from the definition, recounting precision at
// every rank
double ap_oracle(const std::vector<std::string>& ranked,
                 const std::unordered_set<std::string>& relevant, size_t k) {
  double sum = 0.0;
  for (size_t i = 1; i <= std::min(k, ranked.size()); ++i) {
    if (!relevant.count(ranked[i - 1])) continue;
    size_t hits = 0;
    for (size_t j = 0; j < i; ++j)
      if (relevant.count(ranked[j])) ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i);
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

}  // namespace

TEST_CASE("triplet accuracy with a forced ordering") {
  EmbeddingModel model = planted_model({"a", "b", "c"}, {{1, 0}, {1, 0}, {0, 1}});
  TripletSet set;
  set.triplets = {{"a", "b", "c"}};
  TripletResult result = triplet_accuracy(model, set);
  REQUIRE(result.accuracy == 1.0);
  REQUIRE(result.evaluated == 1);
  REQUIRE(result.skipped == 0);
}

TEST_CASE("triplet accuracy matches direct cosine arithmetic") {
  EmbeddingModel model =
      planted_model({"a", "b", "c"}, {{0.3, 0.7}, {0.4, 0.6}, {0.9, -0.2}});
  TripletSet set;
  set.triplets = {{"a", "b", "c"}, {"a", "c", "b"}, {"b", "a", "c"}};
  auto cos = [&](const char* x, const char* y) { return cosine(model, x, y); };
  size_t expected = 0;
  if (cos("a", "b") > cos("a", "c")) ++expected;
  if (cos("a", "c") > cos("a", "b")) ++expected;
  if (cos("b", "a") > cos("b", "c")) ++expected;
  TripletResult result = triplet_accuracy(model, set);
  REQUIRE(result.accuracy == Catch::Approx(static_cast<double>(expected) / 3.0));
}

TEST_CASE("out-of-vocabulary triplets are skipped, not failed") {
  EmbeddingModel model = planted_model({"a", "b", "c"}, {{1, 0}, {1, 0}, {0, 1}});
  TripletSet set;
  set.triplets = {{"a", "b", "c"}, {"a", "b", "ghost"}};
  TripletResult result = triplet_accuracy(model, set);
  REQUIRE(result.evaluated == 1);
  REQUIRE(result.skipped == 1);
  REQUIRE(result.accuracy == 1.0);

  TripletSet all_oov;
  all_oov.triplets = {{"x", "y", "z"}};
  REQUIRE_THROWS_AS(triplet_accuracy(model, all_oov), Error);
}

TEST_CASE("exact cosine ties count as failures") {
  EmbeddingModel model = planted_model({"a", "b", "c"}, {{1, 0}, {0, 1}, {0, 2}});
  TripletSet set;
  set.triplets = {{"a", "b", "c"}};  // cos(a,b) == cos(a,c) == 0
  REQUIRE(triplet_accuracy(model, set).accuracy == 0.0);
}

TEST_CASE("accuracy of a triplet set and its flipped set sums to at most 1") {
  SplitMix64 rng(77);
  std::vector<std::string> symbols;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 12; ++i) {
    symbols.push_back("s" + std::to_string(i));
    rows.push_back({rng.next_double() - 0.5, rng.next_double() - 0.5, rng.next_double() - 0.5});
  }
  EmbeddingModel model = planted_model(symbols, rows);
  TripletSet set, flipped;
  for (int t = 0; t < 40; ++t) {
    uint32_t a = static_cast<uint32_t>(rng.next_below(12));
    uint32_t b = static_cast<uint32_t>(rng.next_below(12));
    uint32_t c = static_cast<uint32_t>(rng.next_below(12));
    if (a == b || a == c || b == c) continue;
    set.triplets.push_back({symbols[a], symbols[b], symbols[c]});
    flipped.triplets.push_back({symbols[a], symbols[c], symbols[b]});
  }
  double total = triplet_accuracy(model, set).accuracy + triplet_accuracy(model, flipped).accuracy;
  REQUIRE(total <= 1.0 + 1e-12);
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));  // random vectors: no exact ties
}

TEST_CASE("AP@k worked example") {
  double ap = average_precision_at_k({"x", "z", "y"}, {"x", "y"}, 3);
  REQUIRE(ap == Catch::Approx((1.0 + 2.0 / 3.0) / 2.0).margin(1e-12));
  REQUIRE(ap == Catch::Approx(0.8333333333).margin(1e-9));
}

TEST_CASE("AP@k boundary cases") {
  REQUIRE(average_precision_at_k({"a", "b"}, {"a", "b"}, 2) == 1.0);
  REQUIRE(average_precision_at_k({"a", "b"}, {"z"}, 2) == 0.0);
  REQUIRE(average_precision_at_k({}, {"z"}, 3) == 0.0);  // empty ranking warns, returns 0
  REQUIRE_THROWS_AS(average_precision_at_k({"a"}, {}, 1), Error);
  REQUIRE_THROWS_AS(average_precision_at_k({"a"}, {"a"}, 0), ConfigError);
}

TEST_CASE("AP@k agrees with the brute-force oracle on random instances") {
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 500; ++trial) {
    size_t n = 1 + rng.next_below(20);
    std::vector<std::string> ranked;
    for (size_t i = 0; i < n; ++i) ranked.push_back("e" + std::to_string(rng.next_below(30)));
    // de-duplicate while preserving order (ranked lists hold distinct items)
    std::unordered_set<std::string> seen;
    std::vector<std::string> unique;
    for (auto& e : ranked)
      if (seen.insert(e).second) unique.push_back(e);
    std::unordered_set<std::string> relevant;
    size_t r = 1 + rng.next_below(10);
    for (size_t i = 0; i < r; ++i) relevant.insert("e" + std::to_string(rng.next_below(30)));
    size_t k = 1 + rng.next_below(25);
    double got = average_precision_at_k(unique, relevant, k);
    REQUIRE(got == ap_oracle(unique, relevant, k));
    REQUIRE(got >= 0.0);
    REQUIRE(got <= 1.0);
  }
}

TEST_CASE("AP@k is 1 exactly when the top min(k,|relevant|) ranks are all relevant") {
  std::unordered_set<std::string> relevant = {"a", "b", "c"};
  REQUIRE(average_precision_at_k({"a", "b", "c", "x"}, relevant, 4) == 1.0);
  REQUIRE(average_precision_at_k({"a", "b", "x", "c"}, relevant, 4) < 1.0);
  REQUIRE(average_precision_at_k({"a", "b"}, relevant, 2) == 1.0);  // k below |relevant|
}

TEST_CASE("MAP averages AP over evaluable queries") {
  GoldenSet golden;
  golden.entries.push_back({"q1", {"a"}});
  golden.entries.push_back({"q2", {"b"}});
  std::vector<std::pair<std::string, std::vector<std::string>>> ranked = {
      {"q1", {"a", "x"}},  // AP@2 = 1
      {"q2", {"x", "y"}},  // AP@2 = 0
  };
  REQUIRE(map_at_k(ranked, golden, 2) == 0.5);

  std::vector<std::pair<std::string, std::vector<std::string>>> single = {{"q1", {"x", "a"}}};
  REQUIRE(map_at_k(single, golden, 2) ==
          average_precision_at_k({"x", "a"}, {"a"}, 2));

  std::vector<std::pair<std::string, std::vector<std::string>>> stranger = {{"q9", {"a"}}};
  REQUIRE_THROWS_AS(map_at_k(stranger, golden, 2), Error);
}

TEST_CASE("coverage curves reach 1 at exhaustive k and grow monotonically") {
  EmbeddingModel model = planted_model(
      {"q", "a", "b", "c"}, {{1, 0}, {0.9, 0.1}, {0.5, 0.5}, {0, 1}});
  GoldenSet golden;
  golden.entries.push_back({"q", {"a", "c"}});
  std::vector<CandidateGenerator> gens;
  gens.push_back({"knn", [&](const std::string& q, size_t k) { return knn(model, q, k); }});
  CoverageCurve curve = coverage_curve(gens, golden, {1, 2, 3});
  REQUIRE(curve.mean_coverage[0].back() == 1.0);  // k = |V|-1 covers everything
  for (size_t c = 1; c < curve.ks.size(); ++c)
    REQUIRE(curve.mean_coverage[0][c] >= curve.mean_coverage[0][c - 1]);
  REQUIRE_THROWS_AS(coverage_curve(gens, golden, {3, 1}), ConfigError);
}

TEST_CASE("trained embeddings dominate a random baseline on SBM coverage") {
  TempDir dir;
  SbmSpec spec;
  spec.communities = 3;
  spec.nodes_per_community = 12;
  spec.intra_probability = 0.4;
  spec.inter_probability = 0.02;
  spec.seed = 3;
  CommunityTable table = generate_sbm(spec, dir.file("e.tsv"), dir.file("c.tsv"));
  std::vector<LoadedLayer> layers;
  layers.push_back(load_layer(dir.file("e.tsv"), "sbm", 1.0));
  LayeredGraph graph = build_layered_graph(layers, "", "", 0);
  Corpus corpus = generate_walks(graph, {{20}, 8, 5});
  SgnsConfig config;
  config.dimension = 12;
  config.epochs = 3;
  config.seed = 5;
  EmbeddingModel trained = train_sgns(corpus, config);

  EmbeddingModel random_model = trained;
  SplitMix64 rng(999);
  for (double& v : random_model.input) v = rng.next_double() - 0.5;

  GoldenSet golden = derive_golden(table, 5, 17);
  std::vector<CandidateGenerator> gens;
  gens.push_back({"lg2vec", [&](const std::string& q, size_t k) { return knn(trained, q, k); }});
  gens.push_back(
      {"random", [&](const std::string& q, size_t k) { return knn(random_model, q, k); }});
  CoverageCurve curve = coverage_curve(gens, golden, {3, 6, 11});
  for (size_t c = 0; c < curve.ks.size(); ++c)
    REQUIRE(curve.mean_coverage[0][c] > curve.mean_coverage[1][c]);
}

TEST_CASE("triplet files round-trip and reject degenerate rows") {
  TempDir dir;
  TripletSet set;
  set.triplets = {{"a", "b", "c"}, {"d", "e", "f"}};
  save_triplets(set, dir.file("t.tsv"));
  TripletSet loaded = load_triplets(dir.file("t.tsv"));
  REQUIRE(loaded.triplets == set.triplets);
  REQUIRE_THROWS_AS(load_triplets(write_file(dir, "bad.tsv", "a\ta\tb\n")), Error);
}

TEST_CASE("report tables write deterministic TSV and aligned text") {
  TempDir dir;
  ReportTable table;
  table.corner = "model";
  table.columns = {"k=1", "k=2"};
  table.rows = {"alpha", "b"};
  table.cells = {{"0.5000", "1.0000"}, {"0.2500", "0.7500"}};
  write_report(table, dir.file("r.tsv"), dir.file("r.txt"));
  REQUIRE(read_file(dir.file("r.tsv")) ==
          "model\tk=1\tk=2\nalpha\t0.5000\t1.0000\nb\t0.2500\t0.7500\n");
  std::string text = read_file(dir.file("r.txt"));
  REQUIRE(text.find("alpha") != std::string::npos);
  write_report(table, dir.file("r2.tsv"), dir.file("r2.txt"));
  REQUIRE(read_file(dir.file("r2.txt")) == text);
}
