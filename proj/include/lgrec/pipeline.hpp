#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgrec/candidates.hpp"
#include "lgrec/common.hpp"
#include "lgrec/config.hpp"
#include "lgrec/corpus.hpp"
#include "lgrec/embedding.hpp"
#include "lgrec/eval.hpp"
#include "lgrec/graph.hpp"
#include "lgrec/ranker.hpp"
#include "lgrec/walks.hpp"

namespace lgrec {

enum class Stage : int {
  Ingest = 0,
  Walk,
  TrainLg2vec,
  TrainDoc2vec,
  Candidates,
  TrainRanker,
  Rank,
  Eval
};

inline constexpr std::array<Stage, 8> kAllStages = {
    Stage::Ingest,      Stage::Walk,        Stage::TrainLg2vec, Stage::TrainDoc2vec,
    Stage::Candidates,  Stage::TrainRanker, Stage::Rank,        Stage::Eval};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Walk: return "walk";
    case Stage::TrainLg2vec: return "train-lg2vec";
    case Stage::TrainDoc2vec: return "train-doc2vec";
    case Stage::Candidates: return "candidates";
    case Stage::TrainRanker: return "train-ranker";
    case Stage::Rank: return "rank";
    case Stage::Eval: return "eval";
  }
  return "?";
}

inline Stage stage_from_name(std::string_view name) {
  for (Stage s : kAllStages)
    if (name == stage_name(s)) return s;
  throw ConfigError("unknown stage: '" + std::string(name) + "'");
}

struct StageOutcome {
  Stage stage;
  enum class Status { Ran, UpToDate, Skipped } status;
  std::string note;
};

inline std::string to_hex(uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[x & 0xf];
    x >>= 4;
  }
  return out;
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file for hashing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return to_hex(fnv1a(buf.str()));
}

// Runs the two-stage workflow from a config: every stage reads and writes
// plain-file artifacts plus a manifest (config hash, seed, input/output
// fingerprints), so reruns with unchanged inputs are no-ops and any stage
// can be redone or replaced externally.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, unsigned threads = 1, bool force = false)
      : cfg_(std::move(config)), threads_(threads == 0 ? 1 : threads), force_(force) {
    std::filesystem::create_directories(out("manifests"));
    std::filesystem::create_directories(out("reports"));
  }

  const PipelineConfig& config() const { return cfg_; }

  std::string out(const std::string& name) const { return cfg_.output_dir + "/" + name; }
  std::string graph_path() const { return out("graph.tsv"); }
  std::string corpus_path() const { return out("corpus.txt"); }
  std::string corpus_layers_path() const { return out("corpus.layers"); }
  std::string lg2vec_path() const { return out("lg2vec.emb"); }
  std::string doc2vec_path() const { return out("doc2vec.emb"); }
  std::string candidates_path() const { return out("candidates.tsv"); }
  std::string ranker_path() const { return out("ranker.txt"); }
  std::string rankings_path() const { return out("rankings.tsv"); }

  // "all" or a comma-separated stage list, e.g. "ingest,walk".
  std::vector<StageOutcome> run_selector(const std::string& selector) {
    std::vector<Stage> stages;
    bool explicit_selection = selector != "all";
    if (!explicit_selection) {
      stages.assign(kAllStages.begin(), kAllStages.end());
    } else {
      for (std::string_view part : split_view(selector, ','))
        if (!part.empty()) stages.push_back(stage_from_name(part));
      std::sort(stages.begin(), stages.end());
      stages.erase(std::unique(stages.begin(), stages.end()), stages.end());
      if (stages.empty()) throw ConfigError("no stages selected");
    }
    return run(stages, explicit_selection);
  }

  std::vector<StageOutcome> run(const std::vector<Stage>& stages, bool explicit_selection) {
    std::vector<StageOutcome> outcomes;
    for (Stage stage : stages) {
      auto [ok, why] = applicable(stage);
      if (!ok) {
        if (explicit_selection)
          throw ConfigError(std::string(stage_name(stage)) + ": " + why);
        outcomes.push_back({stage, StageOutcome::Status::Skipped, why});
        continue;
      }
      if (!force_ && up_to_date(stage)) {
        outcomes.push_back({stage, StageOutcome::Status::UpToDate, "artifacts match manifest"});
        continue;
      }
      run_stage(stage);
      write_manifest(stage);
      outcomes.push_back({stage, StageOutcome::Status::Ran, ""});
    }
    return outcomes;
  }

 private:
  // --- stage wiring ---------------------------------------------------------

  std::pair<bool, std::string> applicable(Stage stage) const {
    switch (stage) {
      case Stage::TrainDoc2vec:
        if (cfg_.documents.empty()) return {false, "no documents configured"};
        return {true, ""};
      case Stage::Candidates:
      case Stage::TrainRanker:
      case Stage::Rank:
        if (cfg_.golden.empty()) return {false, "no golden set configured"};
        return {true, ""};
      case Stage::Eval:
        if (cfg_.golden.empty() && cfg_.triplets.empty())
          return {false, "neither golden set nor triplets configured"};
        return {true, ""};
      default:
        return {true, ""};
    }
  }

  // (manifest key, filesystem path); artifacts keyed relative to the output
  // directory so manifests are byte-identical across output locations.
  using FileRefs = std::vector<std::pair<std::string, std::string>>;

  std::string rel(const std::string& path) const {
    const std::string prefix = cfg_.output_dir + "/";
    if (path.rfind(prefix, 0) == 0) return path.substr(prefix.size());
    return path;
  }

  bool use_doc2vec() const { return !cfg_.documents.empty(); }

  FileRefs inputs_of(Stage stage) const {
    FileRefs refs;
    auto add = [&](const std::string& path) {
      if (!path.empty()) refs.emplace_back(rel(path), path);
    };
    switch (stage) {
      case Stage::Ingest:
        for (const auto& layer : cfg_.layers) add(layer.path);
        add(cfg_.pageviews);
        add(cfg_.alias);
        break;
      case Stage::Walk:
        add(graph_path());
        break;
      case Stage::TrainLg2vec:
        add(corpus_path());
        add(corpus_layers_path());
        add(cfg_.warm_start_model);
        break;
      case Stage::TrainDoc2vec:
        add(cfg_.documents);
        break;
      case Stage::Candidates:
        add(lg2vec_path());
        if (use_doc2vec()) add(doc2vec_path());
        add(cfg_.golden);
        break;
      case Stage::TrainRanker:
        add(graph_path());
        add(lg2vec_path());
        if (use_doc2vec()) add(doc2vec_path());
        add(candidates_path());
        add(cfg_.golden);
        add(cfg_.searchlog);
        break;
      case Stage::Rank:
        add(graph_path());
        add(lg2vec_path());
        if (use_doc2vec()) add(doc2vec_path());
        add(candidates_path());
        add(ranker_path());
        add(cfg_.searchlog);
        add(cfg_.types);
        break;
      case Stage::Eval:
        add(lg2vec_path());
        if (use_doc2vec()) add(doc2vec_path());
        add(cfg_.triplets);
        if (!cfg_.golden.empty()) {
          add(cfg_.golden);
          add(rankings_path());
        }
        break;
    }
    return refs;
  }

  FileRefs outputs_of(Stage stage) const {
    FileRefs refs;
    auto add = [&](const std::string& path) { refs.emplace_back(rel(path), path); };
    switch (stage) {
      case Stage::Ingest: add(graph_path()); break;
      case Stage::Walk:
        add(corpus_path());
        add(corpus_layers_path());
        break;
      case Stage::TrainLg2vec:
        add(lg2vec_path());
        add(lg2vec_path() + ".out");
        break;
      case Stage::TrainDoc2vec:
        add(doc2vec_path());
        add(doc2vec_path() + ".out");
        break;
      case Stage::Candidates: add(candidates_path()); break;
      case Stage::TrainRanker: add(ranker_path()); break;
      case Stage::Rank: add(rankings_path()); break;
      case Stage::Eval:
        if (!cfg_.triplets.empty()) {
          add(out("reports/triplets.tsv"));
          add(out("reports/triplets.txt"));
        }
        if (!cfg_.golden.empty()) {
          add(out("reports/coverage.tsv"));
          add(out("reports/coverage.txt"));
          add(out("reports/map.tsv"));
          add(out("reports/map.txt"));
        }
        break;
    }
    return refs;
  }

  static const char* producer_of(std::string_view artifact) {
    if (artifact == "graph.tsv") return "ingest";
    if (artifact == "corpus.txt" || artifact == "corpus.layers") return "walk";
    if (artifact == "lg2vec.emb" || artifact == "lg2vec.emb.out") return "train-lg2vec";
    if (artifact == "doc2vec.emb" || artifact == "doc2vec.emb.out") return "train-doc2vec";
    if (artifact == "candidates.tsv") return "candidates";
    if (artifact == "ranker.txt") return "train-ranker";
    if (artifact == "rankings.tsv") return "rank";
    return nullptr;
  }

  void require(const std::string& path) const {
    if (std::filesystem::exists(path)) return;
    const char* producer = producer_of(rel(path));
    if (producer)
      throw Error("missing artifact '" + path + "'; run stage '" + producer + "' first");
    throw Error("missing input file '" + path + "'");
  }

  // --- config fingerprints ---------------------------------------------------

  static std::string sgns_string(const SgnsConfig& c) {
    std::ostringstream os;
    os << "d=" << c.dimension << ",w=" << c.window << ",k=" << c.negatives << ",e=" << c.epochs
       << ",lr=" << format_double(c.learning_rate) << ",minlr=" << format_double(c.min_learning_rate)
       << ",negexp=" << format_double(c.negative_exponent) << ",seed=" << c.seed;
    return os.str();
  }

  std::string stage_config_string(Stage stage) const {
    std::ostringstream os;
    os << "v1;stage=" << stage_name(stage) << ';';
    switch (stage) {
      case Stage::Ingest:
        for (const auto& l : cfg_.layers)
          os << "layer=" << l.name << ',' << l.path << ',' << format_double(l.weight_exponent)
             << ';';
        os << "pageviews=" << cfg_.pageviews << ";alias=" << cfg_.alias
           << ";min_pageview=" << cfg_.min_pageview;
        break;
      case Stage::Walk:
        os << "hops=" << cfg_.hops << ";seed=" << cfg_.resolved_walk_seed() << ';';
        for (const auto& l : cfg_.layers) os << "walks=" << l.name << ',' << l.walks_per_node << ';';
        break;
      case Stage::TrainLg2vec:
        os << sgns_string(cfg_.lg2vec_resolved()) << ';';
        for (const auto& [name, window] : cfg_.layer_windows())
          os << "window:" << name << '=' << window << ';';
        os << "warm=" << cfg_.warm_start_model << ",freeze=" << cfg_.warm_start_freeze;
        break;
      case Stage::TrainDoc2vec:
        os << sgns_string(cfg_.doc2vec_resolved()) << ";documents=" << cfg_.documents;
        break;
      case Stage::Candidates:
        os << "k=" << cfg_.candidate_k << ";golden=" << cfg_.golden
           << ";use_doc=" << use_doc2vec();
        break;
      case Stage::TrainRanker:
        os << "trees=" << cfg_.ranker.trees << ";depth=" << cfg_.ranker.max_depth
           << ";eta=" << format_double(cfg_.ranker.learning_rate)
           << ";min_leaf=" << cfg_.ranker.min_leaf
           << ";l2=" << format_double(cfg_.ranker.l2_leaf)
           << ";seed=" << cfg_.resolved_ranker_seed() << ";mask=";
        for (const auto& name : mask_names(cfg_.feature_mask)) os << name << ',';
        os << ";clickstream=" << cfg_.clickstream_layer_name << ";searchlog=" << cfg_.searchlog
           << ";golden=" << cfg_.golden;
        break;
      case Stage::Rank:
        os << "mask=";
        for (const auto& name : mask_names(cfg_.feature_mask)) os << name << ',';
        os << ";clickstream=" << cfg_.clickstream_layer_name << ";searchlog=" << cfg_.searchlog
           << ";types=" << cfg_.types << ";result_type=" << cfg_.result_type;
        break;
      case Stage::Eval:
        os << "coverage_ks=";
        for (size_t k : cfg_.coverage_ks) os << k << ',';
        os << ";map_ks=";
        for (size_t k : cfg_.map_ks) os << k << ',';
        os << ";triplets=" << cfg_.triplets << ";golden=" << cfg_.golden
           << ";k=" << cfg_.candidate_k << ";use_doc=" << use_doc2vec();
        break;
    }
    return os.str();
  }

  std::string manifest_path(Stage stage) const {
    return out(std::string("manifests/") + stage_name(stage) + ".json");
  }

  bool up_to_date(Stage stage) const {
    std::ifstream in(manifest_path(stage));
    if (!in) return false;
    nlohmann::json m;
    try {
      in >> m;
    } catch (...) {
      return false;
    }
    if (m.value("config_hash", "") != to_hex(fnv1a(stage_config_string(stage)))) return false;
    auto check = [&](const char* section, const FileRefs& refs) {
      if (!m.contains(section)) return refs.empty();
      const auto& recorded = m[section];
      if (recorded.size() != refs.size()) return false;
      for (const auto& [key, path] : refs) {
        if (!recorded.contains(key)) return false;
        if (!std::filesystem::exists(path)) return false;
        if (recorded[key] != hash_file(path)) return false;
      }
      return true;
    };
    return check("inputs", inputs_of(stage)) && check("outputs", outputs_of(stage));
  }

  void write_manifest(Stage stage) {
    nlohmann::json m;
    m["stage"] = stage_name(stage);
    m["seed"] = cfg_.seed;
    m["config_hash"] = to_hex(fnv1a(stage_config_string(stage)));
    m["inputs"] = nlohmann::json::object();
    for (const auto& [key, path] : inputs_of(stage)) m["inputs"][key] = hash_file(path);
    m["outputs"] = nlohmann::json::object();
    for (const auto& [key, path] : outputs_of(stage)) m["outputs"][key] = hash_file(path);
    std::ofstream out_file(manifest_path(stage));
    out_file << m.dump(2) << '\n';
    if (!out_file) throw Error("write failed: " + manifest_path(stage));
  }

  // --- stage bodies -----------------------------------------------------------

  void run_stage(Stage stage) {
    for (const auto& [key, path] : inputs_of(stage)) require(path);
    switch (stage) {
      case Stage::Ingest: run_ingest(); break;
      case Stage::Walk: run_walk(); break;
      case Stage::TrainLg2vec: run_train(cfg_.lg2vec_resolved(), false); break;
      case Stage::TrainDoc2vec: run_train(cfg_.doc2vec_resolved(), true); break;
      case Stage::Candidates: run_candidates(); break;
      case Stage::TrainRanker: run_train_ranker(); break;
      case Stage::Rank: run_rank(); break;
      case Stage::Eval: run_eval(); break;
    }
  }

  void run_ingest() {
    std::vector<LoadedLayer> loaded(cfg_.layers.size());
    if (threads_ > 1 && cfg_.layers.size() > 1) {
      std::vector<std::future<LoadedLayer>> futures;
      for (const auto& spec : cfg_.layers)
        futures.push_back(std::async(std::launch::async, [&spec]() {
          return load_layer(spec.path, spec.name, spec.weight_exponent);
        }));
      for (size_t i = 0; i < futures.size(); ++i) loaded[i] = futures[i].get();
    } else {
      for (size_t i = 0; i < cfg_.layers.size(); ++i)
        loaded[i] = load_layer(cfg_.layers[i].path, cfg_.layers[i].name,
                               cfg_.layers[i].weight_exponent);
    }
    LayeredGraph graph = build_layered_graph(loaded, cfg_.pageviews, cfg_.alias, cfg_.min_pageview);
    save_graph(graph, graph_path());
    std::cout << "[ingest] " << graph.vocabulary.size() << " nodes, " << graph.total_edges()
              << " edges; de-noising removed " << graph.stats.nodes_removed << " nodes / "
              << graph.stats.edges_removed << " edges\n";
  }

  void run_walk() {
    LayeredGraph graph = load_graph(graph_path());
    WalkConfig wc;
    wc.hops = cfg_.hops;
    wc.seed = cfg_.resolved_walk_seed();
    for (const auto& layer : cfg_.layers) wc.walks_per_node.push_back(layer.walks_per_node);
    Corpus corpus = generate_walks(graph, wc, threads_);
    save_corpus(corpus, corpus_path(), corpus_layers_path());
    std::cout << "[walk] " << corpus.size() << " sentences\n";
  }

  void run_train(const SgnsConfig& sgns, bool doc) {
    Corpus corpus =
        doc ? build_doc_corpus(cfg_.documents) : load_corpus(corpus_path(), corpus_layers_path());
    TrainOptions options;
    options.threads = threads_;
    std::vector<double> losses;
    options.epoch_loss = &losses;
    if (!doc) options.layer_window = cfg_.layer_windows();
    EmbeddingModel warm;
    if (!doc && !cfg_.warm_start_model.empty()) {
      std::string companion = cfg_.warm_start_model + ".out";
      warm = load_embedding(cfg_.warm_start_model,
                            std::filesystem::exists(companion) ? companion : "");
      options.warm_start = &warm;
      options.freeze_warm_rows = cfg_.warm_start_freeze;
    }
    EmbeddingModel model = train_sgns(corpus, sgns, options);
    std::string path = doc ? doc2vec_path() : lg2vec_path();
    save_embedding(model, path, path + ".out");
    std::cout << '[' << (doc ? "train-doc2vec" : "train-lg2vec") << "] |V|=" << model.vocab.size()
              << " d=" << model.dim << " epoch losses:";
    for (double l : losses) std::cout << ' ' << format_metric(l);
    std::cout << '\n';
  }

  void run_candidates() {
    EmbeddingModel lg = load_embedding(lg2vec_path());
    std::optional<EmbeddingModel> doc;
    if (use_doc2vec()) doc = load_embedding(doc2vec_path());
    GoldenSet golden = load_golden(cfg_.golden);
    std::ofstream file = open_output(candidates_path());
    size_t emitted = 0;
    for (const auto& entry : golden.entries) {
      if (!lg.vocab.contains(entry.query)) {
        std::cerr << "[candidates] query '" << entry.query << "' not in lg2vec vocabulary\n";
        continue;
      }
      CandidateList list = knn(lg, entry.query, cfg_.candidate_k);
      if (doc && has_doc_tag(*doc, entry.query)) {
        CandidateList doc_list = doc_knn(*doc, entry.query, cfg_.candidate_k);
        list = mix_candidates(list, doc_list, cfg_.candidate_k);
      }
      append_candidates(file, list);
      ++emitted;
    }
    if (!file) throw Error("write failed: " + candidates_path());
    std::cout << "[candidates] " << emitted << " queries, k=" << cfg_.candidate_k << '\n';
  }

  // The context points into the bundle's own members, so a bundle is
  // filled in place and never copied or moved.
  struct FeatureBundle {
    LayeredGraph graph;
    EmbeddingModel lg;
    std::optional<EmbeddingModel> doc;
    std::optional<SearchlogTable> searchlog;
    FeatureContext ctx;
  };

  void load_feature_bundle(FeatureBundle& b) {
    b.graph = load_graph(graph_path());
    b.lg = load_embedding(lg2vec_path());
    if (use_doc2vec()) b.doc = load_embedding(doc2vec_path());
    if (!cfg_.searchlog.empty()) b.searchlog = SearchlogTable::load(cfg_.searchlog);
    b.ctx.lg2vec = &b.lg;
    b.ctx.doc2vec = b.doc ? &*b.doc : nullptr;
    b.ctx.graph = &b.graph;
    if (!cfg_.clickstream_layer_name.empty())
      b.ctx.clickstream_layer = b.graph.layer_index(cfg_.clickstream_layer_name);
    b.ctx.searchlog = b.searchlog ? &*b.searchlog : nullptr;
  }

  void run_train_ranker() {
    FeatureBundle bundle;
    load_feature_bundle(bundle);
    GoldenSet golden = load_golden(cfg_.golden);
    std::vector<CandidateList> candidates = load_candidates(candidates_path());
    PairSet pairs = build_training_pairs(golden, candidates, bundle.ctx, cfg_.feature_mask,
                                         cfg_.resolved_ranker_seed());
    std::vector<double> losses;
    RankerModel model = train_ranker(pairs, cfg_.ranker, &losses);
    save_ranker(model, ranker_path());
    std::cout << "[train-ranker] " << pairs.groups.size() << " query groups, "
              << model.trees.size() << " trees, loss " << format_metric(losses.front()) << " -> "
              << format_metric(losses.back()) << '\n';
  }

  void run_rank() {
    FeatureBundle bundle;
    load_feature_bundle(bundle);
    RankerModel model = load_ranker(ranker_path());
    std::vector<CandidateList> candidates = load_candidates(candidates_path());
    std::optional<TypeTable> types;
    if (!cfg_.result_type.empty()) types = TypeTable::load(cfg_.types);
    std::ofstream file = open_output(rankings_path());
    for (const auto& list : candidates) {
      CandidateList ranked = rank(model, bundle.ctx, list.query, list);
      if (types) ranked = filter_by_type(ranked, *types, cfg_.result_type);
      for (size_t i = 0; i < ranked.items.size(); ++i)
        file << ranked.query << '\t' << (i + 1) << '\t' << ranked.items[i].entity << '\t'
             << format_double(ranked.items[i].score) << '\n';
    }
    if (!file) throw Error("write failed: " + rankings_path());
    std::cout << "[rank] " << candidates.size() << " queries ranked\n";
  }

  void run_eval() {
    EmbeddingModel lg = load_embedding(lg2vec_path());
    std::optional<EmbeddingModel> doc;
    if (use_doc2vec()) doc = load_embedding(doc2vec_path());

    if (!cfg_.triplets.empty()) {
      TripletSet triplets = load_triplets(cfg_.triplets);
      ReportTable table;
      table.corner = "embedding";
      table.columns = {"accuracy", "evaluated", "skipped"};
      auto add_row = [&](const std::string& name, const TripletResult& r) {
        table.rows.push_back(name);
        table.cells.push_back({format_metric(r.accuracy), std::to_string(r.evaluated),
                               std::to_string(r.skipped)});
      };
      add_row("lg2vec", triplet_accuracy(lg, triplets));
      if (doc) {
        try {
          add_row("doc2vec", triplet_accuracy(*doc, with_doc_tags(triplets)));
        } catch (const Error&) {
          // no evaluable triplet under the document vocabulary; omit the row
        }
      }
      write_report(table, out("reports/triplets.tsv"), out("reports/triplets.txt"));
    }

    if (cfg_.golden.empty()) return;
    GoldenSet golden = load_golden(cfg_.golden);

    auto lg_generator = [&](const std::string& q, size_t k) {
      if (!lg.vocab.contains(q)) return CandidateList{q, {}};
      return knn(lg, q, k);
    };
    auto doc_generator = [&](const std::string& q, size_t k) {
      if (!doc || !has_doc_tag(*doc, q)) return CandidateList{q, {}};
      return doc_knn(*doc, q, k);
    };
    std::vector<CandidateGenerator> generators;
    generators.push_back({"lg2vec", lg_generator});
    if (doc) {
      generators.push_back({"doc2vec", doc_generator});
      generators.push_back({"lg2vec+doc2vec", [&](const std::string& q, size_t k) {
                              return mix_candidates(lg_generator(q, k), doc_generator(q, k), k);
                            }});
    }
    CoverageCurve curve = coverage_curve(generators, golden, cfg_.coverage_ks);
    ReportTable coverage_table;
    coverage_table.corner = "embedding";
    for (size_t k : curve.ks) coverage_table.columns.push_back("k=" + std::to_string(k));
    for (size_t r = 0; r < curve.names.size(); ++r) {
      coverage_table.rows.push_back(curve.names[r]);
      std::vector<std::string> cells;
      for (double c : curve.mean_coverage[r]) cells.push_back(format_metric(c));
      coverage_table.cells.push_back(std::move(cells));
    }
    write_report(coverage_table, out("reports/coverage.tsv"), out("reports/coverage.txt"));

    // MAP table: the trained ranker against similarity-only orderings.
    const size_t kmax = cfg_.map_ks.back();
    std::vector<std::pair<std::string, std::vector<std::string>>> ranker_lists;
    {
      require(rankings_path());
      for_each_tsv_row(rankings_path(), [&](const std::vector<std::string_view>& f, size_t line_no) {
        if (f.size() != 4) throw Error(rankings_path() + ":" + std::to_string(line_no) + ": bad row");
        if (ranker_lists.empty() || ranker_lists.back().first != f[0])
          ranker_lists.push_back({std::string(f[0]), {}});
        ranker_lists.back().second.emplace_back(f[2]);
      });
    }
    auto knn_lists = [&](const CandidateGenerator& gen) {
      std::vector<std::pair<std::string, std::vector<std::string>>> lists;
      for (const auto& entry : golden.entries) {
        CandidateList list = gen.generate(entry.query, kmax);
        std::vector<std::string> names;
        for (const auto& item : list.items) names.push_back(item.entity);
        lists.push_back({entry.query, std::move(names)});
      }
      return lists;
    };
    ReportTable map_table;
    map_table.corner = "scorer";
    for (size_t k : cfg_.map_ks) map_table.columns.push_back("MAP@" + std::to_string(k));
    auto add_map_row = [&](const std::string& name,
                           const std::vector<std::pair<std::string, std::vector<std::string>>>& lists) {
      map_table.rows.push_back(name);
      std::vector<std::string> cells;
      for (size_t k : cfg_.map_ks) cells.push_back(format_metric(map_at_k(lists, golden, k)));
      map_table.cells.push_back(std::move(cells));
    };
    add_map_row("ranker", ranker_lists);
    add_map_row("lg2vec", knn_lists(generators[0]));
    if (doc) add_map_row("doc2vec", knn_lists(generators[1]));
    write_report(map_table, out("reports/map.tsv"), out("reports/map.txt"));
    std::cout << "[eval] reports written to " << out("reports") << '\n';
  }

  PipelineConfig cfg_;
  unsigned threads_;
  bool force_;
};

}  // namespace lgrec
