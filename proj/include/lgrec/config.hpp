#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "lgrec/common.hpp"
#include "lgrec/embedding.hpp"
#include "lgrec/ranker.hpp"

namespace lgrec {

// --- minimal TOML subset ------------------------------------------------------
// Supports: comments, [section], [[section]] (table arrays), and
// `key = value` with strings, integers, floats, booleans and single-line
// arrays of scalars. That covers the whole pipeline schema.

struct TomlValue {
  std::variant<int64_t, double, bool, std::string, std::vector<TomlValue>> data;

  bool is_array() const { return std::holds_alternative<std::vector<TomlValue>>(data); }
};

using TomlTable = std::map<std::string, TomlValue>;

class TomlFile {
 public:
  static TomlFile parse(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    TomlFile file;
    file.path_ = path;
    file.sections_[""].push_back({});
    TomlTable* current = &file.sections_[""].back();

    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view s = strip_comment(line);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        bool array = s.size() > 1 && s[1] == '[';
        std::string_view inner = array ? s.substr(2, s.size() - 4) : s.substr(1, s.size() - 2);
        if ((array && (s.size() < 5 || s.substr(s.size() - 2) != "]]")) ||
            (!array && s.back() != ']') || trim(inner).empty())
          throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed section header");
        std::string name(trim(inner));
        if (!array && !file.sections_[name].empty())
          throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate section [" + name + "]");
        file.sections_[name].push_back({});
        current = &file.sections_[name].back();
        continue;
      }
      size_t eq = s.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(path + ":" + std::to_string(line_no) + ": expected `key = value`");
      std::string key(trim(s.substr(0, eq)));
      std::string_view value = trim(s.substr(eq + 1));
      if (key.empty() || value.empty())
        throw ConfigError(path + ":" + std::to_string(line_no) + ": expected `key = value`");
      if (current->count(key))
        throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
      (*current)[key] = parse_value(value, path, line_no);
    }
    return file;
  }

  const TomlTable& root() const { return sections_.at("").front(); }

  const TomlTable* section(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end() || it->second.empty()) return nullptr;
    return &it->second.front();
  }

  std::vector<const TomlTable*> tables(const std::string& name) const {
    std::vector<const TomlTable*> out;
    auto it = sections_.find(name);
    if (it != sections_.end())
      for (const auto& t : it->second) out.push_back(&t);
    return out;
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  }

  static std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static TomlValue parse_value(std::string_view v, const std::string& path, size_t line_no) {
    if (v.front() == '"') {
      if (v.size() < 2 || v.back() != '"')
        throw ConfigError(path + ":" + std::to_string(line_no) + ": unterminated string");
      std::string out;
      for (size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] == '\\' && i + 2 < v.size()) {
          ++i;
          switch (v[i]) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            default:
              throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown escape");
          }
        } else {
          out.push_back(v[i]);
        }
      }
      return {out};
    }
    if (v.front() == '[') {
      if (v.back() != ']')
        throw ConfigError(path + ":" + std::to_string(line_no) + ": unterminated array");
      std::vector<TomlValue> items;
      std::string_view body = trim(v.substr(1, v.size() - 2));
      while (!body.empty()) {
        size_t comma = std::string_view::npos;
        bool quoted = false;
        for (size_t i = 0; i < body.size(); ++i) {
          if (body[i] == '"' && (i == 0 || body[i - 1] != '\\')) quoted = !quoted;
          if (body[i] == ',' && !quoted) {
            comma = i;
            break;
          }
        }
        std::string_view item = trim(comma == std::string_view::npos ? body : body.substr(0, comma));
        if (item.empty())
          throw ConfigError(path + ":" + std::to_string(line_no) + ": empty array element");
        items.push_back(parse_value(item, path, line_no));
        if (comma == std::string_view::npos) break;
        body = trim(body.substr(comma + 1));
      }
      return {items};
    }
    if (v == "true") return {true};
    if (v == "false") return {false};
    {
      int64_t i = 0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
      if (ec == std::errc() && p == v.data() + v.size()) return {i};
    }
    {
      double d = 0.0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
      if (ec == std::errc() && p == v.data() + v.size()) return {d};
    }
    throw ConfigError(path + ":" + std::to_string(line_no) + ": cannot parse value '" +
                      std::string(v) + "'");
  }

  std::string path_;
  std::map<std::string, std::vector<TomlTable>> sections_;
};

// Collects validation violations so a bad config reports every problem at once.
struct Violations {
  std::vector<std::string> items;

  void add(std::string message) { items.push_back(std::move(message)); }

  void raise_if_any() const {
    if (items.empty()) return;
    std::string joined = "config validation failed:";
    for (const auto& item : items) joined += "\n  - " + item;
    throw ConfigError(joined);
  }
};

namespace detail {

inline const TomlValue* find(const TomlTable& table, const std::string& key) {
  auto it = table.find(key);
  return it == table.end() ? nullptr : &it->second;
}

inline std::string get_string(const TomlTable& table, const std::string& key,
                              std::string fallback, Violations& v) {
  const TomlValue* val = find(table, key);
  if (!val) return fallback;
  if (auto* s = std::get_if<std::string>(&val->data)) return *s;
  v.add("'" + key + "' must be a string");
  return fallback;
}

inline int64_t get_int(const TomlTable& table, const std::string& key, int64_t fallback,
                       Violations& v) {
  const TomlValue* val = find(table, key);
  if (!val) return fallback;
  if (auto* i = std::get_if<int64_t>(&val->data)) return *i;
  v.add("'" + key + "' must be an integer");
  return fallback;
}

inline double get_double(const TomlTable& table, const std::string& key, double fallback,
                         Violations& v) {
  const TomlValue* val = find(table, key);
  if (!val) return fallback;
  if (auto* d = std::get_if<double>(&val->data)) return *d;
  if (auto* i = std::get_if<int64_t>(&val->data)) return static_cast<double>(*i);
  v.add("'" + key + "' must be a number");
  return fallback;
}

inline bool get_bool(const TomlTable& table, const std::string& key, bool fallback,
                     Violations& v) {
  const TomlValue* val = find(table, key);
  if (!val) return fallback;
  if (auto* b = std::get_if<bool>(&val->data)) return *b;
  v.add("'" + key + "' must be a boolean");
  return fallback;
}

inline std::vector<std::string> get_string_array(const TomlTable& table, const std::string& key,
                                                 std::vector<std::string> fallback, Violations& v) {
  const TomlValue* val = find(table, key);
  if (!val) return fallback;
  if (!val->is_array()) {
    v.add("'" + key + "' must be an array of strings");
    return fallback;
  }
  std::vector<std::string> out;
  for (const auto& item : std::get<std::vector<TomlValue>>(val->data)) {
    if (auto* s = std::get_if<std::string>(&item.data)) {
      out.push_back(*s);
    } else {
      v.add("'" + key + "' must be an array of strings");
      return fallback;
    }
  }
  return out;
}

inline std::vector<size_t> get_size_array(const TomlTable& table, const std::string& key,
                                          std::vector<size_t> fallback, Violations& v) {
  const TomlValue* val = find(table, key);
  if (!val) return fallback;
  if (!val->is_array()) {
    v.add("'" + key + "' must be an array of integers");
    return fallback;
  }
  std::vector<size_t> out;
  for (const auto& item : std::get<std::vector<TomlValue>>(val->data)) {
    auto* i = std::get_if<int64_t>(&item.data);
    if (!i || *i < 1) {
      v.add("'" + key + "' must be an array of positive integers");
      return fallback;
    }
    out.push_back(static_cast<size_t>(*i));
  }
  return out;
}

}  // namespace detail

struct LayerSpec {
  std::string name;
  std::string path;
  double weight_exponent = 1.0;
  uint32_t walks_per_node = 50;
  std::optional<uint32_t> window;  // per-layer skip-gram window override
};

// Full pipeline configuration; see the README for the schema.
struct PipelineConfig {
  std::string output_dir = "out";
  uint64_t seed = 42;

  std::vector<LayerSpec> layers;
  std::string pageviews, alias, documents, golden, triplets, searchlog, types, result_type;
  std::string clickstream_layer_name;
  int64_t min_pageview = 0;

  uint32_t hops = 10;
  std::optional<uint64_t> walk_seed;

  SgnsConfig lg2vec;
  SgnsConfig doc2vec;
  std::optional<uint64_t> lg2vec_seed, doc2vec_seed;
  std::string warm_start_model;  // optional prior embedding for lg2vec
  bool warm_start_freeze = false;

  uint32_t candidate_k = 500;

  FeatureMask feature_mask = 0;
  GbdtConfig ranker;
  std::optional<uint64_t> ranker_seed;

  std::vector<size_t> coverage_ks = {5, 10, 25, 50};
  std::vector<size_t> map_ks = {3, 6, 9};

  uint64_t resolved_walk_seed() const { return walk_seed ? *walk_seed : derive_seed(seed, 100); }
  uint64_t resolved_lg2vec_seed() const {
    return lg2vec_seed ? *lg2vec_seed : derive_seed(seed, 101);
  }
  uint64_t resolved_doc2vec_seed() const {
    return doc2vec_seed ? *doc2vec_seed : derive_seed(seed, 102);
  }
  uint64_t resolved_ranker_seed() const {
    return ranker_seed ? *ranker_seed : derive_seed(seed, 103);
  }

  SgnsConfig lg2vec_resolved() const {
    SgnsConfig c = lg2vec;
    c.seed = resolved_lg2vec_seed();
    return c;
  }
  SgnsConfig doc2vec_resolved() const {
    SgnsConfig c = doc2vec;
    c.seed = resolved_doc2vec_seed();
    return c;
  }

  std::map<std::string, uint32_t> layer_windows() const {
    std::map<std::string, uint32_t> out;
    for (const auto& layer : layers)
      if (layer.window) out[layer.name] = *layer.window;
    return out;
  }

  static PipelineConfig load(const std::string& path);
};

inline PipelineConfig PipelineConfig::load(const std::string& path) {
  TomlFile file = TomlFile::parse(path);
  Violations v;
  PipelineConfig cfg;
  const TomlTable& root = file.root();

  cfg.output_dir = detail::get_string(root, "output_dir", cfg.output_dir, v);
  cfg.seed = static_cast<uint64_t>(detail::get_int(root, "seed", static_cast<int64_t>(cfg.seed), v));
  cfg.pageviews = detail::get_string(root, "pageviews", "", v);
  cfg.alias = detail::get_string(root, "alias", "", v);
  cfg.documents = detail::get_string(root, "documents", "", v);
  cfg.golden = detail::get_string(root, "golden", "", v);
  cfg.triplets = detail::get_string(root, "triplets", "", v);
  cfg.searchlog = detail::get_string(root, "searchlog", "", v);
  cfg.types = detail::get_string(root, "types", "", v);
  cfg.result_type = detail::get_string(root, "result_type", "", v);
  cfg.min_pageview = detail::get_int(root, "min_pageview", 0, v);
  cfg.hops = static_cast<uint32_t>(detail::get_int(root, "hops", cfg.hops, v));
  cfg.candidate_k = static_cast<uint32_t>(detail::get_int(root, "candidate_k", cfg.candidate_k, v));
  cfg.coverage_ks = detail::get_size_array(root, "coverage_ks", cfg.coverage_ks, v);
  cfg.map_ks = detail::get_size_array(root, "map_ks", cfg.map_ks, v);

  std::string clickstream_layer = detail::get_string(root, "clickstream_layer", "", v);

  auto layer_tables = file.tables("layer");
  std::unordered_set<std::string> layer_names;
  for (const auto* t : layer_tables) {
    LayerSpec spec;
    spec.name = detail::get_string(*t, "name", "", v);
    spec.path = detail::get_string(*t, "path", "", v);
    spec.weight_exponent = detail::get_double(*t, "weight_exponent", 1.0, v);
    spec.walks_per_node =
        static_cast<uint32_t>(detail::get_int(*t, "walks_per_node", 50, v));
    if (detail::find(*t, "window"))
      spec.window = static_cast<uint32_t>(detail::get_int(*t, "window", 3, v));
    if (spec.name.empty()) v.add("layer is missing a name");
    if (!layer_names.insert(spec.name).second) v.add("duplicate layer name '" + spec.name + "'");
    if (spec.path.empty())
      v.add("layer '" + spec.name + "' is missing a path");
    else if (!std::filesystem::exists(spec.path))
      v.add("layer '" + spec.name + "' file does not exist: " + spec.path);
    if (!(spec.weight_exponent > 0.0 && spec.weight_exponent <= 1.0))
      v.add("layer '" + spec.name + "' weight_exponent must be in (0,1]");
    if (spec.walks_per_node < 1) v.add("layer '" + spec.name + "' walks_per_node must be >= 1");
    if (spec.window && *spec.window < 1) v.add("layer '" + spec.name + "' window must be >= 1");
    cfg.layers.push_back(std::move(spec));
  }
  if (cfg.layers.empty()) v.add("at least one [[layer]] is required");

  auto read_sgns = [&](const char* name, SgnsConfig base, std::optional<uint64_t>& seed_out) {
    SgnsConfig c = base;
    if (const TomlTable* t = file.section(name)) {
      c.dimension = static_cast<uint32_t>(detail::get_int(*t, "dimension", c.dimension, v));
      c.window = static_cast<uint32_t>(detail::get_int(*t, "window", c.window, v));
      c.negatives = static_cast<uint32_t>(detail::get_int(*t, "negatives", c.negatives, v));
      c.epochs = static_cast<uint32_t>(detail::get_int(*t, "epochs", c.epochs, v));
      c.learning_rate = detail::get_double(*t, "learning_rate", c.learning_rate, v);
      c.min_learning_rate = detail::get_double(*t, "min_learning_rate", c.min_learning_rate, v);
      c.negative_exponent = detail::get_double(*t, "negative_exponent", c.negative_exponent, v);
      if (detail::find(*t, "seed"))
        seed_out = static_cast<uint64_t>(detail::get_int(*t, "seed", 0, v));
    }
    try {
      c.validate();
    } catch (const ConfigError& e) {
      v.add(std::string(name) + ": " + e.what());
    }
    return c;
  };
  SgnsConfig doc_defaults;
  doc_defaults.window = 5;
  cfg.lg2vec = read_sgns("lg2vec", SgnsConfig{}, cfg.lg2vec_seed);
  cfg.doc2vec = read_sgns("doc2vec", doc_defaults, cfg.doc2vec_seed);

  if (const TomlTable* t = file.section("walks")) {
    cfg.hops = static_cast<uint32_t>(detail::get_int(*t, "hops", cfg.hops, v));
    if (detail::find(*t, "seed"))
      cfg.walk_seed = static_cast<uint64_t>(detail::get_int(*t, "seed", 0, v));
  }

  if (const TomlTable* t = file.section("warm_start")) {
    cfg.warm_start_model = detail::get_string(*t, "model", "", v);
    std::string mode = detail::get_string(*t, "mode", "fine-tune", v);
    if (mode == "freeze-existing")
      cfg.warm_start_freeze = true;
    else if (mode != "fine-tune")
      v.add("warm_start mode must be 'fine-tune' or 'freeze-existing'");
    if (cfg.warm_start_model.empty())
      v.add("warm_start requires a model path");
    else if (!std::filesystem::exists(cfg.warm_start_model))
      v.add("warm_start model does not exist: " + cfg.warm_start_model);
  }

  if (const TomlTable* t = file.section("ranker")) {
    cfg.ranker.trees = static_cast<uint32_t>(detail::get_int(*t, "trees", cfg.ranker.trees, v));
    cfg.ranker.max_depth =
        static_cast<uint32_t>(detail::get_int(*t, "max_depth", cfg.ranker.max_depth, v));
    cfg.ranker.learning_rate =
        detail::get_double(*t, "learning_rate", cfg.ranker.learning_rate, v);
    cfg.ranker.min_leaf =
        static_cast<uint32_t>(detail::get_int(*t, "min_leaf", cfg.ranker.min_leaf, v));
    cfg.ranker.l2_leaf = detail::get_double(*t, "l2_leaf", cfg.ranker.l2_leaf, v);
    if (detail::find(*t, "seed"))
      cfg.ranker_seed = static_cast<uint64_t>(detail::get_int(*t, "seed", 0, v));
  }

  // Feature mask: explicit list, or everything the configured inputs support.
  std::vector<std::string> default_mask = {"lg2vec_sim", "pageview", "popratio"};
  if (!cfg.documents.empty()) {
    default_mask.push_back("doc2vec_sim");
    default_mask.push_back("doc2vec_present");
  }
  if (!clickstream_layer.empty()) default_mask.push_back("clickstream");
  if (!cfg.searchlog.empty()) default_mask.push_back("searchlog");
  std::vector<std::string> mask_list =
      detail::get_string_array(root, "feature_mask", default_mask, v);
  try {
    cfg.feature_mask = mask_from_names(mask_list);
  } catch (const ConfigError& e) {
    v.add(e.what());
  }

  // Semantic checks; every violation is reported, not just the first.
  for (const auto& [key, value] :
       std::vector<std::pair<std::string, std::string>>{{"pageviews", cfg.pageviews},
                                                        {"alias", cfg.alias},
                                                        {"documents", cfg.documents},
                                                        {"golden", cfg.golden},
                                                        {"triplets", cfg.triplets},
                                                        {"searchlog", cfg.searchlog},
                                                        {"types", cfg.types}}) {
    if (!value.empty() && !std::filesystem::exists(value))
      v.add("'" + key + "' file does not exist: " + value);
  }
  if (cfg.min_pageview < 0) v.add("min_pageview must be >= 0");
  if (cfg.hops < 1) v.add("hops must be >= 1");
  if (cfg.candidate_k < 2) v.add("candidate_k must be >= 2");
  if (!std::is_sorted(cfg.coverage_ks.begin(), cfg.coverage_ks.end()))
    v.add("coverage_ks must be sorted ascending");
  if (!std::is_sorted(cfg.map_ks.begin(), cfg.map_ks.end()))
    v.add("map_ks must be sorted ascending");
  if (cfg.ranker.max_depth < 1) v.add("ranker max_depth must be >= 1");
  if (!(cfg.ranker.learning_rate > 0.0)) v.add("ranker learning_rate must be > 0");
  if (cfg.ranker.min_leaf < 1) v.add("ranker min_leaf must be >= 1");
  if (cfg.ranker.l2_leaf < 0.0) v.add("ranker l2_leaf must be >= 0");
  if (mask_has(cfg.feature_mask, kDoc2vecSim) && cfg.documents.empty())
    v.add("feature 'doc2vec_sim' requires a documents file");
  if (mask_has(cfg.feature_mask, kSearchlog) && cfg.searchlog.empty())
    v.add("feature 'searchlog' requires a searchlog file");
  if (!clickstream_layer.empty() && !layer_names.count(clickstream_layer))
    v.add("clickstream_layer '" + clickstream_layer + "' is not a configured layer");
  if (mask_has(cfg.feature_mask, kClickstream) && clickstream_layer.empty())
    v.add("feature 'clickstream' requires clickstream_layer");
  if (!cfg.result_type.empty() && cfg.types.empty())
    v.add("result_type requires a types file");

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec || !std::filesystem::is_directory(cfg.output_dir))
    v.add("output directory is not writable: " + cfg.output_dir);

  v.raise_if_any();
  cfg.clickstream_layer_name = clickstream_layer;
  return cfg;
}

}  // namespace lgrec
