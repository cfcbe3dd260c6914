#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "lgrec/candidates.hpp"
#include "lgrec/common.hpp"
#include "lgrec/corpus.hpp"
#include "lgrec/tsv.hpp"

namespace lgrec {

struct SgnsConfig {
  uint32_t dimension = 200;
  uint32_t window = 3;
  uint32_t negatives = 5;         // K
  uint32_t epochs = 3;
  double learning_rate = 0.025;   // decayed linearly over all updates
  double min_learning_rate = 1e-4;
  double negative_exponent = 0.75;
  uint64_t seed = 1;

  void validate() const {
    if (dimension < 1) throw ConfigError("sgns: dimension must be >= 1");
    if (window < 1) throw ConfigError("sgns: window must be >= 1");
    if (negatives < 1) throw ConfigError("sgns: negatives must be >= 1");
    if (epochs < 1) throw ConfigError("sgns: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("sgns: learning rate must be > 0");
    if (!(negative_exponent > 0.0)) throw ConfigError("sgns: negative exponent must be > 0");
  }
};

// Paired input/output vector tables over the vocabulary. Similarity queries
// read the input vectors only; the output table exists for training and is
// kept for reproducibility.
struct EmbeddingModel {
  EntityTable vocab;
  uint32_t dim = 0;
  std::vector<double> input;        // row-major |V| x dim
  std::vector<double> output;
  std::vector<uint64_t> frequency;  // per-token counts from the training corpus

  std::span<double> input_row(uint32_t i) { return {input.data() + size_t(i) * dim, dim}; }
  std::span<const double> input_row(uint32_t i) const {
    return {input.data() + size_t(i) * dim, dim};
  }
  std::span<double> output_row(uint32_t i) { return {output.data() + size_t(i) * dim, dim}; }
  std::span<const double> output_row(uint32_t i) const {
    return {output.data() + size_t(i) * dim, dim};
  }

  uint32_t require(std::string_view entity) const {
    uint32_t id = vocab.find(entity);
    if (id == kNoEntity) throw Error("entity not in vocabulary: '" + std::string(entity) + "'");
    return id;
  }
};

// --- skip-gram enumeration --------------------------------------------------

/// Pairs for one sentence: for every position i, (token_i, token_j) for all
/// j != i with |i-j| <= window, clipped at the bounds; a tagged sentence
/// additionally yields (tag, token_i) at every position.
template <typename Fn>
void for_each_skipgram(std::span<const uint32_t> sentence, uint32_t window, uint32_t tag, Fn&& fn) {
  const size_t n = sentence.size();
  for (size_t i = 0; i < n; ++i) {
    size_t lo = i >= window ? i - window : 0;
    size_t hi = std::min(n, i + window + 1);
    for (size_t j = lo; j < hi; ++j)
      if (j != i) fn(sentence[i], sentence[j]);
    if (tag != kNoTag) fn(tag, sentence[i]);
  }
}

/// Materialize all (center, context) pairs of the corpus. The default
/// window can be overridden per source layer.
inline std::vector<std::pair<uint32_t, uint32_t>> build_skipgrams(
    const Corpus& corpus, uint32_t window,
    const std::map<std::string, uint32_t>& layer_window = {}) {
  if (window < 1) throw ConfigError("build_skipgrams: window must be >= 1");
  std::vector<uint32_t> window_of(corpus.layer_names.size(), window);
  for (size_t l = 0; l < corpus.layer_names.size(); ++l) {
    auto it = layer_window.find(corpus.layer_names[l]);
    if (it != layer_window.end()) {
      if (it->second < 1) throw ConfigError("build_skipgrams: window must be >= 1");
      window_of[l] = it->second;
    }
  }
  std::vector<std::pair<uint32_t, uint32_t>> pairs;
  for (size_t s = 0; s < corpus.sentences.size(); ++s) {
    uint32_t w = corpus.provenance.empty() ? window : window_of[corpus.provenance[s]];
    for_each_skipgram(corpus.sentences[s], w, corpus.tag(s),
                      [&](uint32_t c, uint32_t x) { pairs.emplace_back(c, x); });
  }
  return pairs;
}

// --- negative-sampling objective ---------------------------------------------

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)), stable for large |x|.
inline double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// Loss of one (center, context) pair with the given negatives:
///   -[log s(f_O(ctx)·f_I(c)) + sum_neg log s(-f_O(neg)·f_I(c))]
inline double sgns_pair_loss(const EmbeddingModel& model, uint32_t center, uint32_t context,
                             std::span<const uint32_t> negatives) {
  auto x = model.input_row(center);
  auto pos = model.output_row(context);
  double dot = 0.0;
  for (uint32_t j = 0; j < model.dim; ++j) dot += pos[j] * x[j];
  double loss = -log_sigmoid(dot);
  for (uint32_t neg : negatives) {
    auto row = model.output_row(neg);
    double d = 0.0;
    for (uint32_t j = 0; j < model.dim; ++j) d += row[j] * x[j];
    loss -= log_sigmoid(-d);
  }
  return loss;
}

namespace detail {

// One simultaneous SGD step; dot products are taken before any write, so
// the applied deltas are exactly -lr times the loss gradient at the input
// parameters. Touches f_I(center), f_O(context) and f_O(negatives) only.
// `frozen` rows (warm-start freeze mode), when given, are left unchanged.
inline double sgns_apply(EmbeddingModel& model, uint32_t center, uint32_t context,
                         std::span<const uint32_t> negatives, double lr,
                         const std::vector<bool>* frozen) {
  const uint32_t dim = model.dim;
  auto x = model.input_row(center);
  auto pos = model.output_row(context);

  double pos_dot = 0.0;
  for (uint32_t j = 0; j < dim; ++j) pos_dot += pos[j] * x[j];
  double loss = -log_sigmoid(pos_dot);

  std::vector<double> neg_coef(negatives.size());
  for (size_t k = 0; k < negatives.size(); ++k) {
    auto row = model.output_row(negatives[k]);
    double d = 0.0;
    for (uint32_t j = 0; j < dim; ++j) d += row[j] * x[j];
    loss -= log_sigmoid(-d);
    neg_coef[k] = sigmoid(d);  // d(-log s(-d))/dd
  }
  double pos_coef = sigmoid(pos_dot) - 1.0;

  std::vector<double> grad_x(dim, 0.0);
  for (uint32_t j = 0; j < dim; ++j) grad_x[j] = pos_coef * pos[j];
  for (size_t k = 0; k < negatives.size(); ++k) {
    auto row = model.output_row(negatives[k]);
    for (uint32_t j = 0; j < dim; ++j) grad_x[j] += neg_coef[k] * row[j];
  }

  if (!frozen || !(*frozen)[context])
    for (uint32_t j = 0; j < dim; ++j) pos[j] -= lr * pos_coef * x[j];
  for (size_t k = 0; k < negatives.size(); ++k) {
    if (frozen && (*frozen)[negatives[k]]) continue;
    auto row = model.output_row(negatives[k]);
    for (uint32_t j = 0; j < dim; ++j) row[j] -= lr * neg_coef[k] * x[j];
  }
  if (!frozen || !(*frozen)[center])
    for (uint32_t j = 0; j < dim; ++j) x[j] -= lr * grad_x[j];
  return loss;
}

}  // namespace detail

/// One SGD step on the pair objective; returns the pre-update loss.
inline double sgns_pair_update(EmbeddingModel& model, uint32_t center, uint32_t context,
                               std::span<const uint32_t> negatives, double lr) {
  return detail::sgns_apply(model, center, context, negatives, lr, nullptr);
}

// Draws tokens from unigram^exponent over the corpus frequencies; the
// positive context is excluded by rejection.
class NegativeSampler {
 public:
  NegativeSampler(std::span<const uint64_t> frequency, double exponent) {
    cumulative_.resize(frequency.size());
    double acc = 0.0;
    size_t nonzero = 0;
    for (size_t i = 0; i < frequency.size(); ++i) {
      if (frequency[i] > 0) {
        acc += std::pow(static_cast<double>(frequency[i]), exponent);
        ++nonzero;
      }
      cumulative_[i] = acc;
    }
    if (nonzero < 2)
      throw Error("negative sampling needs at least two distinct corpus tokens");
    total_ = acc;
  }

  uint32_t draw(SplitMix64& rng, uint32_t exclude) const {
    while (true) {
      double u = rng.next_double() * total_;
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      uint32_t token = static_cast<uint32_t>(
          std::min<size_t>(it - cumulative_.begin(), cumulative_.size() - 1));
      if (token != exclude) return token;
    }
  }

  void fill(SplitMix64& rng, uint32_t exclude, std::span<uint32_t> out) const {
    for (auto& slot : out) slot = draw(rng, exclude);
  }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

struct TrainOptions {
  std::map<std::string, uint32_t> layer_window;  // per-layer window override
  const EmbeddingModel* warm_start = nullptr;    // copy rows for known tokens
  bool freeze_warm_rows = false;                 // freeze copied rows, train only new ones
  unsigned threads = 1;                          // >1: asynchronous SGD, non-deterministic
  std::vector<double>* epoch_loss = nullptr;     // mean pre-update loss per epoch
};

/// Train skip-gram negative-sampling embeddings. f_I starts uniform in
/// [-0.5/d, +0.5/d], f_O at zero; epochs iterate over shuffled skip-grams
/// with the learning rate decayed linearly over the total update count.
/// Single-threaded training is bitwise deterministic for a fixed seed.
inline EmbeddingModel train_sgns(const Corpus& corpus, const SgnsConfig& config,
                                 const TrainOptions& options = {}) {
  config.validate();
  if (corpus.sentences.empty()) throw Error("train_sgns: empty corpus");

  EmbeddingModel model;
  model.vocab = corpus.vocab;
  model.dim = config.dimension;
  model.frequency.assign(model.vocab.size(), 0);
  for (const auto& sentence : corpus.sentences)
    for (uint32_t token : sentence) model.frequency[token]++;

  NegativeSampler sampler(model.frequency, config.negative_exponent);

  const size_t rows = model.vocab.size();
  model.input.resize(rows * config.dimension);
  model.output.assign(rows * config.dimension, 0.0);
  SplitMix64 init_rng(derive_seed(config.seed, 0x696e6974));  // init stream
  const double scale = 1.0 / config.dimension;
  for (double& v : model.input) v = (init_rng.next_double() - 0.5) * scale;

  std::vector<bool> frozen;
  if (options.warm_start) {
    const EmbeddingModel& prior = *options.warm_start;
    if (prior.dim != model.dim)
      throw ConfigError("warm start dimension mismatch: " + std::to_string(prior.dim) + " vs " +
                        std::to_string(model.dim));
    if (options.freeze_warm_rows) frozen.assign(rows, false);
    for (uint32_t i = 0; i < rows; ++i) {
      uint32_t p = prior.vocab.find(model.vocab.symbol(i));
      if (p == kNoEntity) continue;
      std::copy_n(prior.input_row(p).begin(), model.dim, model.input_row(i).begin());
      std::copy_n(prior.output_row(p).begin(), model.dim, model.output_row(i).begin());
      if (options.freeze_warm_rows) frozen[i] = true;
    }
  }
  const std::vector<bool>* frozen_ptr = frozen.empty() ? nullptr : &frozen;

  auto pairs = build_skipgrams(corpus, config.window, options.layer_window);
  const size_t total_updates = pairs.size() * config.epochs;
  const double lr0 = config.learning_rate;
  const double lr_floor = std::min(config.min_learning_rate, lr0);
  auto lr_at = [&](size_t t) {
    double lr = lr0 * (1.0 - static_cast<double>(t) / static_cast<double>(total_updates));
    return std::max(lr, lr_floor);
  };

  std::vector<uint32_t> negatives(config.negatives);
  for (uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    SplitMix64 shuffle_rng(derive_seed(config.seed, 0x73687566, epoch));  // shuffle stream
    shuffle(pairs, shuffle_rng);
    KahanSum epoch_sum;

    if (options.threads <= 1 || pairs.size() < 1024) {
      SplitMix64 neg_rng(derive_seed(config.seed, 0x6e656773, epoch));
      size_t t = static_cast<size_t>(epoch) * pairs.size();
      for (const auto& [center, context] : pairs) {
        sampler.fill(neg_rng, context, negatives);
        epoch_sum.add(
            detail::sgns_apply(model, center, context, negatives, lr_at(t), frozen_ptr));
        ++t;
      }
    } else {
      const unsigned threads = options.threads;
      std::vector<KahanSum> partial(threads);
      std::vector<std::thread> workers;
      size_t chunk = (pairs.size() + threads - 1) / threads;
      for (unsigned w = 0; w < threads; ++w) {
        size_t begin = std::min(pairs.size(), w * chunk);
        size_t end = std::min(pairs.size(), (w + 1) * chunk);
        if (begin >= end) continue;
        workers.emplace_back([&, w, begin, end]() {
          SplitMix64 neg_rng(derive_seed(config.seed, 0x6e656773, epoch, w));
          std::vector<uint32_t> negs(config.negatives);
          size_t t = static_cast<size_t>(epoch) * pairs.size() + begin;
          for (size_t i = begin; i < end; ++i, ++t) {
            sampler.fill(neg_rng, pairs[i].second, negs);
            partial[w].add(detail::sgns_apply(model, pairs[i].first, pairs[i].second, negs,
                                              lr_at(t), frozen_ptr));
          }
        });
      }
      for (auto& th : workers) th.join();
      for (const auto& p : partial) epoch_sum.add(p.sum());
    }

    if (options.epoch_loss)
      options.epoch_loss->push_back(pairs.empty() ? 0.0 : epoch_sum.sum() / pairs.size());
  }
  return model;
}

// --- similarity queries -------------------------------------------------------

inline double cosine_by_index(const EmbeddingModel& model, uint32_t a, uint32_t b) {
  auto va = model.input_row(a);
  auto vb = model.input_row(b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (uint32_t j = 0; j < model.dim; ++j) {
    dot += va[j] * vb[j];
    na += va[j] * va[j];
    nb += vb[j] * vb[j];
  }
  if (na == 0.0 || nb == 0.0)
    throw Error("cosine undefined for zero vector ('" + model.vocab.symbol(a) + "' vs '" +
                model.vocab.symbol(b) + "')");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double cosine(const EmbeddingModel& model, std::string_view a, std::string_view b) {
  return cosine_by_index(model, model.require(a), model.require(b));
}

namespace detail {

// Exhaustive top-k by (cosine desc, index asc). Zero-norm rows are skipped.
template <typename Filter>
std::vector<std::pair<uint32_t, double>> knn_scan(const EmbeddingModel& model, uint32_t query,
                                                  size_t k, Filter&& keep) {
  auto q = model.input_row(query);
  double qn = 0.0;
  for (double v : q) qn += v * v;
  if (qn == 0.0) throw Error("knn: query vector is zero");
  qn = std::sqrt(qn);

  std::vector<std::pair<uint32_t, double>> scored;
  scored.reserve(model.vocab.size());
  for (uint32_t i = 0; i < model.vocab.size(); ++i) {
    if (!keep(i)) continue;
    auto row = model.input_row(i);
    double dot = 0.0, n = 0.0;
    for (uint32_t j = 0; j < model.dim; ++j) {
      dot += row[j] * q[j];
      n += row[j] * row[j];
    }
    if (n == 0.0) continue;
    scored.emplace_back(i, dot / (std::sqrt(n) * qn));
  }
  auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  if (scored.size() > k) {
    std::nth_element(scored.begin(), scored.begin() + k, scored.end(), better);
    scored.resize(k);
  }
  std::sort(scored.begin(), scored.end(), better);
  return scored;
}

}  // namespace detail

/// Top-k entities by cosine to the query, ties broken by ascending interned
/// index; exhaustive scan (no approximation).
inline CandidateList knn(const EmbeddingModel& model, std::string_view query, size_t k,
                         bool exclude_query = true) {
  if (k < 1) throw ConfigError("knn: k must be >= 1");
  uint32_t qid = model.require(query);
  auto scored = detail::knn_scan(model, qid, k,
                                 [&](uint32_t i) { return !(exclude_query && i == qid); });
  CandidateList out;
  out.query = std::string(query);
  out.items.reserve(scored.size());
  for (const auto& [id, cos] : scored)
    out.items.push_back({model.vocab.symbol(id), cos, CandidateSource::lg2vec});
  return out;
}

// --- document corpora (tag-in-window training) ---------------------------------

constexpr char kDocTagPrefix = '\x01';

inline std::string doc_tag(std::string_view entity) {
  std::string tag;
  tag.reserve(entity.size() + 1);
  tag.push_back(kDocTagPrefix);
  tag.append(entity);
  return tag;
}

inline bool is_doc_tag(std::string_view symbol) {
  return !symbol.empty() && symbol[0] == kDocTagPrefix;
}

inline std::string_view strip_doc_tag(std::string_view symbol) {
  return is_doc_tag(symbol) ? symbol.substr(1) : symbol;
}

/// Read `entity \t token token ...` lines into a tagged corpus: each
/// document is one sentence with its entity tag attached, so every
/// skip-gram window contributes (tag, word) pairs next to the word-word
/// ones. Tags share the vocabulary behind a reserved prefix.
inline Corpus build_doc_corpus(const std::string& path) {
  Corpus corpus;
  corpus.layer_names = {"docs"};
  for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
    if (f.size() != 2 || f[0].empty())
      throw Error(path + ":" + std::to_string(line_no) + ": expected `entity \\t tokens`");
    std::string tag_symbol = doc_tag(f[0]);
    if (corpus.vocab.contains(tag_symbol))
      throw Error(path + ":" + std::to_string(line_no) + ": duplicate document tag '" +
                  std::string(f[0]) + "'");
    uint32_t tag = corpus.vocab.intern(tag_symbol);
    std::vector<uint32_t> sentence;
    std::string_view text = f[1];
    size_t start = 0;
    while (start < text.size()) {
      size_t pos = text.find(' ', start);
      if (pos == std::string_view::npos) pos = text.size();
      if (pos > start) sentence.push_back(corpus.vocab.intern(text.substr(start, pos - start)));
      start = pos + 1;
    }
    corpus.sentences.push_back(std::move(sentence));
    corpus.provenance.push_back(0);
    corpus.tags.push_back(tag);
  });
  return corpus;
}

inline bool has_doc_tag(const EmbeddingModel& model, std::string_view entity) {
  return model.vocab.contains(doc_tag(entity));
}

inline double doc_cosine(const EmbeddingModel& model, std::string_view a, std::string_view b) {
  return cosine(model, doc_tag(a), doc_tag(b));
}

/// kNN over document tags only; results are entity symbols (prefix stripped).
inline CandidateList doc_knn(const EmbeddingModel& model, std::string_view entity, size_t k) {
  if (k < 1) throw ConfigError("doc_knn: k must be >= 1");
  uint32_t qid = model.require(doc_tag(entity));
  auto scored = detail::knn_scan(model, qid, k, [&](uint32_t i) {
    return i != qid && is_doc_tag(model.vocab.symbol(i));
  });
  CandidateList out;
  out.query = std::string(entity);
  out.items.reserve(scored.size());
  for (const auto& [id, cos] : scored)
    out.items.push_back(
        {std::string(strip_doc_tag(model.vocab.symbol(id))), cos, CandidateSource::doc2vec});
  return out;
}

// --- persistence ----------------------------------------------------------------

/// Text format: first line `|V| d`, then `symbol v_1 ... v_d` per entity
/// (input vectors). `output_path`, when given, receives f_O the same way.
inline void save_embedding(const EmbeddingModel& model, const std::string& path,
                           const std::string& output_path = "") {
  auto dump = [&](const std::string& p, const std::vector<double>& matrix) {
    std::ofstream out = open_output(p);
    out << model.vocab.size() << ' ' << model.dim << '\n';
    for (uint32_t i = 0; i < model.vocab.size(); ++i) {
      const std::string& symbol = model.vocab.symbol(i);
      if (symbol.find_first_of(" \n") != std::string::npos)
        throw Error("embedding format cannot hold symbols with spaces: '" + symbol + "'");
      out << symbol;
      const double* row = matrix.data() + size_t(i) * model.dim;
      for (uint32_t j = 0; j < model.dim; ++j) out << ' ' << format_double(row[j]);
      out << '\n';
    }
    if (!out) throw Error("write failed: " + p);
  };
  dump(path, model.input);
  if (!output_path.empty()) dump(output_path, model.output);
}

inline EmbeddingModel load_embedding(const std::string& path, const std::string& output_path = "") {
  EmbeddingModel model;
  auto parse = [&](const std::string& p, std::vector<double>& matrix, bool first) {
    std::ifstream in(p);
    if (!in) throw Error("cannot open embedding: " + p);
    size_t rows = 0, dim = 0;
    if (!(in >> rows >> dim) || dim == 0) throw Error(p + ": bad embedding header");
    if (first) {
      model.dim = static_cast<uint32_t>(dim);
    } else if (dim != model.dim || rows != model.vocab.size()) {
      throw Error(p + ": companion matrix shape mismatch");
    }
    matrix.resize(rows * dim);
    for (size_t i = 0; i < rows; ++i) {
      std::string symbol;
      if (!(in >> symbol)) throw Error(p + ": truncated embedding");
      if (first) {
        if (model.vocab.intern(symbol) != i) throw Error(p + ": duplicate symbol '" + symbol + "'");
      } else if (model.vocab.find(symbol) != i) {
        throw Error(p + ": companion matrix symbol order mismatch");
      }
      for (size_t j = 0; j < dim; ++j)
        if (!(in >> matrix[i * dim + j])) throw Error(p + ": truncated embedding row");
    }
  };
  parse(path, model.input, true);
  if (!output_path.empty())
    parse(output_path, model.output, false);
  else
    model.output.assign(model.input.size(), 0.0);
  model.frequency.assign(model.vocab.size(), 0);
  return model;
}

}  // namespace lgrec
