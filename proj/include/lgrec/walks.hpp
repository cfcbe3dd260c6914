#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lgrec/common.hpp"
#include "lgrec/corpus.hpp"
#include "lgrec/graph.hpp"

namespace lgrec {

struct WalkConfig {
  std::vector<uint32_t> walks_per_node;  // n_k, one entry per layer
  uint32_t hops = 10;                    // edges per walk; a full walk has hops+1 tokens
  uint64_t seed = 1;
};

/// One biased step: neighbor j with probability w_j / sum(w); nullopt at sinks.
inline std::optional<uint32_t> walk_step(const GraphLayer& layer, uint32_t node, SplitMix64& rng) {
  auto nb = layer.neighbors(node);
  if (nb.empty()) return std::nullopt;
  auto wts = layer.neighbor_weights(node);
  double total = 0.0;
  for (double w : wts) total += w;
  double u = rng.next_double() * total;
  double acc = 0.0;
  for (size_t j = 0; j + 1 < nb.size(); ++j) {
    acc += wts[j];
    if (u < acc) return nb[j];
  }
  return nb.back();
}

namespace detail {

inline std::vector<uint32_t> run_walk(const GraphLayer& layer, uint32_t start, uint32_t hops,
                                      uint64_t stream_seed) {
  SplitMix64 rng(stream_seed);
  std::vector<uint32_t> sentence;
  sentence.reserve(hops + 1);
  sentence.push_back(start);
  uint32_t node = start;
  for (uint32_t step = 0; step < hops; ++step) {
    auto next = walk_step(layer, node, rng);
    if (!next) break;  // sink: emit the prefix
    node = *next;
    sentence.push_back(node);
  }
  return sentence;
}

}  // namespace detail

/// Build the walk corpus: for each layer k, n_k walks from every node, each
/// walk at most `hops` edges, sampled proportionally to outgoing edge
/// weight. Sentences are laid out by (layer, start node, walk index) with
/// one RNG stream per slot, so output is identical for any thread count.
inline Corpus generate_walks(const LayeredGraph& graph, const WalkConfig& config,
                             unsigned threads = 1) {
  if (graph.vocabulary.empty()) throw ConfigError("generate_walks: empty graph");
  if (config.walks_per_node.size() != graph.layers.size())
    throw ConfigError("generate_walks: expected one walk count per layer");
  for (uint32_t n : config.walks_per_node)
    if (n == 0) throw ConfigError("generate_walks: walks per node must be >= 1");
  if (config.hops == 0) throw ConfigError("generate_walks: hop length must be >= 1");

  const size_t node_count = graph.vocabulary.size();
  Corpus corpus;
  corpus.vocab = graph.vocabulary;
  for (const auto& layer : graph.layers) corpus.layer_names.push_back(layer.name);

  size_t total = 0;
  std::vector<size_t> layer_base(graph.layers.size());
  for (size_t k = 0; k < graph.layers.size(); ++k) {
    layer_base[k] = total;
    total += static_cast<size_t>(config.walks_per_node[k]) * node_count;
  }
  corpus.sentences.resize(total);
  corpus.provenance.resize(total);

  auto fill_range = [&](size_t k, uint32_t node_begin, uint32_t node_end) {
    const GraphLayer& layer = graph.layers[k];
    const uint32_t n_k = config.walks_per_node[k];
    for (uint32_t v = node_begin; v < node_end; ++v) {
      for (uint32_t w = 0; w < n_k; ++w) {
        size_t slot = layer_base[k] + static_cast<size_t>(v) * n_k + w;
        corpus.sentences[slot] =
            detail::run_walk(layer, v, config.hops, derive_seed(config.seed, k, v, w));
        corpus.provenance[slot] = static_cast<uint32_t>(k);
      }
    }
  };

  for (size_t k = 0; k < graph.layers.size(); ++k) {
    if (threads <= 1 || node_count < 2 * threads) {
      fill_range(k, 0, static_cast<uint32_t>(node_count));
      continue;
    }
    std::vector<std::thread> workers;
    size_t chunk = (node_count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      uint32_t begin = static_cast<uint32_t>(std::min(node_count, t * chunk));
      uint32_t end = static_cast<uint32_t>(std::min(node_count, (t + 1) * chunk));
      if (begin < end) workers.emplace_back(fill_range, k, begin, end);
    }
    for (auto& th : workers) th.join();
  }
  return corpus;
}

}  // namespace lgrec
