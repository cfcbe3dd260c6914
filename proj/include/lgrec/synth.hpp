#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lgrec/common.hpp"
#include "lgrec/eval.hpp"
#include "lgrec/ranker.hpp"
#include "lgrec/tsv.hpp"

namespace lgrec {

// Stochastic block model: planted communities give unambiguous ground
// truth for triplet, coverage and ranking oracles.
struct SbmSpec {
  uint32_t communities = 4;
  uint32_t nodes_per_community = 50;
  double intra_probability = 0.2;
  double inter_probability = 0.01;
  uint64_t seed = 1;

  void validate() const {
    if (communities < 1 || nodes_per_community < 1)
      throw ConfigError("sbm: communities and nodes per community must be >= 1");
    if (intra_probability < 0.0 || intra_probability > 1.0 || inter_probability < 0.0 ||
        inter_probability > 1.0)
      throw ConfigError("sbm: probabilities must be in [0,1]");
  }

  uint32_t node_count() const { return communities * nodes_per_community; }
  std::string node_name(uint32_t i) const { return "n" + std::to_string(i); }
  uint32_t community_of(uint32_t i) const { return i / nodes_per_community; }
};

// node -> community, in generation order.
struct CommunityTable {
  std::vector<std::string> nodes;
  std::vector<uint32_t> community;

  std::vector<std::vector<uint32_t>> members() const {
    uint32_t max_c = 0;
    for (uint32_t c : community) max_c = std::max(max_c, c);
    std::vector<std::vector<uint32_t>> out(community.empty() ? 0 : max_c + 1);
    for (uint32_t i = 0; i < community.size(); ++i) out[community[i]].push_back(i);
    return out;
  }
};

inline void save_communities(const CommunityTable& table, const std::string& path) {
  std::ofstream out = open_output(path);
  for (size_t i = 0; i < table.nodes.size(); ++i)
    out << table.nodes[i] << '\t' << table.community[i] << '\n';
  if (!out) throw Error("write failed: " + path);
}

inline CommunityTable load_communities(const std::string& path) {
  CommunityTable table;
  for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
    if (f.size() != 2)
      throw Error(path + ":" + std::to_string(line_no) + ": expected `entity \\t community`");
    table.nodes.emplace_back(f[0]);
    table.community.push_back(static_cast<uint32_t>(parse_u64(f[1], path, line_no)));
  });
  return table;
}

/// Draw the SBM once (each unordered pair independently) and write a
/// directed edge file: every drawn pair is emitted both ways with weight 1.
inline CommunityTable generate_sbm(const SbmSpec& spec, const std::string& edge_path,
                                   const std::string& community_path) {
  spec.validate();
  const uint32_t n = spec.node_count();
  CommunityTable table;
  for (uint32_t i = 0; i < n; ++i) {
    table.nodes.push_back(spec.node_name(i));
    table.community.push_back(spec.community_of(i));
  }
  save_communities(table, community_path);

  SplitMix64 rng(derive_seed(spec.seed, 0x73626d));
  std::ofstream out = open_output(edge_path);
  for (uint32_t i = 0; i < n; ++i) {
    for (uint32_t j = i + 1; j < n; ++j) {
      double p = spec.community_of(i) == spec.community_of(j) ? spec.intra_probability
                                                              : spec.inter_probability;
      if (rng.next_double() < p) {
        out << table.nodes[i] << '\t' << table.nodes[j] << "\t1\n";
        out << table.nodes[j] << '\t' << table.nodes[i] << "\t1\n";
      }
    }
  }
  if (!out) throw Error("write failed: " + edge_path);
  return table;
}

/// Uniform community triplets: a,b from one community (distinct), c from a
/// different one. Communities of size < 2 cannot supply (a,b).
inline TripletSet derive_triplets(const CommunityTable& table, size_t count, uint64_t seed) {
  auto members = table.members();
  std::vector<uint32_t> eligible;  // nodes whose community can host (a,b)
  for (const auto& group : members)
    if (group.size() >= 2)
      for (uint32_t node : group) eligible.push_back(node);
  size_t populated = 0;
  for (const auto& group : members)
    if (!group.empty()) ++populated;
  if (populated < 2) throw Error("derive_triplets: need at least 2 communities");
  if (eligible.empty()) throw Error("derive_triplets: no community of size >= 2");

  TripletSet set;
  SplitMix64 rng(derive_seed(seed, 0x747269));
  while (set.triplets.size() < count) {
    uint32_t a = eligible[rng.next_below(eligible.size())];
    const auto& group = members[table.community[a]];
    uint32_t b = a;
    while (b == a) b = group[rng.next_below(group.size())];
    uint32_t c = a;
    while (table.community[c] == table.community[a])
      c = static_cast<uint32_t>(rng.next_below(table.nodes.size()));
    set.triplets.push_back({table.nodes[a], table.nodes[b], table.nodes[c]});
  }
  return set;
}

/// Golden set: for every node, `per_query` uniformly sampled same-community
/// peers. Every community must hold at least per_query + 1 nodes.
inline GoldenSet derive_golden(const CommunityTable& table, size_t per_query, uint64_t seed) {
  auto members = table.members();
  if (per_query > 0)
    for (const auto& group : members)
      if (!group.empty() && group.size() < per_query + 1)
        throw Error("derive_golden: community smaller than per-query size + 1");

  GoldenSet golden;
  for (uint32_t q = 0; q < table.nodes.size(); ++q) {
    std::vector<uint32_t> peers;
    for (uint32_t m : members[table.community[q]])
      if (m != q) peers.push_back(m);
    SplitMix64 rng(derive_seed(seed, 0x676f6c, q));
    std::vector<uint32_t> chosen = sample_without_replacement(std::move(peers), per_query, rng);
    GoldenSet::Entry entry;
    entry.query = table.nodes[q];
    for (uint32_t m : chosen) entry.relevant.push_back(table.nodes[m]);
    golden.entries.push_back(std::move(entry));
  }
  return golden;
}

/// Topic-word documents: community c owns `vocab_per_community` words; each
/// node's document is `words_per_doc` uniform draws from its community's
/// words. Gives doc2vec tags the same planted structure as the graph.
inline void generate_docs(const CommunityTable& table, size_t words_per_doc,
                          size_t vocab_per_community, uint64_t seed, const std::string& path) {
  if (words_per_doc == 0 || vocab_per_community == 0)
    throw ConfigError("generate_docs: sizes must be >= 1");
  std::ofstream out = open_output(path);
  for (uint32_t i = 0; i < table.nodes.size(); ++i) {
    SplitMix64 rng(derive_seed(seed, 0x646f63, i));
    out << table.nodes[i] << '\t';
    for (size_t w = 0; w < words_per_doc; ++w) {
      if (w) out << ' ';
      out << 'c' << table.community[i] << 'w' << rng.next_below(vocab_per_community);
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

/// Log-uniform yearly pageviews in [1e3, 1e6], so popularity features have
/// realistic spread.
inline void generate_pageviews(const CommunityTable& table, uint64_t seed,
                               const std::string& path) {
  std::ofstream out = open_output(path);
  SplitMix64 rng(derive_seed(seed, 0x706776));
  for (const auto& node : table.nodes) {
    double log_pv = std::log(1e3) + rng.next_double() * (std::log(1e6) - std::log(1e3));
    out << node << '\t' << static_cast<uint64_t>(std::llround(std::exp(log_pv))) << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace lgrec
