#pragma once

#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

#include "lgrec/common.hpp"
#include "lgrec/tsv.hpp"

namespace lgrec {

enum class CandidateSource { lg2vec, doc2vec, mixed };

inline const char* source_name(CandidateSource s) {
  switch (s) {
    case CandidateSource::lg2vec: return "lg2vec";
    case CandidateSource::doc2vec: return "doc2vec";
    default: return "mixed";
  }
}

inline CandidateSource source_from_name(std::string_view name) {
  if (name == "lg2vec") return CandidateSource::lg2vec;
  if (name == "doc2vec") return CandidateSource::doc2vec;
  if (name == "mixed") return CandidateSource::mixed;
  throw Error("unknown candidate source: " + std::string(name));
}

struct ScoredEntity {
  std::string entity;
  double score = 0.0;
  CandidateSource source = CandidateSource::lg2vec;
};

// Ordered candidate set N(q): no duplicates, query itself absent.
struct CandidateList {
  std::string query;
  std::vector<ScoredEntity> items;

  size_t size() const { return items.size(); }
  bool contains(std::string_view entity) const {
    for (const auto& item : items)
      if (item.entity == entity) return true;
    return false;
  }
};

/// Mix two candidate lists for the same query: take the top-ceil(k/2) of
/// each, interleave a-first, drop duplicates keeping the first occurrence,
/// then backfill from the remaining a-then-b items up to min(k, available).
inline CandidateList mix_candidates(const CandidateList& a, const CandidateList& b, size_t k) {
  if (a.query != b.query)
    throw Error("mix_candidates: query mismatch ('" + a.query + "' vs '" + b.query + "')");
  if (k < 2) throw ConfigError("mix_candidates: k must be >= 2");

  const size_t half = (k + 1) / 2;
  const size_t ha = std::min(half, a.items.size());
  const size_t hb = std::min(half, b.items.size());

  CandidateList out;
  out.query = a.query;
  std::unordered_set<std::string> seen;
  auto push = [&](const ScoredEntity& item) {
    if (out.items.size() >= k) return;
    if (seen.insert(item.entity).second) out.items.push_back(item);
  };

  for (size_t i = 0; i < std::max(ha, hb); ++i) {
    if (i < ha) push(a.items[i]);
    if (i < hb) push(b.items[i]);
  }
  for (size_t i = ha; i < a.items.size(); ++i) push(a.items[i]);
  for (size_t i = hb; i < b.items.size(); ++i) push(b.items[i]);
  return out;
}

/// Candidate-set quality: |items ∩ relevant| / |relevant|.
inline double coverage(const CandidateList& candidates,
                       const std::unordered_set<std::string>& relevant) {
  if (relevant.empty()) throw Error("coverage: empty relevant set");
  size_t hits = 0;
  for (const auto& item : candidates.items)
    if (relevant.count(item.entity)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

// --- candidate dump: `query \t rank \t entity \t score \t source` ----------

inline void append_candidates(std::ofstream& out, const CandidateList& list) {
  for (size_t i = 0; i < list.items.size(); ++i) {
    const auto& item = list.items[i];
    out << list.query << '\t' << (i + 1) << '\t' << item.entity << '\t'
        << format_double(item.score) << '\t' << source_name(item.source) << '\n';
  }
}

inline std::vector<CandidateList> load_candidates(const std::string& path) {
  std::vector<CandidateList> lists;
  for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
    if (f.size() != 5)
      throw Error(path + ":" + std::to_string(line_no) + ": expected 5 columns");
    if (lists.empty() || lists.back().query != f[0]) {
      lists.push_back({});
      lists.back().query = std::string(f[0]);
    }
    ScoredEntity item;
    item.entity = std::string(f[2]);
    item.score = parse_double(f[3], path, line_no);
    item.source = source_from_name(f[4]);
    lists.back().items.push_back(std::move(item));
  });
  return lists;
}

}  // namespace lgrec
