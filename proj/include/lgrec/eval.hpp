#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "lgrec/candidates.hpp"
#include "lgrec/common.hpp"
#include "lgrec/embedding.hpp"
#include "lgrec/ranker.hpp"
#include "lgrec/tsv.hpp"

namespace lgrec {

// (a,b,c) with the intent that sim(a,b) > sim(a,c).
struct TripletSet {
  std::vector<std::array<std::string, 3>> triplets;
};

inline TripletSet load_triplets(const std::string& path) {
  TripletSet set;
  for_each_tsv_row(path, [&](const std::vector<std::string_view>& f, size_t line_no) {
    if (f.size() != 3)
      throw Error(path + ":" + std::to_string(line_no) + ": expected `a \\t b \\t c`");
    if (f[0] == f[1] || f[0] == f[2] || f[1] == f[2])
      throw Error(path + ":" + std::to_string(line_no) + ": triplet members must be distinct");
    set.triplets.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2])});
  });
  return set;
}

inline void save_triplets(const TripletSet& set, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const auto& t : set.triplets) out << t[0] << '\t' << t[1] << '\t' << t[2] << '\n';
  if (!out) throw Error("write failed: " + path);
}

// Triplets rewritten onto document tags, for evaluating a doc2vec model.
inline TripletSet with_doc_tags(const TripletSet& set) {
  TripletSet tagged;
  tagged.triplets.reserve(set.triplets.size());
  for (const auto& t : set.triplets)
    tagged.triplets.push_back({doc_tag(t[0]), doc_tag(t[1]), doc_tag(t[2])});
  return tagged;
}

struct TripletResult {
  double accuracy = 0.0;
  size_t evaluated = 0;
  size_t skipped = 0;  // out-of-vocabulary members
};

/// Fraction of evaluable triplets with cosine(a,b) > cosine(a,c); exact
/// ties count as failures, out-of-vocabulary triplets are skipped.
inline TripletResult triplet_accuracy(const EmbeddingModel& model, const TripletSet& set) {
  TripletResult result;
  size_t correct = 0;
  for (const auto& t : set.triplets) {
    uint32_t a = model.vocab.find(t[0]);
    uint32_t b = model.vocab.find(t[1]);
    uint32_t c = model.vocab.find(t[2]);
    if (a == kNoEntity || b == kNoEntity || c == kNoEntity) {
      ++result.skipped;
      continue;
    }
    ++result.evaluated;
    if (cosine_by_index(model, a, b) > cosine_by_index(model, a, c)) ++correct;
  }
  if (result.evaluated == 0) throw Error("triplet_accuracy: no evaluable triplets");
  result.accuracy = static_cast<double>(correct) / static_cast<double>(result.evaluated);
  return result;
}

/// AP@k = (sum over i<=k of Precision@i * rel_i) / min(|relevant|, k).
inline double average_precision_at_k(const std::vector<std::string>& ranked,
                                     const std::unordered_set<std::string>& relevant, size_t k) {
  if (k < 1) throw ConfigError("average_precision_at_k: k must be >= 1");
  if (relevant.empty()) throw Error("average_precision_at_k: empty relevant set");
  if (ranked.empty()) {
    std::cerr << "[eval] warning: empty ranked list, AP = 0\n";
    return 0.0;
  }
  size_t hits = 0;
  double sum = 0.0;
  const size_t depth = std::min(k, ranked.size());
  for (size_t i = 0; i < depth; ++i) {
    if (relevant.count(ranked[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(relevant.size(), k));
}

/// Unweighted mean of AP@k over the queries present in both the ranking
/// table and the golden set.
inline double map_at_k(const std::vector<std::pair<std::string, std::vector<std::string>>>& ranked,
                       const GoldenSet& golden, size_t k) {
  KahanSum mean;
  for (const auto& [query, list] : ranked) {
    const GoldenSet::Entry* entry = golden.find(query);
    if (!entry || entry->relevant.empty()) continue;
    std::unordered_set<std::string> relevant(entry->relevant.begin(), entry->relevant.end());
    mean.add(average_precision_at_k(list, relevant, k));
  }
  if (mean.count() == 0) throw Error("map_at_k: no query overlaps the golden set");
  return mean.mean();
}

// A named candidate generator: query, k -> CandidateList.
struct CandidateGenerator {
  std::string name;
  std::function<CandidateList(const std::string&, size_t)> generate;
};

struct CoverageCurve {
  std::vector<std::string> names;   // row per generator
  std::vector<size_t> ks;           // column per k
  std::vector<std::vector<double>> mean_coverage;  // [row][column]
};

/// Mean coverage of top-k candidates against each query's golden relevant
/// set, for every generator and every k. ks must be sorted ascending; one
/// kNN pass at max(ks) serves all columns per query.
inline CoverageCurve coverage_curve(const std::vector<CandidateGenerator>& generators,
                                    const GoldenSet& golden, const std::vector<size_t>& ks) {
  if (ks.empty() || !std::is_sorted(ks.begin(), ks.end()))
    throw ConfigError("coverage_curve: ks must be non-empty and sorted ascending");
  CoverageCurve curve;
  curve.ks = ks;
  const size_t kmax = ks.back();
  for (const auto& gen : generators) {
    curve.names.push_back(gen.name);
    std::vector<KahanSum> sums(ks.size());
    for (const auto& entry : golden.entries) {
      CandidateList full = gen.generate(entry.query, kmax);
      std::unordered_set<std::string> relevant(entry.relevant.begin(), entry.relevant.end());
      if (relevant.empty()) throw Error("coverage_curve: empty relevant set");
      // prefix hit counts give coverage at every k in one pass
      size_t hits = 0, at = 0;
      for (size_t col = 0; col < ks.size(); ++col) {
        for (; at < std::min(ks[col], full.items.size()); ++at)
          if (relevant.count(full.items[at].entity)) ++hits;
        sums[col].add(static_cast<double>(hits) / static_cast<double>(relevant.size()));
      }
    }
    std::vector<double> row;
    for (auto& s : sums) row.push_back(s.mean());
    curve.mean_coverage.push_back(std::move(row));
  }
  return curve;
}

// --- report tables (TSV + aligned text) -------------------------------------------

struct ReportTable {
  std::string corner;                       // header of the row-label column
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<std::string>> cells;  // [row][column]
};

inline void write_report(const ReportTable& table, const std::string& tsv_path,
                         const std::string& text_path) {
  {
    std::ofstream out = open_output(tsv_path);
    out << table.corner;
    for (const auto& c : table.columns) out << '\t' << c;
    out << '\n';
    for (size_t r = 0; r < table.rows.size(); ++r) {
      out << table.rows[r];
      for (const auto& cell : table.cells[r]) out << '\t' << cell;
      out << '\n';
    }
    if (!out) throw Error("write failed: " + tsv_path);
  }
  {
    std::vector<size_t> widths(table.columns.size() + 1, 0);
    widths[0] = table.corner.size();
    for (const auto& r : table.rows) widths[0] = std::max(widths[0], r.size());
    for (size_t c = 0; c < table.columns.size(); ++c) {
      widths[c + 1] = table.columns[c].size();
      for (const auto& row : table.cells)
        widths[c + 1] = std::max(widths[c + 1], row[c].size());
    }
    std::ofstream out = open_output(text_path);
    auto emit = [&](const std::string& label, const std::vector<std::string>& cells) {
      out << std::left << std::setw(static_cast<int>(widths[0])) << label;
      for (size_t c = 0; c < cells.size(); ++c)
        out << "  " << std::right << std::setw(static_cast<int>(widths[c + 1])) << cells[c];
      out << '\n';
    };
    emit(table.corner, table.columns);
    for (size_t r = 0; r < table.rows.size(); ++r) emit(table.rows[r], table.cells[r]);
    if (!out) throw Error("write failed: " + text_path);
  }
}

inline std::string format_metric(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << x;
  return os.str();
}

}  // namespace lgrec
