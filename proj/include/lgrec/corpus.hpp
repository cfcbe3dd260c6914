#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lgrec/common.hpp"
#include "lgrec/entity_table.hpp"
#include "lgrec/tsv.hpp"

namespace lgrec {

constexpr uint32_t kNoTag = kNoEntity;

// Token sequences for skip-gram training. Walk corpora carry per-sentence
// layer provenance; document corpora additionally carry one tag token per
// sentence (the tag is not part of the token sequence itself).
struct Corpus {
  EntityTable vocab;
  std::vector<std::vector<uint32_t>> sentences;
  std::vector<uint32_t> provenance;        // index into layer_names, per sentence
  std::vector<std::string> layer_names;
  std::vector<uint32_t> tags;              // kNoTag when untagged

  size_t size() const { return sentences.size(); }

  uint32_t tag(size_t sentence) const {
    return sentence < tags.size() ? tags[sentence] : kNoTag;
  }
};

// One sentence per line, space-separated symbols; sidecar file gets the
// per-line layer provenance.
inline void save_corpus(const Corpus& corpus, const std::string& path,
                        const std::string& provenance_path = "") {
  std::ofstream out = open_output(path);
  for (const auto& sentence : corpus.sentences) {
    for (size_t i = 0; i < sentence.size(); ++i) {
      const std::string& symbol = corpus.vocab.symbol(sentence[i]);
      if (symbol.find_first_of(" \n") != std::string::npos)
        throw Error("corpus format cannot hold symbols with spaces: '" + symbol + "'");
      if (i) out << ' ';
      out << symbol;
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
  if (!provenance_path.empty()) {
    std::ofstream side = open_output(provenance_path);
    for (size_t s = 0; s < corpus.sentences.size(); ++s)
      side << corpus.layer_names[corpus.provenance[s]] << '\n';
    if (!side) throw Error("write failed: " + provenance_path);
  }
}

inline Corpus load_corpus(const std::string& path, const std::string& provenance_path = "") {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus: " + path);
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<uint32_t> sentence;
    size_t start = 0;
    while (start < line.size()) {
      size_t pos = line.find(' ', start);
      if (pos == std::string::npos) pos = line.size();
      if (pos > start) sentence.push_back(corpus.vocab.intern(line.substr(start, pos - start)));
      start = pos + 1;
    }
    if (sentence.empty()) throw Error(path + ": empty sentence line");
    corpus.sentences.push_back(std::move(sentence));
  }
  if (!provenance_path.empty()) {
    std::ifstream side(provenance_path);
    if (!side) throw Error("cannot open corpus provenance: " + provenance_path);
    EntityTable names;
    while (std::getline(side, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      corpus.provenance.push_back(names.intern(line));
    }
    if (corpus.provenance.size() != corpus.sentences.size())
      throw Error(provenance_path + ": provenance line count does not match corpus");
    corpus.layer_names = names.symbols();
  } else {
    corpus.provenance.assign(corpus.sentences.size(), 0);
    corpus.layer_names = {"corpus"};
  }
  return corpus;
}

}  // namespace lgrec
