#include <catch2/catch_amalgamated.hpp>

#include <unordered_set>

#include "lgrec/candidates.hpp"

#include "test_util.hpp"

using namespace lgrec;

namespace {

CandidateList list_of(const std::string& query, const std::vector<std::string>& entities,
                      CandidateSource source = CandidateSource::lg2vec) {
  CandidateList out;
  out.query = query;
  double score = 1.0;
  for (const auto& e : entities) {
    out.items.push_back({e, score, source});
    score -= 0.01;
  }
  return out;
}

std::vector<std::string> entities_of(const CandidateList& list) {
  std::vector<std::string> out;
  for (const auto& item : list.items) out.push_back(item.entity);
  return out;
}

}  // namespace

TEST_CASE("mix drops duplicates and stops when both sources are exhausted") {
  CandidateList a = list_of("q", {"X", "Y"});
  CandidateList b = list_of("q", {"Y", "Z"}, CandidateSource::doc2vec);
  CandidateList mixed = mix_candidates(a, b, 4);
  REQUIRE(entities_of(mixed) == std::vector<std::string>{"X", "Y", "Z"});
}

TEST_CASE("mix with an empty source degenerates to the other's top-k") {
  CandidateList a = list_of("q", {"A", "B", "C", "D", "E"});
  CandidateList b;
  b.query = "q";
  CandidateList mixed = mix_candidates(a, b, 4);
  REQUIRE(entities_of(mixed) == std::vector<std::string>{"A", "B", "C", "D"});
}

TEST_CASE("mixing disjoint lists takes exactly half from each") {
  std::vector<std::string> a_items, b_items;
  for (int i = 0; i < 300; ++i) {
    a_items.push_back("a" + std::to_string(i));
    b_items.push_back("b" + std::to_string(i));
  }
  CandidateList mixed = mix_candidates(list_of("q", a_items), list_of("q", b_items), 500);
  REQUIRE(mixed.items.size() == 500);
  size_t from_a = 0, from_b = 0;
  for (const auto& item : mixed.items) (item.entity[0] == 'a' ? from_a : from_b)++;
  REQUIRE(from_a == 250);
  REQUIRE(from_b == 250);
}

TEST_CASE("mix rejects mismatched queries and tiny k") {
  CandidateList a = list_of("q1", {"X"});
  CandidateList b = list_of("q2", {"Y"});
  REQUIRE_THROWS_AS(mix_candidates(a, b, 4), Error);
  CandidateList b2 = list_of("q1", {"Y"});
  REQUIRE_THROWS_AS(mix_candidates(a, b2, 1), ConfigError);
}

TEST_CASE("mix output is capped at k and is a subset of the union") {
  CandidateList a = list_of("q", {"A", "B", "C", "D", "E", "F"});
  CandidateList b = list_of("q", {"C", "G", "A", "H"}, CandidateSource::doc2vec);
  for (size_t k : {2, 3, 5, 8, 20}) {
    CandidateList mixed = mix_candidates(a, b, k);
    REQUIRE(mixed.items.size() <= k);
    std::unordered_set<std::string> seen;
    for (const auto& item : mixed.items) {
      REQUIRE(seen.insert(item.entity).second);  // no duplicates
      REQUIRE((a.contains(item.entity) || b.contains(item.entity)));
    }
  }
}

TEST_CASE("mixing a list with itself returns its own top-k") {
  CandidateList a = list_of("q", {"A", "B", "C", "D", "E"});
  for (size_t k : {2, 3, 4, 5, 9}) {
    CandidateList mixed = mix_candidates(a, a, k);
    std::vector<std::string> expected = entities_of(a);
    expected.resize(std::min(k, expected.size()));
    REQUIRE(entities_of(mixed) == expected);
  }
}

TEST_CASE("interleaving is a-first and keeps the first occurrence's score") {
  CandidateList a = list_of("q", {"A1", "A2"});
  CandidateList b = list_of("q", {"B1", "A1"}, CandidateSource::doc2vec);
  CandidateList mixed = mix_candidates(a, b, 4);
  REQUIRE(entities_of(mixed) == std::vector<std::string>{"A1", "B1", "A2"});
  REQUIRE(mixed.items[0].source == CandidateSource::lg2vec);  // a's copy won
}

TEST_CASE("coverage is the fraction of relevant entities captured") {
  CandidateList c = list_of("q", {"a", "b", "c"});
  REQUIRE(coverage(c, {"b", "d"}) == 0.5);
  REQUIRE(coverage(c, {"a", "b"}) == 1.0);
  REQUIRE_THROWS_AS(coverage(c, {}), Error);
}

TEST_CASE("coverage is monotone in k for nested candidate lists") {
  CandidateList full = list_of("q", {"a", "b", "c", "d", "e", "f"});
  std::unordered_set<std::string> relevant = {"b", "e", "z"};
  double prev = 0.0;
  for (size_t k = 1; k <= full.items.size(); ++k) {
    CandidateList prefix;
    prefix.query = "q";
    prefix.items.assign(full.items.begin(), full.items.begin() + k);
    double cov = coverage(prefix, relevant);
    REQUIRE(cov >= prev);
    prev = cov;
  }
}

TEST_CASE("candidate dumps round-trip through the TSV format") {
  TempDir dir;
  CandidateList a = list_of("q1", {"X", "Y"});
  CandidateList b = list_of("q2", {"Z"}, CandidateSource::doc2vec);
  {
    std::ofstream out = open_output(dir.file("cand.tsv"));
    append_candidates(out, a);
    append_candidates(out, b);
  }
  auto lists = load_candidates(dir.file("cand.tsv"));
  REQUIRE(lists.size() == 2);
  REQUIRE(lists[0].query == "q1");
  REQUIRE(entities_of(lists[0]) == entities_of(a));
  REQUIRE(lists[0].items[1].score == a.items[1].score);
  REQUIRE(lists[1].items[0].source == CandidateSource::doc2vec);
}
