#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lgrec/common.hpp"

namespace lgrec {

constexpr uint32_t kNoEntity = std::numeric_limits<uint32_t>::max();

// Interns entity symbols to dense indices 0..size()-1, in first-seen order.
class EntityTable {
 public:
  uint32_t intern(std::string_view symbol) {
    auto it = index_.find(symbol);
    if (it != index_.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(symbols_.size());
    symbols_.emplace_back(symbol);
    index_.emplace(symbols_.back(), id);
    return id;
  }

  // kNoEntity when absent.
  uint32_t find(std::string_view symbol) const {
    auto it = index_.find(symbol);
    return it == index_.end() ? kNoEntity : it->second;
  }

  bool contains(std::string_view symbol) const { return find(symbol) != kNoEntity; }

  const std::string& symbol(uint32_t id) const {
    if (id >= symbols_.size()) throw Error("entity index out of range: " + std::to_string(id));
    return symbols_[id];
  }

  uint32_t size() const { return static_cast<uint32_t>(symbols_.size()); }
  bool empty() const { return symbols_.empty(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  EntityTable() = default;
  EntityTable(const EntityTable& other) : symbols_(other.symbols_) { reindex(); }
  EntityTable& operator=(const EntityTable& other) {
    if (this != &other) {
      symbols_ = other.symbols_;
      reindex();
    }
    return *this;
  }
  EntityTable(EntityTable&&) = default;
  EntityTable& operator=(EntityTable&&) = default;

 private:
  void reindex() {
    index_.clear();
    index_.reserve(symbols_.size());
    for (uint32_t i = 0; i < symbols_.size(); ++i) index_.emplace(symbols_[i], i);
  }

  struct StringHash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  struct StringEq {
    using is_transparent = void;
    bool operator()(std::string_view a, std::string_view b) const { return a == b; }
  };

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, uint32_t, StringHash, StringEq> index_;
};

}  // namespace lgrec
