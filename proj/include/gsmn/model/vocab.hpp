#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "gsmn/world.hpp"

namespace gsmn::model {

// Token table derived deterministically from the landmark pool: special
// tokens, template words, side words, then noun phrases in pool order.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  static Vocab build(const world::LandmarkPool& pool) {
    Vocab v;
    v.add("<pad>");
    v.add("<unk>");
    for (const char* w : {"go", "to", "the", "side", "of"}) v.add(w);
    for (auto s : {world::Side::left, world::Side::right, world::Side::front, world::Side::back})
      v.add(world::side_name(s));
    for (const std::string& p : pool.phrases) v.add(p);
    return v;
  }

  int size() const { return int(tokens_.size()); }

  int id(const std::string& tok) const {
    auto it = index_.find(tok);
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const { return tokens_[size_t(id)]; }

  std::vector<int> encode(const std::vector<std::string>& words) const {
    std::vector<int> ids;
    ids.reserve(words.size());
    for (const std::string& w : words) ids.push_back(id(w));
    if (ids.empty()) ids.push_back(kPad);  // defined embedding for empty input
    return ids;
  }

 private:
  void add(const std::string& tok) {
    index_.emplace(tok, int(tokens_.size()));
    tokens_.push_back(tok);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace gsmn::model
