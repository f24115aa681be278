#include "termforge/nmt/vocab.hpp"

#include <algorithm>
#include <map>

#include "termforge/error.hpp"

namespace termforge::nmt {

Vocab::Vocab() {
  for (auto t : {kUnkToken, kPadToken, kBosToken, kEosToken}) {
    ids_.emplace(std::string(t), static_cast<int>(tokens_.size()));
    tokens_.emplace_back(t);
  }
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  if (tokens.empty()) return v;
  if (tokens.size() < kReserved || !std::equal(v.tokens_.begin(), v.tokens_.end(), tokens.begin())) {
    throw ValidationError("vocabulary must start with <unk> <pad> <s> </s>");
  }
  v.tokens_.clear();
  v.ids_.clear();
  for (auto& t : tokens) {
    if (v.ids_.count(t)) throw ValidationError("duplicate vocabulary entry '" + t + "'");
    v.ids_.emplace(t, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

Vocab Vocab::build(const std::vector<Tokens>& side, std::size_t cap) {
  if (cap < kReserved) throw ValidationError("vocabulary cap must be at least 4");
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : side) {
    for (const auto& t : sentence) ++counts[t];
  }
  Vocab reserved_only;
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [t, c] : counts) {
    if (!reserved_only.contains(t)) ranked.emplace_back(t, c);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = reserved_only.tokens();
  for (const auto& [t, c] : ranked) {
    if (tokens.size() >= cap) break;
    tokens.push_back(t);
  }
  return from_tokens(std::move(tokens));
}

int Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

std::vector<int> Vocab::encode(const Tokens& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

}  // namespace termforge::nmt
