#include "termforge/inject.hpp"

#include <algorithm>
#include <cmath>

#include "termforge/error.hpp"

namespace termforge {

VocabVector VocabVector::from_counts(const std::map<std::string, double>& counts) {
  double sq = 0.0;
  for (const auto& [t, w] : counts) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("vocabulary weights must be finite and non-negative");
    sq += w * w;
  }
  VocabVector v;
  if (sq == 0.0) return v;
  double norm = std::sqrt(sq);
  for (const auto& [t, w] : counts) {
    if (w > 0.0) v.weights_.emplace(t, w / norm);
  }
  return v;
}

VocabVector VocabVector::from_tokens(const Tokens& tokens) {
  std::map<std::string, double> counts;
  for (const auto& t : tokens) counts[t] += 1.0;
  return from_counts(counts);
}

VocabVector VocabVector::from_sentences(const std::vector<Tokens>& sentences) {
  std::map<std::string, double> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s) counts[t] += 1.0;
  }
  return from_counts(counts);
}

double cosine_score(const VocabVector& x, const VocabVector& y) {
  if (x.empty() || y.empty()) return 0.0;
  const auto& a = x.weights();
  const auto& b = y.weights();
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, w] : a) na += w * w;
  for (const auto& [t, w] : b) nb += w * w;
  for (const auto& [t, w] : small) {
    auto it = large.find(t);
    if (it != large.end()) dot += w * it->second;
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

RankingMode parse_ranking_mode(std::string_view name) {
  if (name == "uniform") return RankingMode::Uniform;
  if (name == "cosine") return RankingMode::Cosine;
  throw ValidationError("unknown ranking mode '" + std::string(name) + "'");
}

Lexicon rank_candidates(const VocabVector& domain, const Lexicon& lexicon, RankingMode mode,
                        const Normalization& norm) {
  Lexicon out = lexicon;
  for (auto& entry : out.entries()) {
    for (auto& c : entry.candidates) {
      if (mode == RankingMode::Uniform) {
        c.score = 1.0;
      } else {
        c.score = c.abstract ? cosine_score(domain, VocabVector::from_tokens(tokenize(*c.abstract, norm))) : 0.0;
      }
    }
  }
  return out;
}

AnnotatedInput annotate(const Tokens& source, const Lexicon& lexicon, InjectionMode mode) {
  AnnotatedInput out;
  out.tokens = source;
  const std::size_t max_len = lexicon.max_source_length();
  for (std::size_t i = 0; i < source.size();) {
    const LexiconEntry* match = nullptr;
    std::size_t len = std::min(max_len, source.size() - i);
    for (; len > 0; --len) {
      Tokens span(source.begin() + static_cast<std::ptrdiff_t>(i),
                  source.begin() + static_cast<std::ptrdiff_t>(i + len));
      match = lexicon.find(span);
      if (match) break;
    }
    if (!match) {
      ++i;
      continue;
    }
    ConstraintSpan span;
    span.start = i;
    span.end = i + len;
    span.mode = mode;
    for (const auto& c : match->candidates) span.candidates.push_back({c.tokens, c.score.value_or(1.0)});
    out.spans.push_back(std::move(span));
    i += len;
  }
  return out;
}

}  // namespace termforge
