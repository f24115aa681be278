#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "termforge/corpus.hpp"
#include "termforge/smt.hpp"

namespace termforge {

/// Sparse bag-of-words vector with L2-normalized term-frequency weights.
class VocabVector {
 public:
  VocabVector() = default;
  static VocabVector from_tokens(const Tokens& tokens);
  static VocabVector from_sentences(const std::vector<Tokens>& sentences);
  /// Raw non-negative weights; normalized on construction.
  static VocabVector from_counts(const std::map<std::string, double>& counts);

  const std::map<std::string, double>& weights() const { return weights_; }
  bool empty() const { return weights_.empty(); }

 private:
  std::map<std::string, double> weights_;
};

/// Cosine similarity in [0, 1]; 0 when either vector is empty.
double cosine_score(const VocabVector& x, const VocabVector& y);

enum class RankingMode { Uniform, Cosine };

RankingMode parse_ranking_mode(std::string_view name);

/// Uniform sets every candidate score to 1.0. Cosine scores each candidate by
/// the similarity of its abstract to `domain` (0 without an abstract).
Lexicon rank_candidates(const VocabVector& domain, const Lexicon& lexicon, RankingMode mode,
                        const Normalization& norm = {});

/// Left-to-right longest match of lexicon source terms; every match becomes a
/// span carrying all candidates (score, or 1.0 when unscored) in `mode`.
AnnotatedInput annotate(const Tokens& source, const Lexicon& lexicon, InjectionMode mode);

}  // namespace termforge
