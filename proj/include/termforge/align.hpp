#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "termforge/corpus.hpp"

namespace termforge {

/// Lexical translation probabilities t(target | source) from IBM Model 1.
/// The empty-word source is spelled kNull.
class TranslationTable {
 public:
  static constexpr std::string_view kNull = "NULL";

  double prob(const std::string& target, const std::string& source) const;
  void set(const std::string& target, const std::string& source, double p);

  /// Sources with at least one entry, and their target distributions.
  const std::map<std::string, std::map<std::string, double>>& by_source() const { return by_source_; }

  /// Log-likelihood of the corpus under the model (uniform alignment prior).
  double log_likelihood(const ParallelCorpus& corpus) const;

 private:
  std::map<std::string, std::map<std::string, double>> by_source_;
};

struct EmTrace {
  /// Corpus log-likelihood before the first and after every iteration.
  std::vector<double> log_likelihood;
};

/// IBM Model 1 EM over t(target | source) with a NULL source word, starting
/// from a distribution uniform over co-occurring targets.
TranslationTable ibm1_em(const ParallelCorpus& corpus, int iterations, EmTrace* trace = nullptr);

/// Alignment link (source index, target index).
using Link = std::pair<std::size_t, std::size_t>;
using Alignment = std::set<Link>;

/// Links each target position to its most probable source position; ties go to
/// the lowest source index and NULL wins only when strictly better.
Alignment viterbi_align(const TranslationTable& table, const SentencePair& pair);

enum class Symmetrization { Intersection, Union, GrowDiag };

Symmetrization parse_symmetrization(std::string_view name);

/// Combines a source-to-target alignment with a target-to-source one; the
/// backward links are expected already flipped into (source, target) order.
Alignment symmetrize(const Alignment& forward, const Alignment& backward, Symmetrization mode);

/// Forward table t(target|source), backward table t(source|target).
Alignment align_pair(const TranslationTable& forward, const TranslationTable& backward,
                     const SentencePair& pair, Symmetrization mode);

struct PhraseOption {
  Tokens target;
  /// phi(t|s), phi(s|t), lex(t|s), lex(s|t); all in (0, 1].
  std::array<double, 4> features{};
};

class PhraseTable {
 public:
  static constexpr double kFloor = 1e-9;

  void add(const Tokens& source, PhraseOption option);
  const std::vector<PhraseOption>* find(const Tokens& source) const;
  const std::map<Tokens, std::vector<PhraseOption>>& entries() const { return entries_; }
  std::size_t max_source_length() const { return max_len_; }
  std::size_t size() const;

 private:
  std::map<Tokens, std::vector<PhraseOption>> entries_;
  std::size_t max_len_ = 0;
};

/// Every phrase pair consistent with the alignment (at least one link inside,
/// none crossing the box), both sides no longer than max_phrase_len.
std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>>
consistent_phrase_spans(const Alignment& alignment, std::size_t source_len, std::size_t target_len,
                        std::size_t max_phrase_len);

/// Relative-frequency phrase features plus lexical weights from both tables.
PhraseTable extract_phrases(const ParallelCorpus& corpus, const std::vector<Alignment>& alignments,
                            std::size_t max_phrase_len, const TranslationTable& forward,
                            const TranslationTable& backward);

std::string format_phrase_table(const PhraseTable& table);
PhraseTable parse_phrase_table(std::string_view text);
PhraseTable load_phrase_table(const std::filesystem::path& path);

}  // namespace termforge
