#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace termforge {

using Tokens = std::vector<std::string>;

struct Normalization {
  bool lowercase = true;
};

/// Splits on whitespace and detaches leading/trailing punctuation characters
/// as single-character tokens. Lowercases ASCII and Latin-1 letters when
/// requested; other scripts pass through unchanged.
Tokens tokenize(std::string_view line, const Normalization& norm = {});

std::string lowercase(std::string_view text);

struct SentencePair {
  Tokens source;
  Tokens target;
};

struct ParallelCorpus {
  std::string name;
  std::vector<SentencePair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  std::vector<Tokens> sources() const;
  std::vector<Tokens> targets() const;
  /// Same corpus with source and target swapped.
  ParallelCorpus inverted() const;
};

/// Throws AlignmentError on unequal line counts, EmptyCorpusError when both
/// files are empty.
ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path,
                             const Normalization& norm = {},
                             std::string name = {});

/// One sentence per line, tokens joined by single spaces.
std::string format_side(const std::vector<Tokens>& side);

struct TermCandidate {
  Tokens tokens;
  std::optional<double> score;
  std::optional<std::string> abstract;
};

struct LexiconEntry {
  Tokens source;
  std::vector<TermCandidate> candidates;

  /// Candidate with the highest score (unscored counts as 0); ties keep file order.
  const TermCandidate& best() const;
};

class Lexicon {
 public:
  /// Appends a candidate, merging into an existing entry with the same source term.
  void add(const Tokens& source, TermCandidate candidate);

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  /// Mutable access for rescoring; source terms must not be changed.
  std::vector<LexiconEntry>& entries() { return entries_; }
  const LexiconEntry* find(const Tokens& source) const;
  std::size_t max_source_length() const;
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// TSV: source<TAB>target[<TAB>score][<TAB>abstract]; '#' lines and blank lines
/// are skipped. An empty score field means "no score".
Lexicon parse_lexicon(std::string_view text, const Normalization& norm = {});
Lexicon load_lexicon(const std::filesystem::path& path, const Normalization& norm = {});
std::string format_lexicon(const Lexicon& lexicon);

struct SideCounts {
  std::size_t source = 0;
  std::size_t target = 0;
};

struct CorpusStats {
  std::size_t line_count = 0;
  SideCounts words;
  SideCounts vocab;
};

CorpusStats corpus_stats(const ParallelCorpus& corpus);

struct OverlapCounts {
  std::size_t in_corpus = 0;
  std::size_t oov = 0;

  std::size_t total() const { return in_corpus + oov; }
  double coverage_percent() const {
    return total() ? 100.0 * static_cast<double>(in_corpus) / static_cast<double>(total()) : 0.0;
  }
};

struct SideOverlap {
  OverlapCounts words;
  OverlapCounts terms;
};

struct OverlapReport {
  SideOverlap source;
  SideOverlap target;
  /// Distinct (source term, target term) pairs found together in one reference pair.
  OverlapCounts joint_terms;
};

enum class TermMatch {
  /// Term occurs as a contiguous token run inside a reference sentence.
  Contiguous,
  /// Term equals a whole reference line (lexicon/entry lists).
  ExactEntry,
};

/// Word- and term-level overlap of `eval_set` against `reference`. Each line of
/// the evaluation set is one term.
OverlapReport overlap_report(const ParallelCorpus& eval_set, const ParallelCorpus& reference,
                             TermMatch mode = TermMatch::Contiguous);

using Vocabulary = std::unordered_set<std::string>;

/// Share of distinct evaluation words present in a fixed vocabulary per side
/// (e.g. a neural model's vocabulary).
std::pair<OverlapCounts, OverlapCounts> vocabulary_coverage(const ParallelCorpus& eval_set,
                                                            const Vocabulary& source_vocab,
                                                            const Vocabulary& target_vocab);

std::string format_stats(const std::string& name, const CorpusStats& stats);
std::string format_overlap(const std::string& name, const OverlapReport& report);

}  // namespace termforge
