#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>

#include "termforge/corpus.hpp"

namespace termforge::synthetic {

/// Pronounceable lowercase pseudo-words, never repeating within one generator.
class WordGenerator {
 public:
  explicit WordGenerator(std::mt19937_64& rng) : rng_(rng) {}
  std::string next(int min_syllables = 2, int max_syllables = 3);

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_{"von"};
};

struct TwoDomainOptions {
  int modifiers = 6;
  int heads = 6;
  int dev_terms = 20;
  int eval_terms = 12;
  /// Copies of each two-word term in the generic corpus per style.
  int generic_analytic = 3;
  int generic_compound = 1;
  int generic_singles = 2;
};

/// Two term domains with disjoint vocabularies. Every term "mod head" exists
/// in the generic corpus both analytically ("HEAD von MOD") and as an open
/// compound ("MOD HEAD"); domain A references use the compound form, domain B
/// references the analytic form.
struct TwoDomainFixture {
  ParallelCorpus generic;
  ParallelCorpus dev_a, eval_a;
  ParallelCorpus dev_b, eval_b;
  /// Head-word lexicon for domain A: the right translation plus a decoy, each
  /// with a short abstract.
  Lexicon lexicon_a;
};

TwoDomainFixture two_domains(std::uint64_t seed, const TwoDomainOptions& options = {});

struct CompoundOptions {
  int modifiers = 4;
  int prefixes = 8;
  int suffixes = 8;
  int held_out = 16;
  int copies = 2;
  /// Copies of each single-word pair (modifiers and morphemes).
  int singles = 3;
};

/// Terms "mod PREFIXSUFFIX" whose compounds are built from shared morphemes;
/// `eval` holds compounds never seen in training.
struct CompoundFixture {
  ParallelCorpus train;
  ParallelCorpus eval;
};

CompoundFixture compounds(std::uint64_t seed, const CompoundOptions& options = {});

/// Pairs whose target equals the source, over tokens w0..w{vocab-1}.
ParallelCorpus copy_task(std::uint64_t seed, int pairs, int vocab, int min_len, int max_len);

/// Writes <name>.src / <name>.tgt for every corpus plus lexicon_a.tsv.
void write_two_domains(const TwoDomainFixture& fixture, const std::filesystem::path& dir);

}  // namespace termforge::synthetic
