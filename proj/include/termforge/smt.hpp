#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "termforge/align.hpp"
#include "termforge/corpus.hpp"
#include "termforge/lm.hpp"

namespace termforge {

/// How externally supplied translations interact with the phrase table.
enum class InjectionMode {
  /// Only the supplied candidates may translate the span.
  Exclusive,
  /// Candidates compete with the phrase-table options.
  Inclusive,
  /// Candidates compete with phrase-table options whose target contains a candidate.
  Constraint,
};

std::string_view to_string(InjectionMode mode);
InjectionMode parse_injection_mode(std::string_view name);

struct SpanCandidate {
  Tokens target;
  double prob = 1.0;
};

struct ConstraintSpan {
  /// Half-open token range [start, end).
  std::size_t start = 0;
  std::size_t end = 0;
  std::vector<SpanCandidate> candidates;
  InjectionMode mode = InjectionMode::Exclusive;
};

struct AnnotatedInput {
  Tokens tokens;
  std::vector<ConstraintSpan> spans;

  /// Throws ValidationError unless spans are in bounds, ordered, disjoint and
  /// each has at least one candidate with probability in [0, 1].
  void validate() const;
};

enum Feature : std::size_t {
  kPhiTargetGivenSource,
  kPhiSourceGivenTarget,
  kLexTargetGivenSource,
  kLexSourceGivenTarget,
  kLanguageModel,
  kWordPenalty,
  kDistortion,
  kNumFeatures,
};

using FeatureVector = std::array<double, kNumFeatures>;

/// Weights of the log-linear model. Phrase and LM features are natural-log
/// values, the word-penalty feature is the output length, and the distortion
/// feature is minus the summed jump width.
struct LogLinearWeights {
  FeatureVector values{};

  static const std::array<std::string_view, kNumFeatures>& names();
  static LogLinearWeights defaults();

  double score(const FeatureVector& features) const;
  bool finite() const;
};

std::string format_weights(const LogLinearWeights& weights);
LogLinearWeights parse_weights(std::string_view text);
LogLinearWeights load_weights(const std::filesystem::path& path);

struct BeamConfig {
  std::size_t stack_size = 100;
  /// Maximum jump width; negative means unlimited.
  int distortion_limit = 6;
};

struct PhraseStep {
  std::size_t start = 0;
  std::size_t end = 0;
  Tokens target;
  FeatureVector features{};
};

struct DecodeResult {
  Tokens target;
  double score = 0.0;
  FeatureVector features{};
  /// Phrases in output order; their source spans partition the input.
  std::vector<PhraseStep> trace;
};

/// Stack decoding with coverage stacks, hypothesis recombination, histogram
/// pruning and a distortion limit. Source words without any translation
/// option are copied through.
DecodeResult decode(const AnnotatedInput& input, const PhraseTable& table, const NgramLanguageModel& lm,
                    const LogLinearWeights& weights, const BeamConfig& beam = {});

/// Up to `n` distinct translations from the final stack, best first.
std::vector<DecodeResult> decode_nbest(const AnnotatedInput& input, const PhraseTable& table,
                                       const NgramLanguageModel& lm, const LogLinearWeights& weights,
                                       const BeamConfig& beam, std::size_t n);

AnnotatedInput plain_input(const Tokens& tokens);

/// Serialises spans as <n translation="a||b" prob="p1 || p2">span</n>.
std::string format_markup(const AnnotatedInput& input);

/// Parses a marked-up source line; every span gets `mode`. Accepts "||" with
/// or without surrounding spaces, any tag name, and a missing prob attribute
/// (all candidates 1.0).
AnnotatedInput parse_markup(std::string_view line, InjectionMode mode, const Normalization& norm = {});

struct MertConfig {
  std::size_t nbest = 100;
  std::size_t restarts = 3;
  std::size_t max_iterations = 5;
  std::uint64_t seed = 42;
  BeamConfig beam;
};

struct MertResult {
  LogLinearWeights weights;
  double initial_bleu = 0.0;
  double tuned_bleu = 0.0;
  std::size_t iterations = 0;
};

/// Minimum-error-rate tuning: repeated n-best generation and per-dimension
/// exact line search on corpus BLEU, with random restarts. Never returns
/// weights that decode the dev set worse than `init`.
MertResult mert_tune(const ParallelCorpus& dev, const PhraseTable& table, const NgramLanguageModel& lm,
                     const LogLinearWeights& init, const MertConfig& config = {});

}  // namespace termforge
