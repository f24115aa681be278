#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "termforge/corpus.hpp"

namespace termforge {

using WordId = std::uint32_t;

/// Backoff n-gram model with interpolated Kneser-Ney estimates, stored in ARPA
/// form: every listed n-gram carries its full (interpolated) log-probability and
/// a backoff weight for use as a context. Log values are natural logs.
class NgramLanguageModel {
 public:
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kEos = "</s>";
  static constexpr std::string_view kUnk = "<unk>";

  struct Entry {
    double log_prob = 0.0;
    double log_backoff = 0.0;
  };

  /// Decoder state: the last (order - 1) word ids, oldest first.
  using State = std::vector<WordId>;

  explicit NgramLanguageModel(int order = 5);

  int order() const { return order_; }
  WordId bos() const { return bos_; }
  WordId eos() const { return eos_; }
  WordId unk() const { return unk_; }

  /// Id of a token, or unk() when unknown.
  WordId id(std::string_view token) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  std::size_t vocab_size() const { return words_.size(); }
  /// Every id that can be predicted (all words except <s>).
  std::vector<WordId> predictable() const;

  /// log P(word | context) with backoff; context is oldest-first and may be
  /// longer than order-1 (extra history is ignored).
  double log_prob(const std::vector<WordId>& context, WordId word) const;

  State begin_state() const;
  /// Scores `word` after `state` and returns the successor state.
  double advance(const State& state, WordId word, State& next) const;

  /// Sum of per-token conditional log-probabilities including </s>.
  double score(const Tokens& tokens) const;

  std::size_t ngram_count(int n) const { return tables_.at(static_cast<std::size_t>(n - 1)).size(); }
  const Entry* find(const std::vector<WordId>& ngram) const;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& table : tables_) {
      for (const auto& [gram, entry] : table) fn(gram, entry);
    }
  }

  // Construction helpers used by training and ARPA loading.
  WordId intern(std::string_view token);
  void set(const std::vector<WordId>& ngram, Entry entry);

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<WordId>& k) const noexcept;
  };
  using Table = std::unordered_map<std::vector<WordId>, Entry, KeyHash>;

  int order_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  std::vector<Table> tables_;
  WordId bos_, eos_, unk_;
};

/// Interpolated Kneser-Ney, one discount per order from count-of-counts.
/// Sentences shorter than the order simply contribute lower-order n-grams.
/// Throws EmptyCorpusError when no sentence is given; order must be >= 1.
NgramLanguageModel train_lm(const std::vector<Tokens>& sentences, int order = 5);

std::string format_arpa(const NgramLanguageModel& lm);
NgramLanguageModel parse_arpa(std::string_view text);
NgramLanguageModel load_arpa(const std::filesystem::path& path);

}  // namespace termforge
