#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "termforge/corpus.hpp"

namespace termforge {

using WordFrequencies = std::map<std::string, std::uint64_t>;

/// Byte-pair-encoding merge list. Words start as UTF-8 characters and merges
/// are applied by rank; merges never cross word boundaries.
class BpeModel {
 public:
  static constexpr std::string_view kDefaultMarker = "@@";

  using Merge = std::pair<std::string, std::string>;

  BpeModel() = default;
  explicit BpeModel(std::vector<Merge> merges, std::string marker = std::string(kDefaultMarker));

  const std::vector<Merge>& merges() const { return merges_; }
  std::size_t num_merges() const { return merges_.size(); }
  const std::string& marker() const { return marker_; }

  /// Rank of a pair, or -1 when the pair is not a merge.
  std::ptrdiff_t rank(const std::string& left, const std::string& right) const;

  /// Segments one word; non-final pieces carry the continuation marker.
  std::vector<std::string> segment(std::string_view word) const;

 private:
  std::vector<Merge> merges_;
  std::string marker_ = std::string(kDefaultMarker);
  std::unordered_map<std::string, std::size_t> ranks_;
};

/// Splits into UTF-8 code points (invalid bytes become single-byte symbols).
std::vector<std::string> utf8_chars(std::string_view word);

WordFrequencies word_frequencies(const std::vector<Tokens>& sentences);

/// Tie-break order for equally frequent pairs: bytewise on (left, right).
bool bpe_pair_less(const BpeModel::Merge& a, const BpeModel::Merge& b);

/// Learns up to `num_merges` merges; each is the most frequent adjacent pair
/// at the time, ties broken by bpe_pair_less. Stops early once no pair is left.
/// Throws EmptyCorpusError on an empty vocabulary.
BpeModel learn_bpe(const WordFrequencies& words, std::size_t num_merges);
BpeModel learn_bpe(const std::vector<Tokens>& sentences, std::size_t num_merges);

Tokens apply_bpe(const BpeModel& model, const Tokens& tokens);

/// Joins marker-suffixed pieces with their successors. Throws FormatError when
/// the sequence ends with a continuation piece.
Tokens decode_bpe(const Tokens& subwords, std::string_view marker = BpeModel::kDefaultMarker);

std::string format_bpe(const BpeModel& model);
BpeModel parse_bpe(std::string_view text);
BpeModel load_bpe(const std::filesystem::path& path);

}  // namespace termforge
