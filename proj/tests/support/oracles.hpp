#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "termforge/bpe.hpp"
#include "termforge/corpus.hpp"

namespace termforge::testing {

/// Most frequent adjacent symbol pair of the initial character segmentation,
/// counted by brute force; ties resolved with the same ordering as learn_bpe.
inline BpeModel::Merge brute_force_first_merge(const WordFrequencies& words) {
  std::map<BpeModel::Merge, std::uint64_t> counts;
  for (const auto& [word, freq] : words) {
    auto symbols = utf8_chars(word);
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) counts[{symbols[i], symbols[i + 1]}] += freq;
  }
  BpeModel::Merge best;
  std::uint64_t best_count = 0;
  for (const auto& [pair, c] : counts) {
    if (c > best_count || (c == best_count && bpe_pair_less(pair, best))) {
      best = pair;
      best_count = c;
    }
  }
  return best;
}

/// Character n-gram precision and recall of one segment pair (whitespace
/// already removed), averaged over orders present on either side, by
/// enumerating every substring.
inline std::pair<double, double> char_ngram_pr(const std::string& hyp, const std::string& ref, int max_n = 6) {
  double p = 0, r = 0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    std::map<std::string, int> h, f;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) ++h[hyp.substr(i, n)];
    for (std::size_t i = 0; i + n <= ref.size(); ++i) ++f[ref.substr(i, n)];
    if (h.empty() && f.empty()) continue;
    int hits = 0, ht = 0, ft = 0;
    for (auto& [g, c] : h) {
      ht += c;
      auto it = f.find(g);
      hits += std::min(c, it == f.end() ? 0 : it->second);
    }
    for (auto& [g, c] : f) ft += c;
    p += ht ? double(hits) / ht : 0.0;
    r += ft ? double(hits) / ft : 0.0;
    ++orders;
  }
  return {p / orders, r / orders};
}

/// chrF-beta of one segment pair on [0, 100] from char_ngram_pr.
inline double chrf_oracle(const std::string& hyp, const std::string& ref, double beta = 3.0) {
  auto [p, r] = char_ngram_pr(hyp, ref);
  if (p + r == 0.0) return 0.0;
  double b2 = beta * beta;
  return 100.0 * (1 + b2) * p * r / (b2 * p + r);
}

/// Reference unk replacement: argmax attention by linear scan (first maximum),
/// best-scored lexicon candidate by linear scan (first maximum, spliced in
/// token by token), else the source token.
inline Tokens replace_unk_oracle(const Tokens& output, const Eigen::MatrixXd& attention, const Tokens& source,
                                 const Lexicon& lexicon) {
  Tokens out;
  for (std::size_t j = 0; j < output.size(); ++j) {
    if (output[j] != "<unk>") {
      out.push_back(output[j]);
      continue;
    }
    auto row = static_cast<Eigen::Index>(j);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < source.size(); ++i) {
      if (attention(row, static_cast<Eigen::Index>(i)) > attention(row, static_cast<Eigen::Index>(peak))) peak = i;
    }
    const TermCandidate* best = nullptr;
    for (const auto& e : lexicon.entries()) {
      if (e.source != Tokens{source[peak]}) continue;
      for (const auto& c : e.candidates) {
        if (!best || c.score.value_or(0.0) > best->score.value_or(0.0)) best = &c;
      }
    }
    if (best) {
      out.insert(out.end(), best->tokens.begin(), best->tokens.end());
    } else {
      out.push_back(source[peak]);
    }
  }
  return out;
}

}  // namespace termforge::testing
