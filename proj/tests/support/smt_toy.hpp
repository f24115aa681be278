#pragma once

#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "termforge/lm.hpp"
#include "termforge/smt.hpp"

namespace termforge::testing {

/// Random phrase table over source words s0..s{n-1} and target words
/// t0..t{m-1}. Every source word has at least one single-word option; longer
/// source n-grams get options with probability `phrase_rate`. When
/// `injection_shaped` is set every feature vector has the (p, 1, p, p) shape
/// used for injected candidates.
struct ToyOptions {
  int source_words = 6;
  int target_words = 8;
  double phrase_rate = 0.3;
  std::size_t max_phrase = 3;
  bool injection_shaped = false;
};

inline std::string sw(int i) { return "s" + std::to_string(i); }
inline std::string tw(int i) { return "t" + std::to_string(i); }

inline PhraseOption random_option(std::mt19937_64& rng, const ToyOptions& o, std::size_t src_len) {
  std::uniform_int_distribution<int> word(0, o.target_words - 1);
  std::uniform_int_distribution<std::size_t> len(1, src_len + 1);
  std::uniform_real_distribution<double> prob(0.05, 1.0);
  PhraseOption opt;
  std::size_t n = len(rng);
  for (std::size_t k = 0; k < n; ++k) opt.target.push_back(tw(word(rng)));
  if (o.injection_shaped) {
    double p = prob(rng);
    opt.features = {p, 1.0, p, p};
  } else {
    opt.features = {prob(rng), prob(rng), prob(rng), prob(rng)};
  }
  return opt;
}

inline PhraseTable random_table(std::mt19937_64& rng, const ToyOptions& o) {
  PhraseTable table;
  std::uniform_int_distribution<int> count(1, 3);
  std::bernoulli_distribution has_phrase(o.phrase_rate);
  auto add_options = [&](const Tokens& src) {
    std::vector<Tokens> seen;
    int c = count(rng);
    for (int k = 0; k < c; ++k) {
      auto opt = random_option(rng, o, src.size());
      bool dup = false;
      for (const auto& t : seen) dup = dup || t == opt.target;
      if (dup) continue;
      seen.push_back(opt.target);
      table.add(src, opt);
    }
  };
  for (int i = 0; i < o.source_words; ++i) add_options({sw(i)});
  for (int i = 0; i < o.source_words; ++i) {
    for (int j = 0; j < o.source_words; ++j) {
      if (has_phrase(rng)) add_options({sw(i), sw(j)});
      if (o.max_phrase >= 3 && has_phrase(rng) && has_phrase(rng)) add_options({sw(i), sw(j), sw((i + j) % o.source_words)});
    }
  }
  return table;
}

inline NgramLanguageModel random_lm(std::mt19937_64& rng, const ToyOptions& o, int order = 3) {
  std::uniform_int_distribution<int> word(0, o.target_words - 1), len(1, 6);
  std::vector<Tokens> sentences;
  for (int s = 0; s < 60; ++s) {
    Tokens t;
    int n = len(rng);
    for (int k = 0; k < n; ++k) t.push_back(tw(word(rng)));
    sentences.push_back(t);
  }
  return train_lm(sentences, order);
}

inline Tokens random_source(std::mt19937_64& rng, const ToyOptions& o, std::size_t min_len, std::size_t max_len) {
  std::uniform_int_distribution<int> word(0, o.source_words - 1);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  Tokens s;
  std::size_t n = len(rng);
  for (std::size_t k = 0; k < n; ++k) s.push_back(sw(word(rng)));
  return s;
}

/// Best model score of each distinct target over every segmentation of
/// `source` into phrase-table entries and every phrase order whose jumps stay
/// within `limit` (negative means unlimited). Requires single-word entries for
/// every source word.
inline std::map<Tokens, double> brute_force_all(const Tokens& source, const PhraseTable& table, const NgramLanguageModel& lm,
                               const LogLinearWeights& w, int limit) {
  const std::size_t n = source.size();
  struct Choice {
    std::size_t start, end;
    const PhraseOption* option;
  };
  std::vector<Choice> choices;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) {
      Tokens src(source.begin() + static_cast<std::ptrdiff_t>(i), source.begin() + static_cast<std::ptrdiff_t>(j));
      if (const auto* opts = table.find(src)) {
        for (const auto& o : *opts) choices.push_back({i, j, &o});
      }
    }
  }
  std::map<Tokens, double> best;
  std::vector<bool> covered(n, false);
  std::vector<const Choice*> path;
  auto score_path = [&] {
    FeatureVector f{};
    Tokens target;
    std::size_t last_end = 0;
    for (const auto* c : path) {
      for (std::size_t k = 0; k < 4; ++k) f[k] += std::log(std::max(c->option->features[k], PhraseTable::kFloor));
      f[kWordPenalty] += static_cast<double>(c->option->target.size());
      f[kDistortion] -= std::abs(static_cast<double>(c->start) - static_cast<double>(last_end));
      last_end = c->end;
      target.insert(target.end(), c->option->target.begin(), c->option->target.end());
    }
    f[kLanguageModel] = lm.score(target);
    auto [it, fresh] = best.emplace(target, w.score(f));
    if (!fresh) it->second = std::max(it->second, w.score(f));
  };
  auto recurse = [&](auto&& self, std::size_t done, std::size_t last_end) -> void {
    if (done == n) {
      score_path();
      return;
    }
    for (const auto& c : choices) {
      bool free = true;
      for (std::size_t k = c.start; k < c.end && free; ++k) free = !covered[k];
      if (!free) continue;
      long jump = static_cast<long>(c.start) - static_cast<long>(last_end);
      if (limit >= 0 && std::labs(jump) > limit) continue;
      for (std::size_t k = c.start; k < c.end; ++k) covered[k] = true;
      path.push_back(&c);
      self(self, done + (c.end - c.start), c.end);
      path.pop_back();
      for (std::size_t k = c.start; k < c.end; ++k) covered[k] = false;
    }
  };
  recurse(recurse, 0, 0);
  return best;
}

inline double brute_force_best(const Tokens& source, const PhraseTable& table, const NgramLanguageModel& lm,
                               const LogLinearWeights& w, int limit) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [target, score] : brute_force_all(source, table, lm, w, limit)) best = std::max(best, score);
  return best;
}

}  // namespace termforge::testing
