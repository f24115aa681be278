#include <gtest/gtest.h>

#include "termforge/eval.hpp"
#include "termforge/smt.hpp"

namespace termforge {
namespace {

// Each source word has a right and a wrong target with equal phrase scores;
// only the language model can tell them apart.
struct Ambiguous {
  PhraseTable table;
  NgramLanguageModel lm;
  ParallelCorpus dev;
};

Ambiguous ambiguous() {
  Ambiguous a;
  const std::vector<std::pair<std::string, std::string>> words = {{"a", "alpha"}, {"b", "beta"}, {"c", "gamma"},
                                                                   {"d", "delta"}};
  for (const auto& [src, tgt] : words) {
    a.table.add({src}, {{tgt}, {0.5, 0.5, 0.5, 0.5}});
    a.table.add({src}, {{tgt + "x"}, {0.5, 0.5, 0.5, 0.5}});
  }
  std::vector<Tokens> lm_text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = 0; j < words.size(); ++j) {
      Tokens src{words[i].first, words[j].first};
      Tokens tgt{words[i].second, words[j].second};
      lm_text.push_back(tgt);
      if ((i + j) % 3 == 0) a.dev.pairs.push_back({src, tgt});
    }
  }
  a.lm = train_lm(lm_text, 2);
  return a;
}

TEST(Mert, PerfectStartIsAFixedPoint) {
  auto a = ambiguous();
  auto init = LogLinearWeights::defaults();
  auto r = mert_tune(a.dev, a.table, a.lm, init);
  EXPECT_DOUBLE_EQ(r.initial_bleu, 100.0);
  EXPECT_DOUBLE_EQ(r.tuned_bleu, 100.0);
  EXPECT_EQ(r.weights.values, init.values);
}

TEST(Mert, RecoversFromNegatedLmWeight) {
  auto a = ambiguous();
  auto init = LogLinearWeights::defaults();
  init.values[kLanguageModel] = -0.5;
  MertConfig cfg;
  cfg.nbest = 20;
  auto r = mert_tune(a.dev, a.table, a.lm, init, cfg);
  EXPECT_LT(r.initial_bleu, 50.0);
  EXPECT_DOUBLE_EQ(r.tuned_bleu, 100.0);
  EXPECT_GT(r.weights.values[kLanguageModel], 0.0);
  std::vector<Tokens> hyps;
  for (const auto& p : a.dev.pairs) hyps.push_back(decode(plain_input(p.source), a.table, a.lm, r.weights).target);
  EXPECT_DOUBLE_EQ(bleu(hyps, a.dev.targets()), r.tuned_bleu);
}

TEST(Mert, NeverWorseThanStart) {
  auto a = ambiguous();
  for (double lm_weight : {-1.0, -0.1, 0.0, 0.05}) {
    auto init = LogLinearWeights::defaults();
    init.values[kLanguageModel] = lm_weight;
    MertConfig cfg;
    cfg.nbest = 5;
    cfg.restarts = 0;
    cfg.max_iterations = 1;
    auto r = mert_tune(a.dev, a.table, a.lm, init, cfg);
    EXPECT_GE(r.tuned_bleu, r.initial_bleu);
  }
}

TEST(Mert, Deterministic) {
  auto a = ambiguous();
  auto init = LogLinearWeights::defaults();
  init.values[kLanguageModel] = -0.3;
  MertConfig cfg;
  cfg.seed = 7;
  auto r1 = mert_tune(a.dev, a.table, a.lm, init, cfg);
  auto r2 = mert_tune(a.dev, a.table, a.lm, init, cfg);
  EXPECT_EQ(r1.weights.values, r2.weights.values);
  EXPECT_EQ(r1.tuned_bleu, r2.tuned_bleu);
}

}  // namespace
}  // namespace termforge
