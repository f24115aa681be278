#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "termforge/error.hpp"
#include "termforge/lm.hpp"
#include "termforge/synthetic.hpp"

namespace termforge {
namespace {

TEST(Lm, SymmetricContinuations) {
  auto lm = train_lm({{"a", "b"}, {"a", "c"}}, 2);
  auto a = lm.id("a");
  EXPECT_NEAR(lm.log_prob({a}, lm.id("b")), lm.log_prob({a}, lm.id("c")), 1e-12);
}

TEST(Lm, ConditionalDistributionsSumToOne) {
  auto fx = synthetic::two_domains(2);
  auto lm = train_lm(fx.generic.targets(), 3);
  auto predictable = lm.predictable();
  std::vector<std::vector<WordId>> contexts = {{lm.bos()}, {lm.bos(), lm.id("von")}, {lm.unk()}};
  for (const auto& p : fx.generic.pairs) {
    if (p.target.size() >= 2) contexts.push_back({lm.id(p.target[0]), lm.id(p.target[1])});
    if (contexts.size() > 40) break;
  }
  for (const auto& ctx : contexts) {
    double total = 0.0;
    for (auto w : predictable) total += std::exp(lm.log_prob(ctx, w));
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Lm, SingleSentence) {
  auto lm = train_lm({{"a"}}, 3);
  double pa = lm.log_prob({lm.bos()}, lm.id("a"));
  for (auto w : lm.predictable()) EXPECT_LE(lm.log_prob({lm.bos()}, w), pa);
}

TEST(Lm, EmptySequenceScoresEndOfSentence) {
  auto lm = train_lm({{"a", "b"}, {"b"}}, 3);
  EXPECT_DOUBLE_EQ(lm.score({}), lm.log_prob({lm.bos()}, lm.eos()));
}

TEST(Lm, SeenOrderBeatsPermutation) {
  auto fx = synthetic::two_domains(4);
  auto lm = train_lm(fx.generic.targets(), 3);
  std::mt19937_64 rng(1);
  double seen = 0.0, shuffled = 0.0;
  int n = 0;
  for (const auto& p : fx.generic.pairs) {
    if (p.target.size() < 3) continue;
    Tokens perm = p.target;
    do std::shuffle(perm.begin(), perm.end(), rng);
    while (perm == p.target);
    seen += lm.score(p.target);
    shuffled += lm.score(perm);
    if (++n == 100) break;
  }
  EXPECT_GT(seen / n, shuffled / n);
}

TEST(Lm, AlwaysFinite) {
  auto lm = train_lm({{"a", "b", "c"}}, 3);
  EXPECT_TRUE(std::isfinite(lm.score({"zzz", "qqq", "a"})));
  EXPECT_TRUE(std::isfinite(lm.score({})));
}

TEST(Lm, EmptyCorpus) { EXPECT_THROW(train_lm({}, 3), EmptyCorpusError); }

TEST(Lm, ArpaRoundTrip) {
  auto fx = synthetic::two_domains(6);
  auto lm = train_lm(fx.generic.targets(), 3);
  auto again = parse_arpa(format_arpa(lm));
  ASSERT_EQ(again.order(), lm.order());
  for (int n = 1; n <= 3; ++n) EXPECT_EQ(again.ngram_count(n), lm.ngram_count(n));
  for (const auto& p : fx.dev_a.pairs) EXPECT_NEAR(again.score(p.target), lm.score(p.target), 1e-9);
  EXPECT_EQ(format_arpa(again), format_arpa(lm));
}

TEST(Lm, ArpaRejectsGarbage) { EXPECT_THROW(parse_arpa("hello\n"), ParseError); }

}  // namespace
}  // namespace termforge
