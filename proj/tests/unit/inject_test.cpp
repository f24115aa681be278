#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "termforge/error.hpp"
#include "termforge/inject.hpp"

namespace termforge {
namespace {

TEST(Cosine, IdenticalVectorsScoreOne) {
  auto v = VocabVector::from_tokens({"orbit", "eye", "eye", "socket"});
  EXPECT_NEAR(cosine_score(v, v), 1.0, 1e-12);
}

TEST(Cosine, DisjointSupportsScoreZero) {
  EXPECT_EQ(cosine_score(VocabVector::from_tokens({"a", "b"}), VocabVector::from_tokens({"c"})), 0.0);
  EXPECT_EQ(cosine_score(VocabVector{}, VocabVector::from_tokens({"c"})), 0.0);
  EXPECT_EQ(cosine_score(VocabVector{}, VocabVector{}), 0.0);
}

TEST(Cosine, HandComputedDotProduct) {
  // (2, 1, 0) . (1, 0, 1) / (sqrt 5 * sqrt 2)
  auto x = VocabVector::from_counts({{"a", 2}, {"b", 1}});
  auto y = VocabVector::from_counts({{"a", 1}, {"c", 1}});
  EXPECT_NEAR(cosine_score(x, y), 2.0 / std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(x.weights().at("a"), 2.0 / std::sqrt(5.0), 1e-12);
}

std::map<std::string, double> random_counts(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> word(0, 9), size(1, 6);
  std::uniform_real_distribution<double> count(0.5, 5.0);
  std::map<std::string, double> m;
  int n = size(rng);
  for (int k = 0; k < n; ++k) m["w" + std::to_string(word(rng))] = count(rng);
  return m;
}

TEST(Cosine, SymmetricBoundedAndScaleInvariant) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    auto cx = random_counts(rng), cy = random_counts(rng);
    auto x = VocabVector::from_counts(cx), y = VocabVector::from_counts(cy);
    double s = cosine_score(x, y);
    EXPECT_NEAR(s, cosine_score(y, x), 1e-12);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0 + 1e-12);
    for (auto& [k, v] : cx) v *= 7.25;
    EXPECT_NEAR(cosine_score(VocabVector::from_counts(cx), y), s, 1e-9);
  }
}

Lexicon orbit_lexicon() {
  Lexicon lex;
  lex.add({"orbit"}, {{"orbita"}, std::nullopt,
                      std::string("the orbit is the bony cavity of the skull holding the eye and its muscles")});
  lex.add({"orbit"}, {{"umlaufbahn"}, std::nullopt,
                      std::string("an orbit is the curved path of a planet or satellite around a star")});
  lex.add({"blood"}, {{"blut"}, std::nullopt, std::nullopt});
  return lex;
}

TEST(Ranking, CosinePrefersTheDomainSense) {
  auto domain = VocabVector::from_sentences({{"disorders", "of", "the", "eye"},
                                             {"fracture", "of", "the", "skull"},
                                             {"injury", "of", "eye", "muscles"},
                                             {"cavity", "of", "the", "orbit"}});
  auto ranked = rank_candidates(domain, orbit_lexicon(), RankingMode::Cosine);
  const auto* e = ranked.find({"orbit"});
  ASSERT_NE(e, nullptr);
  EXPECT_GT(*e->candidates[0].score, *e->candidates[1].score);
  EXPECT_EQ(e->best().tokens, Tokens{"orbita"});
  EXPECT_EQ(*ranked.find({"blood"})->candidates[0].score, 0.0);
}

TEST(Ranking, CosineEqualsDirectScore) {
  auto domain = VocabVector::from_tokens({"eye", "skull", "the", "the"});
  auto ranked = rank_candidates(domain, orbit_lexicon(), RankingMode::Cosine);
  const auto& c = ranked.find({"orbit"})->candidates[0];
  EXPECT_DOUBLE_EQ(*c.score, cosine_score(domain, VocabVector::from_tokens(tokenize(*c.abstract))));
}

TEST(Ranking, UniformIsExactlyOne) {
  auto ranked = rank_candidates(VocabVector{}, orbit_lexicon(), RankingMode::Uniform);
  for (const auto& e : ranked.entries()) {
    for (const auto& c : e.candidates) EXPECT_EQ(*c.score, 1.0);
  }
  EXPECT_THROW(parse_ranking_mode("bm25"), Error);
}

TEST(Annotate, OrbitExample) {
  Lexicon lex;
  lex.add({"orbit"}, {{"orbita"}, 0.872, std::nullopt});
  lex.add({"orbit"}, {{"umlaufbahn"}, 0.512, std::nullopt});
  auto in = annotate({"disorders", "of", "orbit"}, lex, InjectionMode::Exclusive);
  ASSERT_EQ(in.spans.size(), 1u);
  EXPECT_EQ(in.spans[0].start, 2u);
  EXPECT_EQ(in.spans[0].end, 3u);
  ASSERT_EQ(in.spans[0].candidates.size(), 2u);
  EXPECT_EQ(format_markup(in), "disorders of <n translation=\"orbita||umlaufbahn\" prob=\"0.872 || 0.512\">orbit</n>");
}

TEST(Annotate, NoMatchPassesThrough) {
  auto in = annotate({"a", "b"}, orbit_lexicon(), InjectionMode::Inclusive);
  EXPECT_TRUE(in.spans.empty());
  EXPECT_EQ(in.tokens, (Tokens{"a", "b"}));
}

TEST(Annotate, LongestMatchWins) {
  Lexicon lex;
  lex.add({"blood"}, {{"blut"}, std::nullopt, std::nullopt});
  lex.add({"blood", "vessels"}, {{"blutgefäße"}, std::nullopt, std::nullopt});
  auto in = annotate({"blood", "vessels", "and", "blood"}, lex, InjectionMode::Exclusive);
  ASSERT_EQ(in.spans.size(), 2u);
  EXPECT_EQ(in.spans[0].end, 2u);
  EXPECT_EQ(in.spans[0].candidates[0].prob, 1.0);
  EXPECT_EQ(in.spans[1].start, 3u);
}

TEST(Annotate, RandomSpansRoundTripThroughMarkup) {
  Lexicon lex;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> word(0, 5), len(1, 3);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    Tokens src, tgt;
    for (int i = len(rng); i > 0; --i) src.push_back("s" + std::to_string(word(rng)));
    for (int i = len(rng); i > 0; --i) tgt.push_back("t" + std::to_string(word(rng)));
    lex.add(src, {tgt, score(rng), std::nullopt});
  }
  for (int k = 0; k < 50; ++k) {
    Tokens source;
    for (int i = len(rng) * 3; i > 0; --i) source.push_back("s" + std::to_string(word(rng)));
    auto in = annotate(source, lex, InjectionMode::Constraint);
    in.validate();
    for (std::size_t s = 1; s < in.spans.size(); ++s) EXPECT_LE(in.spans[s - 1].end, in.spans[s].start);
    auto back = parse_markup(format_markup(in), InjectionMode::Constraint);
    EXPECT_EQ(back.tokens, in.tokens);
    ASSERT_EQ(back.spans.size(), in.spans.size());
    for (std::size_t s = 0; s < in.spans.size(); ++s) {
      EXPECT_EQ(back.spans[s].start, in.spans[s].start);
      EXPECT_EQ(back.spans[s].end, in.spans[s].end);
      ASSERT_EQ(back.spans[s].candidates.size(), in.spans[s].candidates.size());
      for (std::size_t c = 0; c < in.spans[s].candidates.size(); ++c) {
        EXPECT_EQ(back.spans[s].candidates[c].target, in.spans[s].candidates[c].target);
        EXPECT_EQ(back.spans[s].candidates[c].prob, in.spans[s].candidates[c].prob);
      }
    }
  }
}

}  // namespace
}  // namespace termforge
