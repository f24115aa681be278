#include <gtest/gtest.h>

#include <set>

#include "termforge/align.hpp"
#include "termforge/synthetic.hpp"

namespace termforge {
namespace {

ParallelCorpus corpus_of(std::vector<std::pair<Tokens, Tokens>> pairs) {
  ParallelCorpus c;
  for (auto& [s, t] : pairs) c.pairs.push_back({std::move(s), std::move(t)});
  return c;
}

TEST(Ibm1, LikelihoodNeverDecreases) {
  auto fx = synthetic::two_domains(9);
  ParallelCorpus sample;
  for (std::size_t i = 0; i < 50; ++i) sample.pairs.push_back(fx.generic.pairs[i]);
  EmTrace trace;
  ibm1_em(sample, 20, &trace);
  ASSERT_EQ(trace.log_likelihood.size(), 21u);
  for (std::size_t i = 1; i < trace.log_likelihood.size(); ++i) {
    EXPECT_GE(trace.log_likelihood[i], trace.log_likelihood[i - 1] - 1e-9);
  }
}

TEST(Ibm1, LaMaison) {
  auto c = corpus_of({{{"la", "maison"}, {"the", "house"}}, {{"la", "fleur"}, {"the", "flower"}}});
  auto t = ibm1_em(c.inverted(), 10);
  double la = t.prob("la", "the");
  EXPECT_GT(la, t.prob("maison", "the"));
  EXPECT_GT(la, t.prob("fleur", "the"));
  auto fwd = ibm1_em(c, 10);
  EXPECT_GT(fwd.prob("house", "maison"), fwd.prob("the", "maison"));
}

TEST(Ibm1, SinglePairNormalization) {
  auto c = corpus_of({{{"a"}, {"x"}}});
  auto t = ibm1_em(c, 5);
  EXPECT_GE(t.prob("x", "a"), t.prob("x", std::string(TranslationTable::kNull)));
  for (const auto& [src, dist] : t.by_source()) {
    double total = 0.0;
    for (const auto& [tgt, p] : dist) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12) << src;
  }
}

TEST(Align, IdentityTableGivesDiagonal) {
  TranslationTable t;
  for (const char* w : {"a", "b", "c"}) t.set(w, w, 1.0);
  SentencePair p{{"a", "b", "c"}, {"a", "b", "c"}};
  EXPECT_EQ(viterbi_align(t, p), (Alignment{{0, 0}, {1, 1}, {2, 2}}));
}

TEST(Align, LaMaisonLinks) {
  auto c = corpus_of({{{"la", "maison"}, {"the", "house"}}, {{"la", "fleur"}, {"the", "flower"}}});
  auto fwd = ibm1_em(c, 10);
  auto bwd = ibm1_em(c.inverted(), 10);
  EXPECT_EQ(align_pair(fwd, bwd, c.pairs[0], Symmetrization::GrowDiag), (Alignment{{0, 0}, {1, 1}}));
}

TEST(Align, IntersectionWithinUnion) {
  auto fx = synthetic::two_domains(3);
  auto fwd = ibm1_em(fx.generic, 5);
  auto bwd = ibm1_em(fx.generic.inverted(), 5);
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& p = fx.generic.pairs[i];
    auto inter = align_pair(fwd, bwd, p, Symmetrization::Intersection);
    auto uni = align_pair(fwd, bwd, p, Symmetrization::Union);
    auto grow = align_pair(fwd, bwd, p, Symmetrization::GrowDiag);
    EXPECT_TRUE(std::includes(uni.begin(), uni.end(), inter.begin(), inter.end()));
    EXPECT_TRUE(std::includes(grow.begin(), grow.end(), inter.begin(), inter.end()));
    EXPECT_TRUE(std::includes(uni.begin(), uni.end(), grow.begin(), grow.end()));
  }
}

using Span = std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>;

/// Every box [s1,s2] x [t1,t2] with a link inside and no link leaving it.
std::set<Span> brute_force_spans(const Alignment& a, std::size_t sl, std::size_t tl, std::size_t max_len) {
  std::set<Span> out;
  for (std::size_t s1 = 0; s1 < sl; ++s1) {
    for (std::size_t s2 = s1; s2 < sl && s2 - s1 < max_len; ++s2) {
      for (std::size_t t1 = 0; t1 < tl; ++t1) {
        for (std::size_t t2 = t1; t2 < tl && t2 - t1 < max_len; ++t2) {
          bool inside = false, crossing = false;
          for (const auto& [s, t] : a) {
            bool in_s = s >= s1 && s <= s2;
            bool in_t = t >= t1 && t <= t2;
            if (in_s && in_t) inside = true;
            if (in_s != in_t) crossing = true;
          }
          if (inside && !crossing) out.insert({{s1, s2}, {t1, t2}});
        }
      }
    }
  }
  return out;
}

TEST(PhraseExtraction, DiagonalPair) {
  auto spans = consistent_phrase_spans({{0, 0}, {1, 1}}, 2, 2, 7);
  EXPECT_EQ(spans.size(), 3u);
}

TEST(PhraseExtraction, MatchesBruteForce) {
  auto fx = synthetic::two_domains(8);
  auto fwd = ibm1_em(fx.generic, 5);
  auto bwd = ibm1_em(fx.generic.inverted(), 5);
  for (std::size_t i = 0; i < 60; ++i) {
    const auto& p = fx.generic.pairs[i];
    auto a = align_pair(fwd, bwd, p, Symmetrization::GrowDiag);
    for (std::size_t max_len : {1u, 2u, 7u}) {
      auto got = consistent_phrase_spans(a, p.source.size(), p.target.size(), max_len);
      std::set<Span> got_set(got.begin(), got.end());
      EXPECT_EQ(got_set.size(), got.size());
      EXPECT_EQ(got_set, brute_force_spans(a, p.source.size(), p.target.size(), max_len));
    }
  }
}

TEST(PhraseExtraction, UnalignedTargetWordAttaches) {
  // "x" is unaligned: it may join a neighbouring phrase but never stands alone.
  auto spans = consistent_phrase_spans({{0, 0}, {1, 2}}, 2, 3, 7);
  std::set<Span> s(spans.begin(), spans.end());
  EXPECT_TRUE(s.count({{0, 0}, {0, 1}}));
  EXPECT_TRUE(s.count({{1, 1}, {1, 2}}));
  EXPECT_EQ(s, brute_force_spans({{0, 0}, {1, 2}}, 2, 3, 7));
}

TEST(PhraseTable, FeaturesInRangeAndRoundTrip) {
  auto fx = synthetic::two_domains(1);
  auto fwd = ibm1_em(fx.generic, 5);
  auto bwd = ibm1_em(fx.generic.inverted(), 5);
  std::vector<Alignment> al;
  for (const auto& p : fx.generic.pairs) al.push_back(align_pair(fwd, bwd, p, Symmetrization::GrowDiag));
  auto table = extract_phrases(fx.generic, al, 7, fwd, bwd);
  ASSERT_GT(table.size(), 0u);
  for (const auto& [src, opts] : table.entries()) {
    double phi_sum = 0.0;
    for (const auto& o : opts) {
      for (double f : o.features) {
        EXPECT_GT(f, 0.0);
        EXPECT_LE(f, 1.0 + 1e-12);
      }
      phi_sum += o.features[0];
    }
    EXPECT_NEAR(phi_sum, 1.0, 1e-9);
  }
  auto text = format_phrase_table(table);
  EXPECT_EQ(format_phrase_table(parse_phrase_table(text)), text);
}

}  // namespace
}  // namespace termforge
