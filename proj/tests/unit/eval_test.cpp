#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "termforge/error.hpp"
#include "termforge/eval.hpp"
#include "termforge/io.hpp"
#include "oracles.hpp"

#ifndef TERMFORGE_GOLDEN_DIR
#error "TERMFORGE_GOLDEN_DIR must be defined"
#endif

namespace termforge {
namespace {

std::vector<Tokens> one(Tokens t) { return {std::move(t)}; }

TEST(Bleu, IdentityIsHundred) {
  std::vector<Tokens> x = {{"sonstige", "bakterielle", "krankheiten"}, {"störungen", "der", "orbita", "und", "x"}};
  EXPECT_DOUBLE_EQ(bleu(x, x), 100.0);
}

TEST(Bleu, UnigramClipping) {
  EXPECT_DOUBLE_EQ(modified_precision(one({"the", "the", "the"}), one({"the", "cat"}), 1), 1.0 / 3.0);
}

TEST(Bleu, DisjointVocabularyIsNearZero) {
  EXPECT_LT(bleu(one({"a", "b", "c", "d"}), one({"w", "x", "y", "z"})), 1e-3);
}

TEST(Bleu, Errors) {
  EXPECT_THROW(bleu({{"a"}}, {}), ValidationError);
  EXPECT_THROW(bleu({}, {}), ValidationError);
  EXPECT_THROW(chrf({{"a"}}, {{"a"}, {"b"}}), ValidationError);
  EXPECT_THROW(meteor_lite({{"a"}}, {}), ValidationError);
}

std::vector<Tokens> random_corpus(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> word(0, 6), len(1, 8);
  std::vector<Tokens> out(n);
  for (auto& s : out) {
    for (int k = len(rng); k > 0; --k) s.push_back("w" + std::to_string(word(rng)));
  }
  return out;
}

TEST(Metrics, Properties) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto hyp = random_corpus(rng, 5), ref = random_corpus(rng, 5);
    EXPECT_DOUBLE_EQ(bleu(ref, ref), 100.0);
    EXPECT_NEAR(chrf3(ref, ref), 100.0, 1e-9);
    for (int n = 1; n <= 4; ++n) EXPECT_LE(modified_precision(hyp, ref, n), 1.0);
    std::vector<std::size_t> perm(hyp.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Tokens> ph, pr;
    for (auto i : perm) {
      ph.push_back(hyp[i]);
      pr.push_back(ref[i]);
    }
    EXPECT_NEAR(bleu(ph, pr), bleu(hyp, ref), 1e-9);
    EXPECT_NEAR(chrf3(ph, pr), chrf3(hyp, ref), 1e-9);
    EXPECT_NEAR(meteor_lite(ph, pr), meteor_lite(hyp, ref), 1e-9);
  }
}

TEST(Bleu, BrevityPenaltyOnlyForShortHypotheses) {
  std::vector<Tokens> ref = {{"a", "b", "c", "d", "e", "f"}};
  EXPECT_LT(bleu({{"a", "b", "c", "d", "e"}}, ref), 100.0 * std::exp(1.0 - 6.0 / 5.0) + 1e-9);
  auto s = bleu_stats({"a", "b", "c", "d", "e"}, ref[0]);
  double bp = std::exp(1.0 - s.ref_len / s.hyp_len);
  double geo = 1.0;
  for (int n = 0; n < 4; ++n) geo *= s.matches[static_cast<std::size_t>(n)] / s.hyp_ngrams[static_cast<std::size_t>(n)];
  EXPECT_NEAR(bleu_from_stats(s), 100.0 * bp * std::pow(geo, 0.25), 1e-9);
  EXPECT_DOUBLE_EQ(bleu({{"a", "b", "c", "d", "e", "f", "g"}}, ref),
                   100.0 * std::pow(6.0 / 7.0 * 5.0 / 6.0 * 4.0 / 5.0 * 3.0 / 4.0, 0.25));
}

using testing::char_ngram_pr;

TEST(Chrf, AbcAgainstAbd) {
  auto [p, r] = char_ngram_pr("abc", "abd", 6);
  EXPECT_DOUBLE_EQ(p, 7.0 / 18.0);
  double f3 = 10.0 * p * r / (9.0 * p + r);
  EXPECT_NEAR(chrf3(one({"abc"}), one({"abd"})), 100.0 * f3, 1e-9);
  EXPECT_NEAR(chrf3(one({"abc"}), one({"abd"})), 38.8888888888889, 1e-9);
}

TEST(Chrf, BetaOneIsHarmonicMean) {
  auto [p, r] = char_ngram_pr("orbitaumlaufbahn", "orbitaumlauf", 6);
  EXPECT_NEAR(chrf(one({"orbita", "umlaufbahn"}), one({"orbita", "umlauf"}), 6, 1.0), 100.0 * 2 * p * r / (p + r), 1e-9);
}

TEST(Chrf, RecallWeighting) {
  // precision < recall
  auto hyp = one({"abcdefgh"});
  auto ref = one({"abcd"});
  EXPECT_GT(chrf(hyp, ref, 6, 3.0), chrf(hyp, ref, 6, 1.0));
}

TEST(Meteor, IdenticalSegmentsPayOneChunk) {
  for (int m = 5; m <= 10; ++m) {
    Tokens t;
    for (int k = 0; k < m; ++k) t.push_back("w" + std::to_string(k));
    double expected = 100.0 * (1.0 - 0.5 * std::pow(1.0 / m, 3));
    EXPECT_NEAR(meteor_lite(one(t), one(t)), expected, 1e-9);
    EXPECT_NEAR(meteor_lite(one(t), one(t)), 100.0, 0.5);
  }
}

TEST(Meteor, NoMatchesIsZero) { EXPECT_EQ(meteor_lite(one({"a"}), one({"b"})), 0.0); }

TEST(Meteor, HandComputedSegment) {
  // 4 matches (the cat / on / mat) in 3 chunks; P = 4/5, R = 4/6.
  double p = 0.8, r = 4.0 / 6.0;
  double fmean = p * r / (0.9 * p + 0.1 * r);
  double expected = 100.0 * fmean * (1.0 - 0.5 * std::pow(3.0 / 4.0, 3));
  EXPECT_NEAR(meteor_lite(one({"the", "cat", "sat", "on", "mat"}), one({"the", "cat", "is", "on", "the", "mat"})),
              expected, 1e-6);
}

std::vector<ReportRow> grid() {
  std::vector<ReportRow> rows;
  std::vector<Tokens> refs = {{"sonstige", "bakterielle", "krankheiten"}, {"störungen", "der", "orbita"}};
  const std::vector<std::pair<std::string, std::vector<Tokens>>> systems = {
      {"smt", {{"sonstige", "krankheiten"}, {"störungen", "der", "umlaufbahn"}}},
      {"smt-inject", {{"sonstige", "bakterielle", "krankheiten"}, {"störungen", "der", "orbita"}}},
      {"nmt", {{"andere", "krankheiten"}, {"krankheiten", "der", "orbita"}}},
  };
  for (const auto& [name, hyps] : systems) {
    for (const std::string set : {"icd", "ifrs", "dev"}) {
      auto h = hyps;
      if (set == "ifrs") std::reverse(h.begin(), h.end());
      if (set == "dev") h[0].push_back("x");
      rows.push_back({name, set, evaluate(h, refs)});
    }
  }
  return rows;
}

TEST(Report, SingleCell) {
  auto text = format_report({{"smt", "icd", evaluate(one({"a", "b"}), one({"a", "b"}))}});
  EXPECT_NE(text.find("smt"), std::string::npos);
  EXPECT_NE(text.find("icd"), std::string::npos);
  EXPECT_NE(text.find("100.00"), std::string::npos);
}

TEST(Report, MatchesGoldenFile) {
  auto golden = io::read_file(std::string(TERMFORGE_GOLDEN_DIR) + "/report_3x3.txt");
  EXPECT_EQ(format_report(grid()), golden);
}

TEST(Report, TsvRoundTrip) {
  auto rows = grid();
  auto back = parse_report_tsv(format_report_tsv(rows));
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].system, rows[i].system);
    EXPECT_EQ(back[i].evalset, rows[i].evalset);
    EXPECT_EQ(back[i].score.bleu, rows[i].score.bleu);
    EXPECT_EQ(back[i].score.meteor, rows[i].score.meteor);
  }
  EXPECT_EQ(format_report(back), format_report(rows));
}

TEST(Report, EmptyIsAnError) { EXPECT_THROW(format_report({}), ValidationError); }

}  // namespace
}  // namespace termforge
