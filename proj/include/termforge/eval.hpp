#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "termforge/corpus.hpp"

namespace termforge {

/// Sufficient statistics for corpus BLEU-4; additive over segments.
struct BleuStats {
  static constexpr int kMaxOrder = 4;
  std::array<double, kMaxOrder> matches{};
  std::array<double, kMaxOrder> hyp_ngrams{};
  std::array<double, kMaxOrder> ref_ngrams{};
  double hyp_len = 0.0;
  double ref_len = 0.0;

  BleuStats& operator+=(const BleuStats& o);
  BleuStats& operator-=(const BleuStats& o);
};

BleuStats bleu_stats(const Tokens& hypothesis, const Tokens& reference);

/// BLEU in [0, 100]. Orders with no n-grams on either side are left out of the
/// geometric mean; a zero match count is floored at 1e-9.
double bleu_from_stats(const BleuStats& stats);

/// Corpus BLEU-4. Throws ValidationError on mismatched or empty inputs.
double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

/// Clipped n-gram precision (matches / hypothesis n-grams) over the corpus.
double modified_precision(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, int n);

/// Character n-gram F-beta on [0, 100], whitespace removed, counts summed over
/// the corpus per order, precision and recall averaged over orders present in
/// either side.
double chrf(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, int max_n = 6,
            double beta = 3.0);

inline double chrf3(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
  return chrf(hypotheses, references, 6, 3.0);
}

struct MeteorParams {
  double alpha = 0.9;
  double gamma = 0.5;
  double theta = 3.0;
};

/// Exact-match unigram METEOR with corpus-level aggregation, on [0, 100].
double meteor_lite(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                   const MeteorParams& params = {});

struct MetricScore {
  double bleu = 0.0;
  double chrf3 = 0.0;
  double meteor = 0.0;
  std::size_t segment_count = 0;
};

MetricScore evaluate(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

struct ReportRow {
  std::string system;
  std::string evalset;
  MetricScore score;
};

/// Table with one block per metric, systems as rows and eval sets as columns,
/// both in order of first appearance. Throws ValidationError when empty.
std::string format_report(const std::vector<ReportRow>& rows);

/// `system<TAB>evalset<TAB>metric<TAB>value` lines.
std::string format_report_tsv(const std::vector<ReportRow>& rows);

std::vector<ReportRow> parse_report_tsv(std::string_view text);

}  // namespace termforge
