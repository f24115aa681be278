#include "termforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "termforge/bpe.hpp"
#include "termforge/error.hpp"

namespace termforge {

namespace {

void check_inputs(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs) {
  if (hyps.size() != refs.size()) {
    throw ValidationError("hypothesis/reference count mismatch: " + std::to_string(hyps.size()) + " vs " +
                          std::to_string(refs.size()));
  }
  if (hyps.empty()) throw ValidationError("no segments to score");
}

template <typename Seq>
std::map<Seq, int> ngram_counts(const std::vector<typename Seq::value_type>& items, std::size_t n) {
  std::map<Seq, int> counts;
  for (std::size_t i = 0; i + n <= items.size(); ++i) {
    ++counts[Seq(items.begin() + static_cast<std::ptrdiff_t>(i), items.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

template <typename Seq>
int clipped_matches(const std::map<Seq, int>& hyp, const std::map<Seq, int>& ref) {
  int m = 0;
  for (const auto& [g, c] : hyp) {
    auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

std::vector<std::string> chars_without_space(const Tokens& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    for (auto& c : utf8_chars(t)) {
      if (c != " " && c != "\t") out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < kMaxOrder; ++n) {
    matches[n] += o.matches[n];
    hyp_ngrams[n] += o.hyp_ngrams[n];
    ref_ngrams[n] += o.ref_ngrams[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats& BleuStats::operator-=(const BleuStats& o) {
  for (int n = 0; n < kMaxOrder; ++n) {
    matches[n] -= o.matches[n];
    hyp_ngrams[n] -= o.hyp_ngrams[n];
    ref_ngrams[n] -= o.ref_ngrams[n];
  }
  hyp_len -= o.hyp_len;
  ref_len -= o.ref_len;
  return *this;
}

BleuStats bleu_stats(const Tokens& hypothesis, const Tokens& reference) {
  BleuStats s;
  for (int n = 1; n <= BleuStats::kMaxOrder; ++n) {
    auto h = ngram_counts<Tokens>(hypothesis, static_cast<std::size_t>(n));
    auto r = ngram_counts<Tokens>(reference, static_cast<std::size_t>(n));
    s.matches[n - 1] = clipped_matches(h, r);
    s.hyp_ngrams[n - 1] = hypothesis.size() >= static_cast<std::size_t>(n) ? static_cast<double>(hypothesis.size() - n + 1) : 0.0;
    s.ref_ngrams[n - 1] = reference.size() >= static_cast<std::size_t>(n) ? static_cast<double>(reference.size() - n + 1) : 0.0;
  }
  s.hyp_len = static_cast<double>(hypothesis.size());
  s.ref_len = static_cast<double>(reference.size());
  return s;
}

double bleu_from_stats(const BleuStats& s) {
  // Rounding in incremental sums can leave tiny residues.
  auto zero = [](double v) { return v < 0.5; };
  if (zero(s.hyp_len)) return zero(s.ref_len) ? 100.0 : 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < BleuStats::kMaxOrder; ++n) {
    if (zero(s.hyp_ngrams[n]) && zero(s.ref_ngrams[n])) continue;
    double p = std::max(s.matches[n], 1e-9) / std::max(s.hyp_ngrams[n], 1.0);
    log_sum += std::log(p);
    ++orders;
  }
  double bp = s.hyp_len >= s.ref_len ? 1.0 : std::exp(1.0 - s.ref_len / s.hyp_len);
  double geo = orders ? std::exp(log_sum / orders) : 1.0;
  return std::clamp(100.0 * bp * geo, 0.0, 100.0);
}

double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
  check_inputs(hypotheses, references);
  BleuStats total;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) total += bleu_stats(hypotheses[i], references[i]);
  return bleu_from_stats(total);
}

double modified_precision(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, int n) {
  check_inputs(hypotheses, references);
  if (n < 1 || n > BleuStats::kMaxOrder) throw ValidationError("n-gram order out of range");
  double m = 0.0, t = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    auto s = bleu_stats(hypotheses[i], references[i]);
    m += s.matches[n - 1];
    t += s.hyp_ngrams[n - 1];
  }
  return t > 0 ? m / t : 0.0;
}

double chrf(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references, int max_n, double beta) {
  check_inputs(hypotheses, references);
  std::vector<double> match(max_n, 0.0), hyp_total(max_n, 0.0), ref_total(max_n, 0.0);
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    auto hc = chars_without_space(hypotheses[i]);
    auto rc = chars_without_space(references[i]);
    for (int n = 1; n <= max_n; ++n) {
      auto h = ngram_counts<std::vector<std::string>>(hc, static_cast<std::size_t>(n));
      auto r = ngram_counts<std::vector<std::string>>(rc, static_cast<std::size_t>(n));
      match[n - 1] += clipped_matches(h, r);
      if (hc.size() >= static_cast<std::size_t>(n)) hyp_total[n - 1] += static_cast<double>(hc.size() - n + 1);
      if (rc.size() >= static_cast<std::size_t>(n)) ref_total[n - 1] += static_cast<double>(rc.size() - n + 1);
    }
  }
  double p_sum = 0.0, r_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < max_n; ++n) {
    if (hyp_total[n] == 0.0 && ref_total[n] == 0.0) continue;
    p_sum += hyp_total[n] > 0 ? match[n] / hyp_total[n] : 0.0;
    r_sum += ref_total[n] > 0 ? match[n] / ref_total[n] : 0.0;
    ++orders;
  }
  if (orders == 0) return 100.0;
  double p = p_sum / orders, r = r_sum / orders;
  double b2 = beta * beta;
  double denom = b2 * p + r;
  return denom > 0 ? 100.0 * (1 + b2) * p * r / denom : 0.0;
}

double meteor_lite(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references,
                   const MeteorParams& params) {
  check_inputs(hypotheses, references);
  double matches = 0.0, chunks = 0.0, hyp_len = 0.0, ref_len = 0.0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(ref.size());
    std::vector<bool> used(ref.size(), false);
    std::vector<long> link(hyp.size(), -1);
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      long prev = i > 0 ? link[i - 1] : -1;
      if (prev >= 0 && static_cast<std::size_t>(prev + 1) < ref.size() && !used[prev + 1] && ref[prev + 1] == hyp[i]) {
        link[i] = prev + 1;
      } else {
        for (std::size_t j = 0; j < ref.size(); ++j) {
          if (!used[j] && ref[j] == hyp[i]) {
            link[i] = static_cast<long>(j);
            break;
          }
        }
      }
      if (link[i] >= 0) used[static_cast<std::size_t>(link[i])] = true;
    }
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (link[i] < 0) continue;
      matches += 1.0;
      bool continues = i > 0 && link[i - 1] >= 0 && link[i - 1] + 1 == link[i];
      if (!continues) chunks += 1.0;
    }
  }
  if (matches == 0.0) return 0.0;
  double p = matches / hyp_len, r = matches / ref_len;
  double fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
  double penalty = params.gamma * std::pow(chunks / matches, params.theta);
  return std::clamp(100.0 * fmean * (1.0 - penalty), 0.0, 100.0);
}

MetricScore evaluate(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references) {
  MetricScore m;
  m.bleu = bleu(hypotheses, references);
  m.chrf3 = chrf3(hypotheses, references);
  m.meteor = meteor_lite(hypotheses, references);
  m.segment_count = hypotheses.size();
  return m;
}

}  // namespace termforge
