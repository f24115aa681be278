#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "termforge/error.hpp"
#include "termforge/eval.hpp"
#include "termforge/log.hpp"
#include "termforge/smt.hpp"

namespace termforge {

namespace {

struct Candidate {
  Tokens target;
  FeatureVector features{};
  BleuStats stats;
};

using Pool = std::vector<std::vector<Candidate>>;

/// Upper envelope of lines a + gamma * b; each piece is (start, candidate).
std::vector<std::pair<double, std::size_t>> upper_envelope(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::size_t> order(a.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (b[x] != b[y]) return b[x] < b[y];
    return a[x] > a[y];
  });
  std::vector<std::pair<double, std::size_t>> hull;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::size_t i = order[k];
    if (k > 0 && b[i] == b[order[k - 1]]) continue;
    double start = neg_inf;
    while (!hull.empty()) {
      std::size_t top = hull.back().second;
      start = (a[top] - a[i]) / (b[i] - b[top]);
      if (start <= hull.back().first) {
        hull.pop_back();
        start = neg_inf;
      } else {
        break;
      }
    }
    hull.emplace_back(start, i);
  }
  return hull;
}

double pool_bleu(const Pool& pool, const LogLinearWeights& w) {
  BleuStats total;
  for (const auto& cands : pool) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cands.size(); ++k) {
      double s = w.score(cands[k].features);
      if (s > best_score) {
        best_score = s;
        best = k;
      }
    }
    total += cands[best].stats;
  }
  return bleu_from_stats(total);
}

/// Exact line search along coordinate `dim`; returns the best step and BLEU.
std::pair<double, double> line_search(const Pool& pool, const LogLinearWeights& w, std::size_t dim) {
  struct Event {
    double x;
    std::size_t sentence;
    std::size_t from;
    std::size_t to;
  };
  std::vector<Event> events;
  BleuStats stats;
  for (std::size_t s = 0; s < pool.size(); ++s) {
    const auto& cands = pool[s];
    std::vector<double> a(cands.size()), b(cands.size());
    for (std::size_t k = 0; k < cands.size(); ++k) {
      a[k] = w.score(cands[k].features);
      b[k] = cands[k].features[dim];
    }
    auto hull = upper_envelope(a, b);
    stats += cands[hull.front().second].stats;
    for (std::size_t h = 1; h < hull.size(); ++h) {
      events.push_back({hull[h].first, s, hull[h - 1].second, hull[h].second});
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& x, const Event& y) { return x.x < y.x; });

  double best_gamma = 0.0;
  double best_bleu = -1.0;
  auto consider = [&](double gamma) {
    double value = bleu_from_stats(stats);
    if (value > best_bleu + 1e-12 || (std::abs(value - best_bleu) <= 1e-12 && std::abs(gamma) < std::abs(best_gamma))) {
      best_bleu = value;
      best_gamma = gamma;
    }
  };
  if (events.empty()) {
    consider(0.0);
    return {best_gamma, best_bleu};
  }
  consider(events.front().x > 0.0 ? 0.0 : events.front().x - 1.0);
  for (std::size_t e = 0; e < events.size();) {
    double x = events[e].x;
    while (e < events.size() && events[e].x == x) {
      stats -= pool[events[e].sentence][events[e].from].stats;
      stats += pool[events[e].sentence][events[e].to].stats;
      ++e;
    }
    bool last = e == events.size();
    double next = last ? std::numeric_limits<double>::infinity() : events[e].x;
    double gamma = last ? x + 1.0 : 0.5 * (x + next);
    // Prefer the current point when it lies inside the interval.
    if (x < 0.0 && 0.0 < next) gamma = 0.0;
    consider(gamma);
  }
  return {best_gamma, best_bleu};
}

void normalize(LogLinearWeights& w) {
  double m = 0.0;
  for (double v : w.values) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    for (double& v : w.values) v /= m;
  }
}

LogLinearWeights optimize(const Pool& pool, LogLinearWeights start, double& bleu_out) {
  double current = pool_bleu(pool, start);
  for (int sweep = 0; sweep < 20; ++sweep) {
    bool improved = false;
    for (std::size_t d = 0; d < kNumFeatures; ++d) {
      auto [gamma, value] = line_search(pool, start, d);
      if (value > current + 1e-9) {
        start.values[d] += gamma;
        current = value;
        improved = true;
      }
    }
    if (!improved) break;
  }
  normalize(start);
  bleu_out = pool_bleu(pool, start);
  return start;
}

double decode_bleu(const ParallelCorpus& dev, const PhraseTable& table, const NgramLanguageModel& lm,
                   const LogLinearWeights& w, const BeamConfig& beam) {
  std::vector<Tokens> hyps, refs;
  for (const auto& p : dev.pairs) {
    hyps.push_back(decode(plain_input(p.source), table, lm, w, beam).target);
    refs.push_back(p.target);
  }
  return bleu(hyps, refs);
}

}  // namespace

MertResult mert_tune(const ParallelCorpus& dev, const PhraseTable& table, const NgramLanguageModel& lm,
                     const LogLinearWeights& init, const MertConfig& config) {
  if (dev.pairs.empty()) throw EmptyCorpusError("MERT needs a non-empty dev set");
  if (!init.finite()) throw ValidationError("non-finite initial weights");
  MertResult result;
  result.initial_bleu = decode_bleu(dev, table, lm, init, config.beam);
  result.weights = init;
  result.tuned_bleu = result.initial_bleu;
  if (result.initial_bleu >= 100.0) return result;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Pool pool(dev.pairs.size());
  LogLinearWeights current = init;
  for (std::size_t iter = 0; iter < std::max<std::size_t>(config.max_iterations, 1); ++iter) {
    std::size_t added = 0;
    for (std::size_t s = 0; s < dev.pairs.size(); ++s) {
      auto nbest = decode_nbest(plain_input(dev.pairs[s].source), table, lm, current, config.beam, config.nbest);
      for (auto& r : nbest) {
        auto& cands = pool[s];
        bool dup = std::any_of(cands.begin(), cands.end(), [&](const Candidate& c) {
          return c.target == r.target && c.features == r.features;
        });
        if (dup) continue;
        cands.push_back({r.target, r.features, bleu_stats(r.target, dev.pairs[s].target)});
        ++added;
      }
    }
    result.iterations = iter + 1;
    if (added == 0 && iter > 0) break;

    double best_bleu = -1.0;
    LogLinearWeights best = current;
    for (std::size_t r = 0; r <= config.restarts; ++r) {
      LogLinearWeights start = current;
      if (r > 0) {
        for (double& v : start.values) v = uniform(rng);
      }
      double value = 0.0;
      auto tuned = optimize(pool, start, value);
      if (value > best_bleu + 1e-12) {
        best_bleu = value;
        best = tuned;
      }
    }
    log::debug("mert iteration {}: pool BLEU {:.4f}", iter + 1, best_bleu);
    if (best.values == current.values) break;
    current = best;
  }

  double tuned = decode_bleu(dev, table, lm, current, config.beam);
  if (tuned >= result.initial_bleu) {
    result.weights = current;
    result.tuned_bleu = tuned;
  }
  return result;
}

}  // namespace termforge
