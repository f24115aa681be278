#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <unordered_map>

#include <fmt/format.h>

#include "termforge/error.hpp"
#include "termforge/io.hpp"
#include "termforge/smt.hpp"

namespace termforge {

std::string_view to_string(InjectionMode mode) {
  switch (mode) {
    case InjectionMode::Exclusive: return "exclusive";
    case InjectionMode::Inclusive: return "inclusive";
    case InjectionMode::Constraint: return "constraint";
  }
  return "exclusive";
}

InjectionMode parse_injection_mode(std::string_view name) {
  if (name == "exclusive") return InjectionMode::Exclusive;
  if (name == "inclusive") return InjectionMode::Inclusive;
  if (name == "constraint") return InjectionMode::Constraint;
  throw ValidationError("unknown injection mode '" + std::string(name) + "'");
}

void AnnotatedInput::validate() const {
  std::size_t prev_end = 0;
  for (const auto& span : spans) {
    if (span.start >= span.end || span.end > tokens.size()) {
      throw ValidationError(fmt::format("span [{}, {}) out of bounds for {} tokens", span.start, span.end, tokens.size()));
    }
    if (span.start < prev_end) throw ValidationError("spans overlap or are out of order");
    if (span.candidates.empty()) throw ValidationError("span without candidates");
    for (const auto& c : span.candidates) {
      if (c.target.empty()) throw ValidationError("empty span candidate");
      if (!(c.prob >= 0.0 && c.prob <= 1.0)) throw ValidationError("candidate probability outside [0, 1]");
    }
    prev_end = span.end;
  }
}

AnnotatedInput plain_input(const Tokens& tokens) {
  AnnotatedInput in;
  in.tokens = tokens;
  return in;
}

const std::array<std::string_view, kNumFeatures>& LogLinearWeights::names() {
  static const std::array<std::string_view, kNumFeatures> kNames = {
      "phi_ts", "phi_st", "lex_ts", "lex_st", "lm", "word_penalty", "distortion"};
  return kNames;
}

LogLinearWeights LogLinearWeights::defaults() {
  LogLinearWeights w;
  w.values = {0.2, 0.2, 0.2, 0.2, 0.5, 0.3, 0.3};
  return w;
}

double LogLinearWeights::score(const FeatureVector& features) const {
  double s = 0.0;
  for (std::size_t k = 0; k < kNumFeatures; ++k) s += values[k] * features[k];
  return s;
}

bool LogLinearWeights::finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::string format_weights(const LogLinearWeights& weights) {
  std::string out;
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    out += fmt::format("{} {}\n", LogLinearWeights::names()[k], io::format_double(weights.values[k]));
  }
  return out;
}

LogLinearWeights parse_weights(std::string_view text) {
  LogLinearWeights w = LogLinearWeights::defaults();
  std::size_t line_no = 0;
  for (const auto& raw : io::split(text, '\n')) {
    ++line_no;
    auto line = io::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = io::split_whitespace(line);
    if (fields.size() != 2) throw ParseError("expected 'name value'", line_no);
    const auto& names = LogLinearWeights::names();
    auto it = std::find(names.begin(), names.end(), fields[0]);
    if (it == names.end()) throw ParseError("unknown feature '" + fields[0] + "'", line_no);
    double v = io::parse_double(fields[1]);
    if (!std::isfinite(v)) throw ValidationError("non-finite weight for " + fields[0]);
    w.values[static_cast<std::size_t>(it - names.begin())] = v;
  }
  return w;
}

LogLinearWeights load_weights(const std::filesystem::path& path) { return parse_weights(io::read_file(path)); }

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Option {
  std::size_t start = 0;
  std::size_t end = 0;
  Tokens target;
  std::vector<WordId> ids;
  /// Phrase-feature logs and word count; LM and distortion are filled in during search.
  FeatureVector local{};
};

bool contains_run(const Tokens& hay, const Tokens& needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool overlaps(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) { return a0 < b1 && b0 < a1; }

Option make_option(std::size_t start, std::size_t end, const Tokens& target, const std::array<double, 4>& f,
                   const NgramLanguageModel& lm) {
  Option o;
  o.start = start;
  o.end = end;
  o.target = target;
  for (const auto& t : target) o.ids.push_back(lm.id(t));
  for (std::size_t k = 0; k < 4; ++k) o.local[k] = std::log(std::max(f[k], PhraseTable::kFloor));
  o.local[kWordPenalty] = static_cast<double>(target.size());
  return o;
}

/// Whether some sequence of options tiles [0, n).
bool partitionable(const std::vector<Option>& options, std::size_t n) {
  std::vector<bool> reach(n + 1, false);
  reach[0] = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!reach[i]) continue;
    for (const auto& o : options) {
      if (o.start == i) reach[o.end] = true;
    }
  }
  return reach[n];
}

std::vector<Option> collect_options(const AnnotatedInput& input, const PhraseTable& table,
                                    const NgramLanguageModel& lm) {
  const std::size_t n = input.tokens.size();
  std::vector<Option> options;
  const std::size_t max_len = std::max<std::size_t>(table.max_source_length(), 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= std::min(n, i + max_len); ++j) {
      Tokens src(input.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                 input.tokens.begin() + static_cast<std::ptrdiff_t>(j));
      const auto* found = table.find(src);
      if (!found) continue;
      for (const auto& po : *found) {
        bool keep = true;
        for (const auto& span : input.spans) {
          if (!overlaps(i, j, span.start, span.end)) continue;
          if (span.mode == InjectionMode::Exclusive) {
            keep = false;
          } else if (span.mode == InjectionMode::Constraint) {
            bool covers = i <= span.start && span.end <= j;
            bool has = covers && std::any_of(span.candidates.begin(), span.candidates.end(),
                                             [&](const SpanCandidate& c) { return contains_run(po.target, c.target); });
            keep = has;
          }
          if (!keep) break;
        }
        if (keep) options.push_back(make_option(i, j, po.target, po.features, lm));
      }
    }
  }
  for (const auto& span : input.spans) {
    for (const auto& c : span.candidates) {
      double p = std::max(c.prob, PhraseTable::kFloor);
      options.push_back(make_option(span.start, span.end, c.target, {p, 1.0, p, p}, lm));
    }
  }
  // Exact duplicates (span, target, features) are dropped.
  std::vector<Option> unique;
  for (auto& o : options) {
    bool dup = std::any_of(unique.begin(), unique.end(), [&](const Option& u) {
      return u.start == o.start && u.end == o.end && u.target == o.target && u.local == o.local;
    });
    if (!dup) unique.push_back(std::move(o));
  }
  auto in_span = [&](std::size_t i) {
    return std::any_of(input.spans.begin(), input.spans.end(),
                       [&](const ConstraintSpan& s) { return s.start <= i && i < s.end; });
  };
  auto add_copies = [&](auto&& needs_copy) {
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_span(i) && needs_copy(i)) positions.push_back(i);
    }
    for (auto i : positions) unique.push_back(make_option(i, i + 1, {input.tokens[i]}, {1.0, 1.0, 1.0, 1.0}, lm));
  };
  add_copies([&](std::size_t i) {
    return std::none_of(unique.begin(), unique.end(), [&](const Option& o) { return o.start <= i && i < o.end; });
  });
  if (!partitionable(unique, n)) {
    add_copies([&](std::size_t i) {
      return std::none_of(unique.begin(), unique.end(), [&](const Option& o) { return o.start == i && o.end == i + 1; });
    });
  }
  std::stable_sort(unique.begin(), unique.end(), [](const Option& a, const Option& b) {
    return std::tie(a.start, a.end) < std::tie(b.start, b.end);
  });
  return unique;
}

struct Hypothesis {
  int parent = -1;
  int option = -1;
  std::vector<bool> coverage;
  std::size_t covered = 0;
  std::size_t last_end = 0;
  NgramLanguageModel::State lm_state;
  FeatureVector features{};
  double score = 0.0;
  double future = 0.0;
  /// Hypotheses recombined into this one; they share its continuation.
  std::vector<int> arcs;
};

std::string recombination_key(const Hypothesis& h) {
  std::string key;
  key.reserve(h.coverage.size() + 8 + 4 * h.lm_state.size());
  for (bool b : h.coverage) key += b ? '1' : '0';
  key += ':';
  key += std::to_string(h.last_end);
  for (WordId w : h.lm_state) {
    key += ',';
    key += std::to_string(w);
  }
  return key;
}

class Search {
 public:
  Search(const AnnotatedInput& input, const PhraseTable& table, const NgramLanguageModel& lm,
         const LogLinearWeights& weights)
      : input_(input), lm_(lm), weights_(weights), n_(input.tokens.size()) {
    input.validate();
    options_ = collect_options(input, table, lm);
    build_future_costs();
  }

  /// Hypotheses of the final stack, best first.
  std::vector<int> run(const BeamConfig& beam) {
    arena_.clear();
    std::vector<std::vector<int>> stacks(n_ + 1);
    std::vector<std::unordered_map<std::string, int>> keys(n_ + 1);
    Hypothesis root;
    root.coverage.assign(n_, false);
    root.lm_state = lm_.begin_state();
    if (n_ == 0) finish(root);
    arena_.push_back(root);
    stacks[0].push_back(0);

    for (std::size_t k = 0; k < n_; ++k) {
      prune(stacks[k], beam.stack_size);
      for (int hid : stacks[k]) {
        for (std::size_t oi = 0; oi < options_.size(); ++oi) {
          const Option& o = options_[oi];
          const Hypothesis& h = arena_[static_cast<std::size_t>(hid)];
          bool free = true;
          for (std::size_t p = o.start; p < o.end && free; ++p) free = !h.coverage[p];
          if (!free) continue;
          long jump = static_cast<long>(o.start) - static_cast<long>(h.last_end);
          if (beam.distortion_limit >= 0 && std::labs(jump) > beam.distortion_limit) continue;

          Hypothesis next;
          next.parent = hid;
          next.option = static_cast<int>(oi);
          next.coverage = h.coverage;
          for (std::size_t p = o.start; p < o.end; ++p) next.coverage[p] = true;
          next.covered = h.covered + (o.end - o.start);
          next.last_end = o.end;
          next.features = h.features;
          for (std::size_t f = 0; f < kNumFeatures; ++f) next.features[f] += o.local[f];
          next.features[kDistortion] -= static_cast<double>(std::labs(jump));
          NgramLanguageModel::State state = h.lm_state, tmp;
          for (WordId w : o.ids) {
            next.features[kLanguageModel] += lm_.advance(state, w, tmp);
            state.swap(tmp);
          }
          next.lm_state = std::move(state);
          if (next.covered == n_) finish(next);
          next.score = weights_.score(next.features);
          next.future = future_of(next.coverage);
          const std::size_t c = next.covered;
          insert(std::move(next), stacks[c], keys[c]);
        }
      }
    }
    auto& final_stack = stacks[n_];
    std::stable_sort(final_stack.begin(), final_stack.end(), [&](int a, int b) {
      return arena_[static_cast<std::size_t>(a)].score > arena_[static_cast<std::size_t>(b)].score;
    });
    return final_stack;
  }

  /// Up to `n` distinct translations, best first. Paths are enumerated lazily
  /// by swapping recombined hypotheses into already popped paths.
  std::vector<DecodeResult> nbest(const std::vector<int>& finals, std::size_t n) const {
    struct Path {
      double score;
      std::size_t order;
      std::vector<int> chain;  // final hypothesis first, root last
      FeatureVector features;
      std::size_t deviate;
    };
    auto worse = [](const Path& a, const Path& b) {
      return a.score < b.score || (a.score == b.score && a.order > b.order);
    };
    std::priority_queue<Path, std::vector<Path>, decltype(worse)> queue(worse);
    std::size_t order = 0;
    for (int hid : finals) {
      const auto& h = arena_[static_cast<std::size_t>(hid)];
      queue.push({h.score, order++, back_chain(hid), h.features, 0});
    }
    std::vector<DecodeResult> out;
    std::vector<Tokens> seen;
    const std::size_t max_pops = std::max<std::size_t>(100, 20 * n);
    for (std::size_t pops = 0; !queue.empty() && out.size() < n && pops < max_pops; ++pops) {
      Path p = queue.top();
      queue.pop();
      auto r = result(p.chain, p.score, p.features);
      if (std::find(seen.begin(), seen.end(), r.target) == seen.end()) {
        seen.push_back(r.target);
        out.push_back(std::move(r));
      }
      if (out.size() >= n) break;
      for (std::size_t i = p.deviate; i < p.chain.size(); ++i) {
        const auto& h = arena_[static_cast<std::size_t>(p.chain[i])];
        for (int a : h.arcs) {
          const auto& alt = arena_[static_cast<std::size_t>(a)];
          Path q{p.score - h.score + alt.score, order++, {}, p.features, i + 1};
          for (std::size_t f = 0; f < kNumFeatures; ++f) q.features[f] += alt.features[f] - h.features[f];
          q.chain.assign(p.chain.begin(), p.chain.begin() + static_cast<std::ptrdiff_t>(i));
          auto rest = back_chain(a);
          q.chain.insert(q.chain.end(), rest.begin(), rest.end());
          queue.push(std::move(q));
        }
      }
    }
    return out;
  }

 private:
  std::vector<int> back_chain(int hid) const {
    std::vector<int> chain;
    for (int cur = hid; cur >= 0; cur = arena_[static_cast<std::size_t>(cur)].parent) chain.push_back(cur);
    return chain;
  }

  DecodeResult result(const std::vector<int>& chain, double score, const FeatureVector& features) const {
    DecodeResult r;
    r.score = score;
    r.features = features;
    std::size_t last_end = 0;
    for (std::size_t k = chain.size() - 1; k-- > 0;) {
      const Hypothesis& step = arena_[static_cast<std::size_t>(chain[k])];
      const Option& o = options_[static_cast<std::size_t>(step.option)];
      PhraseStep ps;
      ps.start = o.start;
      ps.end = o.end;
      ps.target = o.target;
      ps.features = o.local;
      long jump = static_cast<long>(o.start) - static_cast<long>(last_end);
      ps.features[kDistortion] = -static_cast<double>(std::labs(jump));
      NgramLanguageModel::State state = arena_[static_cast<std::size_t>(chain[k + 1])].lm_state, tmp;
      for (WordId w : o.ids) {
        ps.features[kLanguageModel] += lm_.advance(state, w, tmp);
        state.swap(tmp);
      }
      last_end = o.end;
      r.target.insert(r.target.end(), o.target.begin(), o.target.end());
      r.trace.push_back(std::move(ps));
    }
    return r;
  }

  void finish(Hypothesis& h) const {
    NgramLanguageModel::State tmp;
    h.features[kLanguageModel] += lm_.advance(h.lm_state, lm_.eos(), tmp);
    h.lm_state = std::move(tmp);
  }

  void insert(Hypothesis h, std::vector<int>& stack, std::unordered_map<std::string, int>& keys) {
    auto key = recombination_key(h);
    auto it = keys.find(key);
    if (it != keys.end()) {
      auto id = static_cast<std::size_t>(it->second);
      if (h.score > arena_[id].score) {
        h.arcs = std::move(arena_[id].arcs);
        arena_[id].arcs.clear();
        std::swap(arena_[id], h);
      }
      arena_.push_back(std::move(h));
      arena_[id].arcs.push_back(static_cast<int>(arena_.size() - 1));
      return;
    }
    arena_.push_back(std::move(h));
    int id = static_cast<int>(arena_.size() - 1);
    keys.emplace(std::move(key), id);
    stack.push_back(id);
  }

  void prune(std::vector<int>& stack, std::size_t limit) {
    if (stack.size() <= limit) return;
    std::stable_sort(stack.begin(), stack.end(), [&](int a, int b) {
      const auto& ha = arena_[static_cast<std::size_t>(a)];
      const auto& hb = arena_[static_cast<std::size_t>(b)];
      return ha.score + ha.future > hb.score + hb.future;
    });
    stack.resize(std::max<std::size_t>(limit, 1));
  }

  void build_future_costs() {
    future_.assign(n_ + 1, std::vector<double>(n_ + 1, kNegInf));
    for (const auto& o : options_) {
      FeatureVector f = o.local;
      std::vector<WordId> ctx;
      for (WordId w : o.ids) {
        f[kLanguageModel] += lm_.log_prob(ctx, w);
        ctx.push_back(w);
      }
      future_[o.start][o.end] = std::max(future_[o.start][o.end], weights_.score(f));
    }
    for (std::size_t len = 2; len <= n_; ++len) {
      for (std::size_t i = 0; i + len <= n_; ++i) {
        std::size_t j = i + len;
        for (std::size_t m = i + 1; m < j; ++m) {
          future_[i][j] = std::max(future_[i][j], future_[i][m] + future_[m][j]);
        }
      }
    }
  }

  double future_of(const std::vector<bool>& coverage) const {
    double total = 0.0;
    std::size_t i = 0;
    while (i < n_) {
      if (coverage[i]) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < n_ && !coverage[j]) ++j;
      total += future_[i][j];
      i = j;
    }
    return total;
  }

  const AnnotatedInput& input_;
  const NgramLanguageModel& lm_;
  const LogLinearWeights& weights_;
  std::size_t n_;
  std::vector<Option> options_;
  std::vector<std::vector<double>> future_;
  std::vector<Hypothesis> arena_;
};

std::vector<DecodeResult> run_search(const AnnotatedInput& input, const PhraseTable& table,
                                     const NgramLanguageModel& lm, const LogLinearWeights& weights,
                                     const BeamConfig& beam, std::size_t n) {
  if (!weights.finite()) throw ValidationError("non-finite decoder weights");
  Search search(input, table, lm, weights);
  auto finals = search.run(beam);
  if (finals.empty()) {
    // Pruning can strand every hypothesis behind the distortion limit.
    BeamConfig relaxed = beam;
    relaxed.distortion_limit = -1;
    finals = search.run(relaxed);
  }
  return search.nbest(finals, n);
}

}  // namespace

DecodeResult decode(const AnnotatedInput& input, const PhraseTable& table, const NgramLanguageModel& lm,
                    const LogLinearWeights& weights, const BeamConfig& beam) {
  auto results = run_search(input, table, lm, weights, beam, 1);
  if (results.empty()) throw Error("decoder produced no complete hypothesis");
  return std::move(results.front());
}

std::vector<DecodeResult> decode_nbest(const AnnotatedInput& input, const PhraseTable& table,
                                       const NgramLanguageModel& lm, const LogLinearWeights& weights,
                                       const BeamConfig& beam, std::size_t n) {
  return run_search(input, table, lm, weights, beam, n);
}

}  // namespace termforge
