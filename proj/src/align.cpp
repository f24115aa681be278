#include "termforge/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "termforge/error.hpp"
#include "termforge/io.hpp"

namespace termforge {

double TranslationTable::prob(const std::string& target, const std::string& source) const {
  auto s = by_source_.find(source);
  if (s == by_source_.end()) return 0.0;
  auto t = s->second.find(target);
  return t == s->second.end() ? 0.0 : t->second;
}

void TranslationTable::set(const std::string& target, const std::string& source, double p) {
  by_source_[source][target] = p;
}

double TranslationTable::log_likelihood(const ParallelCorpus& corpus) const {
  const std::string null(kNull);
  double ll = 0.0;
  for (const auto& pair : corpus.pairs) {
    const double norm = static_cast<double>(pair.source.size() + 1);
    for (const auto& t : pair.target) {
      double sum = prob(t, null);
      for (const auto& s : pair.source) sum += prob(t, s);
      ll += std::log(sum / norm);
    }
  }
  return ll;
}

namespace {

struct Interned {
  std::vector<std::string> words;
  std::unordered_map<std::string, std::uint32_t> ids;

  std::uint32_t operator()(const std::string& w) {
    auto [it, inserted] = ids.emplace(w, static_cast<std::uint32_t>(words.size()));
    if (inserted) words.push_back(w);
    return it->second;
  }
};

}  // namespace

TranslationTable ibm1_em(const ParallelCorpus& corpus, int iterations, EmTrace* trace) {
  if (corpus.empty()) throw EmptyCorpusError("IBM Model 1 needs a non-empty corpus");
  if (iterations < 1) throw ValidationError("IBM Model 1 needs at least one iteration");

  Interned src, tgt;
  const std::uint32_t null_id = src(std::string(TranslationTable::kNull));
  std::vector<std::vector<std::uint32_t>> S, T;
  for (const auto& p : corpus.pairs) {
    std::vector<std::uint32_t> s{null_id}, t;
    for (const auto& w : p.source) s.push_back(src(w));
    for (const auto& w : p.target) t.push_back(tgt(w));
    S.push_back(std::move(s));
    T.push_back(std::move(t));
  }

  // t[s][t] over co-occurring pairs only; initialised uniform per source word.
  std::vector<std::unordered_map<std::uint32_t, double>> table(src.words.size());
  for (std::size_t k = 0; k < S.size(); ++k) {
    for (auto s : S[k]) {
      for (auto t : T[k]) table[s].emplace(t, 0.0);
    }
  }
  for (auto& row : table) {
    for (auto& [t, p] : row) p = 1.0 / static_cast<double>(row.size());
  }

  auto likelihood = [&] {
    double ll = 0.0;
    for (std::size_t k = 0; k < S.size(); ++k) {
      for (auto t : T[k]) {
        double sum = 0.0;
        for (auto s : S[k]) sum += table[s].at(t);
        ll += std::log(sum / static_cast<double>(S[k].size()));
      }
    }
    return ll;
  };
  if (trace) trace->log_likelihood.push_back(likelihood());

  std::vector<std::unordered_map<std::uint32_t, double>> counts(src.words.size());
  for (int it = 0; it < iterations; ++it) {
    for (auto& row : counts) {
      for (auto& [t, c] : row) c = 0.0;
    }
    std::vector<double> totals(src.words.size(), 0.0);
    for (std::size_t k = 0; k < S.size(); ++k) {
      for (auto t : T[k]) {
        double denom = 0.0;
        for (auto s : S[k]) denom += table[s].at(t);
        for (auto s : S[k]) {
          double share = table[s].at(t) / denom;
          counts[s][t] += share;
          totals[s] += share;
        }
      }
    }
    for (std::size_t s = 0; s < table.size(); ++s) {
      if (totals[s] <= 0.0) continue;
      for (auto& [t, p] : table[s]) p = counts[s][t] / totals[s];
    }
    if (trace) trace->log_likelihood.push_back(likelihood());
  }

  TranslationTable out;
  for (std::size_t s = 0; s < table.size(); ++s) {
    for (const auto& [t, p] : table[s]) out.set(tgt.words[t], src.words[s], p);
  }
  return out;
}

Alignment viterbi_align(const TranslationTable& table, const SentencePair& pair) {
  const std::string null(TranslationTable::kNull);
  Alignment links;
  if (pair.source.empty()) return links;
  for (std::size_t j = 0; j < pair.target.size(); ++j) {
    std::size_t best = 0;
    double best_p = table.prob(pair.target[j], pair.source[0]);
    for (std::size_t i = 1; i < pair.source.size(); ++i) {
      double p = table.prob(pair.target[j], pair.source[i]);
      if (p > best_p) {
        best = i;
        best_p = p;
      }
    }
    if (table.prob(pair.target[j], null) > best_p) continue;
    links.emplace(best, j);
  }
  return links;
}

Symmetrization parse_symmetrization(std::string_view name) {
  if (name == "intersection") return Symmetrization::Intersection;
  if (name == "union") return Symmetrization::Union;
  if (name == "grow-diag") return Symmetrization::GrowDiag;
  throw ValidationError("unknown symmetrization '" + std::string(name) + "'");
}

Alignment symmetrize(const Alignment& forward, const Alignment& backward, Symmetrization mode) {
  Alignment inter, uni;
  std::set_intersection(forward.begin(), forward.end(), backward.begin(), backward.end(),
                        std::inserter(inter, inter.end()));
  std::set_union(forward.begin(), forward.end(), backward.begin(), backward.end(),
                 std::inserter(uni, uni.end()));
  if (mode == Symmetrization::Intersection) return inter;
  if (mode == Symmetrization::Union) return uni;

  Alignment grown = inter;
  std::set<std::size_t> src_aligned, tgt_aligned;
  for (const auto& [i, j] : grown) {
    src_aligned.insert(i);
    tgt_aligned.insert(j);
  }
  static constexpr int kNeighbours[8][2] = {{-1, 0}, {0, -1}, {1, 0}, {0, 1},
                                            {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  bool added = true;
  while (added) {
    added = false;
    const Alignment snapshot = grown;
    for (const auto& [i, j] : snapshot) {
      for (const auto& d : kNeighbours) {
        auto ni = static_cast<long long>(i) + d[0];
        auto nj = static_cast<long long>(j) + d[1];
        if (ni < 0 || nj < 0) continue;
        Link cand{static_cast<std::size_t>(ni), static_cast<std::size_t>(nj)};
        if (!uni.count(cand) || grown.count(cand)) continue;
        if (src_aligned.count(cand.first) && tgt_aligned.count(cand.second)) continue;
        grown.insert(cand);
        src_aligned.insert(cand.first);
        tgt_aligned.insert(cand.second);
        added = true;
      }
    }
  }
  return grown;
}

Alignment align_pair(const TranslationTable& forward, const TranslationTable& backward,
                     const SentencePair& pair, Symmetrization mode) {
  auto fwd = viterbi_align(forward, pair);
  Alignment bwd;
  for (const auto& [j, i] : viterbi_align(backward, {pair.target, pair.source})) bwd.emplace(i, j);
  return symmetrize(fwd, bwd, mode);
}

void PhraseTable::add(const Tokens& source, PhraseOption option) {
  max_len_ = std::max(max_len_, source.size());
  entries_[source].push_back(std::move(option));
}

const std::vector<PhraseOption>* PhraseTable::find(const Tokens& source) const {
  auto it = entries_.find(source);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t PhraseTable::size() const {
  std::size_t n = 0;
  for (const auto& [s, opts] : entries_) n += opts.size();
  return n;
}

std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>>
consistent_phrase_spans(const Alignment& alignment, std::size_t source_len, std::size_t target_len,
                        std::size_t max_phrase_len) {
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>>> out;
  std::vector<bool> tgt_aligned(target_len, false);
  for (const auto& [i, j] : alignment) tgt_aligned.at(j) = true;

  for (std::size_t s1 = 0; s1 < source_len; ++s1) {
    for (std::size_t s2 = s1; s2 < source_len && s2 - s1 + 1 <= max_phrase_len; ++s2) {
      std::size_t tmin = std::numeric_limits<std::size_t>::max(), tmax = 0;
      bool any = false;
      for (const auto& [i, j] : alignment) {
        if (i >= s1 && i <= s2) {
          tmin = std::min(tmin, j);
          tmax = std::max(tmax, j);
          any = true;
        }
      }
      if (!any || tmax - tmin + 1 > max_phrase_len) continue;
      bool consistent = true;
      for (const auto& [i, j] : alignment) {
        if (j >= tmin && j <= tmax && (i < s1 || i > s2)) {
          consistent = false;
          break;
        }
      }
      if (!consistent) continue;
      // Grow the target side over unaligned neighbours.
      for (std::size_t ts = tmin + 1; ts-- > 0;) {
        if (ts < tmin && tgt_aligned[ts]) break;
        for (std::size_t te = tmax; te < target_len; ++te) {
          if (te > tmax && tgt_aligned[te]) break;
          if (te - ts + 1 > max_phrase_len) break;
          out.push_back({{s1, s2}, {ts, te}});
        }
      }
    }
  }
  return out;
}

namespace {

double lexical_weight(const Tokens& out_words, std::size_t out_begin, std::size_t out_end,
                      const Tokens& in_words, const std::vector<std::vector<std::size_t>>& links_of_out,
                      const TranslationTable& table) {
  const std::string null(TranslationTable::kNull);
  double w = 1.0;
  for (std::size_t j = out_begin; j <= out_end; ++j) {
    const auto& links = links_of_out[j];
    if (links.empty()) {
      w *= table.prob(out_words[j], null);
      continue;
    }
    double sum = 0.0;
    for (auto i : links) sum += table.prob(out_words[j], in_words[i]);
    w *= sum / static_cast<double>(links.size());
  }
  return w;
}

double clamp_feature(double v) { return std::clamp(v, PhraseTable::kFloor, 1.0); }

}  // namespace

PhraseTable extract_phrases(const ParallelCorpus& corpus, const std::vector<Alignment>& alignments,
                            std::size_t max_phrase_len, const TranslationTable& forward,
                            const TranslationTable& backward) {
  if (alignments.size() != corpus.size()) throw ValidationError("alignments do not cover the corpus");
  struct Stats {
    double count = 0.0;
    double lex_ts = 0.0;
    double lex_st = 0.0;
  };
  std::map<std::pair<Tokens, Tokens>, Stats> pairs;
  std::map<Tokens, double> src_count, tgt_count;

  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& sp = corpus.pairs[k];
    const auto& a = alignments[k];
    for (const auto& [i, j] : a) {
      if (i >= sp.source.size() || j >= sp.target.size()) throw ValidationError("alignment link out of range");
    }
    for (const auto& [sspan, tspan] : consistent_phrase_spans(a, sp.source.size(), sp.target.size(), max_phrase_len)) {
      Tokens s(sp.source.begin() + static_cast<std::ptrdiff_t>(sspan.first),
               sp.source.begin() + static_cast<std::ptrdiff_t>(sspan.second + 1));
      Tokens t(sp.target.begin() + static_cast<std::ptrdiff_t>(tspan.first),
               sp.target.begin() + static_cast<std::ptrdiff_t>(tspan.second + 1));
      // Links restricted to the box, indexed by position in the sentence.
      std::vector<std::vector<std::size_t>> tgt_links(sp.target.size()), src_links(sp.source.size());
      for (const auto& [i, j] : a) {
        if (i >= sspan.first && i <= sspan.second && j >= tspan.first && j <= tspan.second) {
          tgt_links[j].push_back(i);
          src_links[i].push_back(j);
        }
      }
      double lts = lexical_weight(sp.target, tspan.first, tspan.second, sp.source, tgt_links, forward);
      double lst = lexical_weight(sp.source, sspan.first, sspan.second, sp.target, src_links, backward);
      auto& st = pairs[{s, t}];
      st.count += 1.0;
      st.lex_ts = std::max(st.lex_ts, lts);
      st.lex_st = std::max(st.lex_st, lst);
      src_count[s] += 1.0;
      tgt_count[t] += 1.0;
    }
  }

  PhraseTable table;
  for (const auto& [key, st] : pairs) {
    const auto& [s, t] = key;
    PhraseOption opt;
    opt.target = t;
    opt.features = {clamp_feature(st.count / src_count[s]), clamp_feature(st.count / tgt_count[t]),
                    clamp_feature(st.lex_ts), clamp_feature(st.lex_st)};
    table.add(s, std::move(opt));
  }
  return table;
}

std::string format_phrase_table(const PhraseTable& table) {
  std::string out;
  for (const auto& [src, opts] : table.entries()) {
    for (const auto& o : opts) {
      out += fmt::format("{} ||| {} ||| {} {} {} {}\n", io::join(src), io::join(o.target),
                         io::format_double(o.features[0]), io::format_double(o.features[1]),
                         io::format_double(o.features[2]), io::format_double(o.features[3]));
    }
  }
  return out;
}

PhraseTable parse_phrase_table(std::string_view text) {
  PhraseTable table;
  auto lines = io::split(text, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = io::trim(lines[n]);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto pos = line.find("|||", start);
      fields.emplace_back(io::trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 3;
    }
    if (fields.size() != 3) throw ParseError("expected 'source ||| target ||| features'", n + 1);
    auto src = io::split_whitespace(fields[0]);
    PhraseOption opt;
    opt.target = io::split_whitespace(fields[1]);
    auto feats = io::split_whitespace(fields[2]);
    if (src.empty() || opt.target.empty() || feats.size() != 4) throw ParseError("malformed phrase-table line", n + 1);
    for (std::size_t k = 0; k < 4; ++k) {
      double v = io::parse_double(feats[k]);
      if (!(v > 0.0 && v <= 1.0)) throw ValidationError(fmt::format("feature outside (0,1] on line {}", n + 1));
      opt.features[k] = v;
    }
    table.add(src, std::move(opt));
  }
  return table;
}

PhraseTable load_phrase_table(const std::filesystem::path& path) { return parse_phrase_table(io::read_file(path)); }

}  // namespace termforge
