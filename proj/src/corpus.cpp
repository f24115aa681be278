#include "termforge/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "termforge/error.hpp"
#include "termforge/io.hpp"

namespace termforge {

namespace {

bool is_ascii_punct(unsigned char c) {
  return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
         (c >= 0x7B && c <= 0x7E);
}

std::string join_key(const Tokens& tokens) { return io::join(tokens, " "); }

}  // namespace

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto c = static_cast<unsigned char>(out[i]);
    if (c >= 'A' && c <= 'Z') {
      out[i] = static_cast<char>(c + 32);
    } else if (c == 0xC3 && i + 1 < out.size()) {
      // Latin-1 supplement capitals U+00C0..U+00DE, except U+00D7 (multiplication sign).
      auto d = static_cast<unsigned char>(out[i + 1]);
      if (d >= 0x80 && d <= 0x9E && d != 0x97) out[i + 1] = static_cast<char>(d + 0x20);
      ++i;
    }
  }
  return out;
}

Tokens tokenize(std::string_view line, const Normalization& norm) {
  Tokens out;
  std::string text = norm.lowercase ? lowercase(line) : std::string(line);
  for (const auto& chunk : io::split_whitespace(text)) {
    std::size_t first = 0;
    while (first < chunk.size() && is_ascii_punct(static_cast<unsigned char>(chunk[first]))) ++first;
    if (first == chunk.size()) {
      for (char c : chunk) out.emplace_back(1, c);
      continue;
    }
    std::size_t last = chunk.size();
    while (last > first && is_ascii_punct(static_cast<unsigned char>(chunk[last - 1]))) --last;
    for (std::size_t i = 0; i < first; ++i) out.emplace_back(1, chunk[i]);
    out.push_back(chunk.substr(first, last - first));
    for (std::size_t i = last; i < chunk.size(); ++i) out.emplace_back(1, chunk[i]);
  }
  return out;
}

std::vector<Tokens> ParallelCorpus::sources() const {
  std::vector<Tokens> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.source);
  return out;
}

std::vector<Tokens> ParallelCorpus::targets() const {
  std::vector<Tokens> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.target);
  return out;
}

ParallelCorpus ParallelCorpus::inverted() const {
  ParallelCorpus out;
  out.name = name;
  out.pairs.reserve(pairs.size());
  for (const auto& p : pairs) out.pairs.push_back({p.target, p.source});
  return out;
}

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path, const Normalization& norm,
                             std::string name) {
  auto src = io::read_lines(source_path);
  auto tgt = io::read_lines(target_path);
  if (src.size() != tgt.size()) {
    throw AlignmentError(fmt::format("{} has {} lines but {} has {}", source_path.string(),
                                     src.size(), target_path.string(), tgt.size()));
  }
  if (src.empty()) throw EmptyCorpusError("empty corpus: " + source_path.string());
  ParallelCorpus corpus;
  corpus.name = name.empty() ? source_path.stem().string() : std::move(name);
  corpus.pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    corpus.pairs.push_back({tokenize(src[i], norm), tokenize(tgt[i], norm)});
  }
  return corpus;
}

std::string format_side(const std::vector<Tokens>& side) {
  std::string out;
  for (const auto& s : side) {
    out += io::join(s);
    out += '\n';
  }
  return out;
}

const TermCandidate& LexiconEntry::best() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].score.value_or(0.0) > candidates[best].score.value_or(0.0)) best = i;
  }
  return candidates.at(best);
}

void Lexicon::add(const Tokens& source, TermCandidate candidate) {
  auto [it, inserted] = index_.emplace(join_key(source), entries_.size());
  if (!inserted) {
    entries_[it->second].candidates.push_back(std::move(candidate));
    return;
  }
  entries_.push_back({source, {std::move(candidate)}});
}

const LexiconEntry* Lexicon::find(const Tokens& source) const {
  auto it = index_.find(join_key(source));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::size_t Lexicon::max_source_length() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n = std::max(n, e.source.size());
  return n;
}

Lexicon parse_lexicon(std::string_view text, const Normalization& norm) {
  Lexicon lex;
  auto lines = io::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (io::trim(line).empty() || line.front() == '#') continue;
    auto fields = io::split(line, '\t');
    if (fields.size() < 2 || fields.size() > 4) {
      throw ParseError(fmt::format("expected 2-4 tab-separated fields, got {}", fields.size()), i + 1);
    }
    auto source = tokenize(fields[0], norm);
    TermCandidate cand;
    cand.tokens = tokenize(fields[1], norm);
    if (source.empty() || cand.tokens.empty()) throw ParseError("empty term", i + 1);
    if (fields.size() >= 3 && !io::trim(fields[2]).empty()) {
      double score = 0.0;
      try {
        score = io::parse_double(fields[2]);
      } catch (const ParseError&) {
        throw ParseError("bad score '" + fields[2] + "'", i + 1);
      }
      if (!(score >= 0.0 && score <= 1.0)) {
        throw ValidationError(fmt::format("score {} outside [0,1] (line {})", fields[2], i + 1));
      }
      cand.score = score;
    }
    if (fields.size() == 4) cand.abstract = fields[3];
    lex.add(source, std::move(cand));
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path, const Normalization& norm) {
  return parse_lexicon(io::read_file(path), norm);
}

std::string format_lexicon(const Lexicon& lexicon) {
  std::string out;
  for (const auto& e : lexicon.entries()) {
    for (const auto& c : e.candidates) {
      out += io::join(e.source);
      out += '\t';
      out += io::join(c.tokens);
      if (c.score || c.abstract) {
        out += '\t';
        if (c.score) out += io::format_double(*c.score);
      }
      if (c.abstract) {
        out += '\t';
        out += *c.abstract;
      }
      out += '\n';
    }
  }
  return out;
}

CorpusStats corpus_stats(const ParallelCorpus& corpus) {
  CorpusStats stats;
  stats.line_count = corpus.size();
  std::unordered_set<std::string> src_vocab, tgt_vocab;
  for (const auto& p : corpus.pairs) {
    stats.words.source += p.source.size();
    stats.words.target += p.target.size();
    for (const auto& t : p.source) src_vocab.insert(lowercase(t));
    for (const auto& t : p.target) tgt_vocab.insert(lowercase(t));
  }
  stats.vocab.source = src_vocab.size();
  stats.vocab.target = tgt_vocab.size();
  return stats;
}

namespace {

// Maps every distinct eval term to the sorted list of reference pair indices
// whose sentence on that side contains it.
std::unordered_map<std::string, std::vector<std::uint32_t>> locate_terms(
    const std::set<Tokens>& terms, const ParallelCorpus& reference, bool source_side,
    TermMatch mode) {
  std::unordered_map<std::string, std::vector<std::uint32_t>> hits;
  std::unordered_set<std::string> wanted;
  std::size_t max_len = 0;
  for (const auto& t : terms) {
    wanted.insert(join_key(t));
    max_len = std::max(max_len, t.size());
  }
  for (std::uint32_t idx = 0; idx < reference.pairs.size(); ++idx) {
    const auto& sent = source_side ? reference.pairs[idx].source : reference.pairs[idx].target;
    if (mode == TermMatch::ExactEntry) {
      auto key = join_key(sent);
      if (wanted.count(key)) hits[key].push_back(idx);
      continue;
    }
    for (std::size_t i = 0; i < sent.size(); ++i) {
      std::string key;
      for (std::size_t n = 1; n <= max_len && i + n <= sent.size(); ++n) {
        if (n > 1) key += ' ';
        key += sent[i + n - 1];
        if (wanted.count(key)) {
          auto& v = hits[key];
          if (v.empty() || v.back() != idx) v.push_back(idx);
        }
      }
    }
  }
  return hits;
}

SideOverlap side_overlap(const std::vector<Tokens>& eval_side, const std::vector<Tokens>& ref_side,
                         const std::unordered_map<std::string, std::vector<std::uint32_t>>& hits) {
  SideOverlap out;
  Vocabulary ref_vocab;
  for (const auto& s : ref_side) ref_vocab.insert(s.begin(), s.end());
  std::set<std::string> words;
  std::set<Tokens> terms;
  for (const auto& s : eval_side) {
    words.insert(s.begin(), s.end());
    if (!s.empty()) terms.insert(s);
  }
  for (const auto& w : words) (ref_vocab.count(w) ? out.words.in_corpus : out.words.oov)++;
  for (const auto& t : terms) (hits.count(join_key(t)) ? out.terms.in_corpus : out.terms.oov)++;
  return out;
}

}  // namespace

OverlapReport overlap_report(const ParallelCorpus& eval_set, const ParallelCorpus& reference,
                             TermMatch mode) {
  std::set<Tokens> src_terms, tgt_terms;
  std::set<std::pair<Tokens, Tokens>> joint;
  for (const auto& p : eval_set.pairs) {
    if (!p.source.empty()) src_terms.insert(p.source);
    if (!p.target.empty()) tgt_terms.insert(p.target);
    if (!p.source.empty() && !p.target.empty()) joint.insert({p.source, p.target});
  }
  auto src_hits = locate_terms(src_terms, reference, true, mode);
  auto tgt_hits = locate_terms(tgt_terms, reference, false, mode);

  OverlapReport report;
  report.source = side_overlap(eval_set.sources(), reference.sources(), src_hits);
  report.target = side_overlap(eval_set.targets(), reference.targets(), tgt_hits);
  for (const auto& [s, t] : joint) {
    auto a = src_hits.find(join_key(s));
    auto b = tgt_hits.find(join_key(t));
    bool found = false;
    if (a != src_hits.end() && b != tgt_hits.end()) {
      std::vector<std::uint32_t> both;
      std::set_intersection(a->second.begin(), a->second.end(), b->second.begin(), b->second.end(),
                            std::back_inserter(both));
      found = !both.empty();
    }
    (found ? report.joint_terms.in_corpus : report.joint_terms.oov)++;
  }
  return report;
}

std::pair<OverlapCounts, OverlapCounts> vocabulary_coverage(const ParallelCorpus& eval_set,
                                                            const Vocabulary& source_vocab,
                                                            const Vocabulary& target_vocab) {
  std::set<std::string> src, tgt;
  for (const auto& p : eval_set.pairs) {
    src.insert(p.source.begin(), p.source.end());
    tgt.insert(p.target.begin(), p.target.end());
  }
  OverlapCounts a, b;
  for (const auto& w : src) (source_vocab.count(w) ? a.in_corpus : a.oov)++;
  for (const auto& w : tgt) (target_vocab.count(w) ? b.in_corpus : b.oov)++;
  return {a, b};
}

std::string format_stats(const std::string& name, const CorpusStats& stats) {
  return fmt::format(
      "[{}]\nlines = {}\nwords.source = {}\nwords.target = {}\nvocab.source = {}\nvocab.target = {}\n",
      name, stats.line_count, stats.words.source, stats.words.target, stats.vocab.source,
      stats.vocab.target);
}

std::string format_overlap(const std::string& name, const OverlapReport& r) {
  auto side = [](const char* label, const SideOverlap& s) {
    return fmt::format(
        "words.{0}.in_corpus = {1}\nwords.{0}.oov = {2}\nwords.{0}.coverage = {3:.2f}\n"
        "terms.{0}.in_corpus = {4}\nterms.{0}.oov = {5}\n",
        label, s.words.in_corpus, s.words.oov, s.words.coverage_percent(), s.terms.in_corpus,
        s.terms.oov);
  };
  return fmt::format("[{}]\n{}{}terms.joint.in_corpus = {}\nterms.joint.oov = {}\n", name,
                     side("source", r.source), side("target", r.target), r.joint_terms.in_corpus,
                     r.joint_terms.oov);
}

}  // namespace termforge
