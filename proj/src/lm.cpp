#include "termforge/lm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "termforge/error.hpp"
#include "termforge/io.hpp"

namespace termforge {

namespace {

constexpr double kLn10 = 2.302585092994045684;
constexpr double kArpaLogZero = -99.0;

}  // namespace

std::size_t NgramLanguageModel::KeyHash::operator()(const std::vector<WordId>& k) const noexcept {
  std::size_t h = 1469598103934665603ULL;
  for (auto id : k) {
    h ^= id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

NgramLanguageModel::NgramLanguageModel(int order) : order_(order) {
  if (order < 1) throw ValidationError("language model order must be >= 1");
  tables_.resize(static_cast<std::size_t>(order));
  bos_ = intern(kBos);
  eos_ = intern(kEos);
  unk_ = intern(kUnk);
}

WordId NgramLanguageModel::intern(std::string_view token) {
  auto [it, inserted] = ids_.emplace(std::string(token), static_cast<WordId>(words_.size()));
  if (inserted) words_.emplace_back(token);
  return it->second;
}

WordId NgramLanguageModel::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_ : it->second;
}

std::vector<WordId> NgramLanguageModel::predictable() const {
  std::vector<WordId> out;
  for (WordId i = 0; i < words_.size(); ++i) {
    if (i != bos_) out.push_back(i);
  }
  return out;
}

void NgramLanguageModel::set(const std::vector<WordId>& ngram, Entry entry) {
  if (ngram.empty() || ngram.size() > static_cast<std::size_t>(order_)) {
    throw ValidationError("n-gram length outside model order");
  }
  tables_[ngram.size() - 1][ngram] = entry;
}

const NgramLanguageModel::Entry* NgramLanguageModel::find(const std::vector<WordId>& ngram) const {
  if (ngram.empty() || ngram.size() > tables_.size()) return nullptr;
  const auto& table = tables_[ngram.size() - 1];
  auto it = table.find(ngram);
  return it == table.end() ? nullptr : &it->second;
}

double NgramLanguageModel::log_prob(const std::vector<WordId>& context, WordId word) const {
  std::size_t max_ctx = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  double backoff = 0.0;
  std::vector<WordId> gram;
  for (std::size_t n = max_ctx + 1; n >= 1; --n) {
    gram.assign(context.end() - static_cast<std::ptrdiff_t>(n - 1), context.end());
    gram.push_back(word);
    if (const Entry* e = find(gram)) return backoff + e->log_prob;
    gram.pop_back();
    if (!gram.empty()) {
      if (const Entry* h = find(gram)) backoff += h->log_backoff;
    }
  }
  // Every predictable word has a unigram entry; this is only reached for ids
  // outside the vocabulary.
  const Entry* u = find({unk_});
  return backoff + (u ? u->log_prob : kArpaLogZero * kLn10);
}

NgramLanguageModel::State NgramLanguageModel::begin_state() const {
  if (order_ == 1) return {};
  return {bos_};
}

double NgramLanguageModel::advance(const State& state, WordId word, State& next) const {
  double lp = log_prob(state, word);
  next = state;
  next.push_back(word);
  auto keep = static_cast<std::size_t>(order_ - 1);
  if (next.size() > keep) next.erase(next.begin(), next.end() - static_cast<std::ptrdiff_t>(keep));
  return lp;
}

double NgramLanguageModel::score(const Tokens& tokens) const {
  State state = begin_state(), next;
  double total = 0.0;
  for (const auto& t : tokens) {
    total += advance(state, id(t), next);
    state.swap(next);
  }
  total += advance(state, eos_, next);
  return total;
}

NgramLanguageModel train_lm(const std::vector<Tokens>& sentences, int order) {
  if (sentences.empty()) throw EmptyCorpusError("cannot train a language model on an empty corpus");
  NgramLanguageModel lm(order);
  const auto N = static_cast<std::size_t>(order);

  using Counts = std::map<std::vector<WordId>, std::uint64_t>;
  std::vector<Counts> raw(N);
  for (const auto& s : sentences) {
    std::vector<WordId> seq{lm.bos()};
    for (const auto& t : s) seq.push_back(lm.intern(t));
    seq.push_back(lm.eos());
    for (std::size_t p = 1; p < seq.size(); ++p) {
      for (std::size_t n = 1; n <= N && n <= p + 1; ++n) {
        ++raw[n - 1][std::vector<WordId>(seq.begin() + static_cast<std::ptrdiff_t>(p + 1 - n),
                                         seq.begin() + static_cast<std::ptrdiff_t>(p + 1))];
      }
    }
  }

  // Adjusted counts: raw for the top order and for n-grams anchored at <s>,
  // otherwise the number of distinct left extensions.
  std::vector<Counts> adj(N);
  adj[N - 1] = raw[N - 1];
  for (std::size_t n = N - 1; n >= 1; --n) {
    for (const auto& [g, c] : raw[n - 1]) {
      if (g.front() == lm.bos()) adj[n - 1][g] = c;
    }
    for (const auto& [g, c] : raw[n]) {
      std::vector<WordId> suffix(g.begin() + 1, g.end());
      if (suffix.front() == lm.bos()) continue;
      ++adj[n - 1][suffix];
    }
  }

  std::vector<double> discount(N, 0.5);
  for (std::size_t n = 0; n < N; ++n) {
    std::uint64_t n1 = 0, n2 = 0;
    for (const auto& [g, c] : adj[n]) {
      if (c == 1) ++n1;
      else if (c == 2) ++n2;
    }
    if (n1 > 0 && n2 > 0) discount[n] = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
  }

  // Per-context totals and number of distinct continuations, per order.
  struct ContextStats {
    std::uint64_t total = 0;
    std::uint64_t types = 0;
  };
  std::vector<std::map<std::vector<WordId>, ContextStats>> contexts(N);
  for (std::size_t n = 0; n < N; ++n) {
    for (const auto& [g, c] : adj[n]) {
      auto& cs = contexts[n][std::vector<WordId>(g.begin(), g.end() - 1)];
      cs.total += c;
      ++cs.types;
    }
  }

  const double uniform = 1.0 / static_cast<double>(lm.vocab_size() - 1);

  // Interpolated probability, recursing to lower orders; memoised per n-gram.
  std::vector<std::map<std::vector<WordId>, double>> memo(N);
  auto prob = [&](auto&& self, const std::vector<WordId>& g) -> double {
    std::size_t n = g.size();
    if (n == 0) return uniform;
    auto& m = memo[n - 1];
    if (auto it = m.find(g); it != m.end()) return it->second;
    std::vector<WordId> lower(g.begin() + 1, g.end());
    double p;
    auto ctx_it = contexts[n - 1].find(std::vector<WordId>(g.begin(), g.end() - 1));
    if (ctx_it == contexts[n - 1].end()) {
      p = self(self, lower);
    } else {
      const auto& cs = ctx_it->second;
      double d = discount[n - 1];
      auto cit = adj[n - 1].find(g);
      double c = cit == adj[n - 1].end() ? 0.0 : static_cast<double>(cit->second);
      double total = static_cast<double>(cs.total);
      p = std::max(c - d, 0.0) / total + d * static_cast<double>(cs.types) / total * self(self, lower);
    }
    m.emplace(g, p);
    return p;
  };

  for (std::size_t n = 1; n <= N; ++n) {
    for (const auto& [g, c] : adj[n - 1]) lm.set(g, {std::log(prob(prob, g)), 0.0});
  }
  for (WordId w : lm.predictable()) {
    if (!lm.find({w})) lm.set({w}, {std::log(prob(prob, {w})), 0.0});
  }
  lm.set({lm.bos()}, {kArpaLogZero * kLn10, 0.0});

  // Backoff weight of each context: the discounted mass handed to the lower order.
  for (std::size_t n = 2; n <= N; ++n) {
    for (const auto& [h, cs] : contexts[n - 1]) {
      const auto* e = lm.find(h);
      if (!e) throw Error("internal: context missing from lower-order table");
      double gamma = discount[n - 1] * static_cast<double>(cs.types) / static_cast<double>(cs.total);
      lm.set(h, {e->log_prob, std::log(gamma)});
    }
  }
  return lm;
}

std::string format_arpa(const NgramLanguageModel& lm) {
  const int N = lm.order();
  std::string out = "\\data\\\n";
  std::vector<std::vector<std::pair<std::string, NgramLanguageModel::Entry>>> rows(static_cast<std::size_t>(N));
  lm.for_each([&](const std::vector<WordId>& g, const NgramLanguageModel::Entry& e) {
    std::string key;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i) key += ' ';
      key += lm.word(g[i]);
    }
    rows[g.size() - 1].emplace_back(std::move(key), e);
  });
  for (int n = 1; n <= N; ++n) out += fmt::format("ngram {}={}\n", n, rows[static_cast<std::size_t>(n - 1)].size());
  for (int n = 1; n <= N; ++n) {
    auto& section = rows[static_cast<std::size_t>(n - 1)];
    std::sort(section.begin(), section.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    out += fmt::format("\n\\{}-grams:\n", n);
    for (const auto& [key, e] : section) {
      double lp = e.log_prob / kLn10;
      if (lp < kArpaLogZero) lp = kArpaLogZero;
      if (n < N) {
        out += fmt::format("{:.10g}\t{}\t{:.10g}\n", lp, key, e.log_backoff / kLn10);
      } else {
        out += fmt::format("{:.10g}\t{}\n", lp, key);
      }
    }
  }
  out += "\n\\end\\\n";
  return out;
}

NgramLanguageModel parse_arpa(std::string_view text) {
  auto lines = io::split(text, '\n');
  std::size_t i = 0;
  auto skip_blank = [&] {
    while (i < lines.size() && io::trim(lines[i]).empty()) ++i;
  };
  skip_blank();
  if (i >= lines.size() || io::trim(lines[i]) != "\\data\\") throw ParseError("missing \\data\\ header", i + 1);
  ++i;
  std::vector<std::size_t> declared;
  while (i < lines.size() && io::trim(lines[i]).rfind("ngram ", 0) == 0) {
    auto spec = std::string(io::trim(lines[i]).substr(6));
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw ParseError("bad ngram count line", i + 1);
    auto n = std::stoul(spec.substr(0, eq));
    if (n != declared.size() + 1) throw ParseError("ngram counts out of order", i + 1);
    declared.push_back(std::stoul(spec.substr(eq + 1)));
    ++i;
  }
  if (declared.empty()) throw ParseError("no ngram counts", i + 1);
  NgramLanguageModel lm(static_cast<int>(declared.size()));
  for (std::size_t n = 1; n <= declared.size(); ++n) {
    skip_blank();
    auto header = fmt::format("\\{}-grams:", n);
    if (i >= lines.size() || io::trim(lines[i]) != header) throw ParseError("expected " + header, i + 1);
    ++i;
    for (std::size_t k = 0; k < declared[n - 1]; ++k, ++i) {
      if (i >= lines.size()) throw ParseError("truncated " + header + " section", i + 1);
      auto fields = io::split_whitespace(lines[i]);
      if (fields.size() != n + 1 && fields.size() != n + 2) throw ParseError("malformed n-gram line", i + 1);
      std::vector<WordId> g;
      for (std::size_t w = 1; w <= n; ++w) g.push_back(lm.intern(fields[w]));
      NgramLanguageModel::Entry e;
      e.log_prob = io::parse_double(fields[0]) * kLn10;
      if (fields.size() == n + 2) e.log_backoff = io::parse_double(fields[n + 1]) * kLn10;
      lm.set(g, e);
    }
  }
  skip_blank();
  if (i >= lines.size() || io::trim(lines[i]) != "\\end\\") throw ParseError("missing \\end\\", i + 1);
  return lm;
}

NgramLanguageModel load_arpa(const std::filesystem::path& path) { return parse_arpa(io::read_file(path)); }

}  // namespace termforge
