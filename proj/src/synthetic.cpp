#include "termforge/synthetic.hpp"

#include <algorithm>

#include "termforge/io.hpp"

namespace termforge::synthetic {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    std::swap(v[i - 1], v[j]);
  }
}

struct WordPair {
  std::string source;
  std::string target;
};

std::vector<WordPair> word_pairs(WordGenerator& src, WordGenerator& tgt, int count) {
  std::vector<WordPair> out;
  for (int k = 0; k < count; ++k) out.push_back({src.next(), tgt.next()});
  return out;
}

void add(ParallelCorpus& c, Tokens s, Tokens t) { c.pairs.push_back({std::move(s), std::move(t)}); }

}  // namespace

std::string WordGenerator::next(int min_syllables, int max_syllables) {
  while (true) {
    std::string w;
    int n = uniform_int(rng_, min_syllables, max_syllables);
    for (int s = 0; s < n; ++s) {
      w += kConsonants[static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(kConsonants.size()) - 1))];
      w += kVowels[static_cast<std::size_t>(uniform_int(rng_, 0, static_cast<int>(kVowels.size()) - 1))];
    }
    if (used_.insert(w).second) return w;
  }
}

TwoDomainFixture two_domains(std::uint64_t seed, const TwoDomainOptions& options) {
  std::mt19937_64 rng(seed);
  WordGenerator src_words(rng), tgt_words(rng);
  TwoDomainFixture fx;
  fx.generic.name = "generic";
  fx.dev_a.name = "dev_a";
  fx.eval_a.name = "eval_a";
  fx.dev_b.name = "dev_b";
  fx.eval_b.name = "eval_b";

  std::vector<std::string> a_targets, b_targets;
  for (int domain = 0; domain < 2; ++domain) {
    auto mods = word_pairs(src_words, tgt_words, options.modifiers);
    auto heads = word_pairs(src_words, tgt_words, options.heads);
    std::vector<std::pair<int, int>> combos;
    for (int m = 0; m < options.modifiers; ++m) {
      for (int h = 0; h < options.heads; ++h) combos.emplace_back(m, h);
    }
    shuffle(combos, rng);
    for (std::size_t k = 0; k < combos.size(); ++k) {
      const auto& mod = mods[static_cast<std::size_t>(combos[k].first)];
      const auto& head = heads[static_cast<std::size_t>(combos[k].second)];
      Tokens source{mod.source, head.source};
      Tokens analytic{head.target, "von", mod.target};
      Tokens compound{mod.target, head.target};
      for (int c = 0; c < options.generic_analytic; ++c) add(fx.generic, source, analytic);
      for (int c = 0; c < options.generic_compound; ++c) add(fx.generic, source, compound);
      const Tokens& reference = domain == 0 ? compound : analytic;
      auto& dev = domain == 0 ? fx.dev_a : fx.dev_b;
      auto& eval = domain == 0 ? fx.eval_a : fx.eval_b;
      if (k < static_cast<std::size_t>(options.dev_terms)) {
        add(dev, source, reference);
      } else if (k < static_cast<std::size_t>(options.dev_terms + options.eval_terms)) {
        add(eval, source, reference);
      }
      (domain == 0 ? a_targets : b_targets).push_back(reference.front());
    }
    for (const auto* group : {&mods, &heads}) {
      for (const auto& w : *group) {
        for (int c = 0; c < options.generic_singles; ++c) add(fx.generic, {w.source}, {w.target});
      }
    }
    if (domain == 0) {
      for (const auto& head : heads) {
        std::string decoy = tgt_words.next();
        TermCandidate right{{head.target}, std::nullopt, std::nullopt};
        TermCandidate wrong{{decoy}, std::nullopt, std::nullopt};
        fx.lexicon_a.add({head.source}, wrong);
        fx.lexicon_a.add({head.source}, right);
      }
    }
  }
  // Abstracts: domain-A vocabulary for the right sense, domain-B vocabulary for the decoy.
  for (auto& entry : fx.lexicon_a.entries()) {
    auto& wrong = entry.candidates[0];
    auto& right = entry.candidates[1];
    Tokens a_words, b_words;
    for (int k = 0; k < 6; ++k) {
      a_words.push_back(a_targets[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(a_targets.size()) - 1))]);
      b_words.push_back(b_targets[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(b_targets.size()) - 1))]);
    }
    right.abstract = io::join(a_words);
    wrong.abstract = io::join(b_words);
  }
  shuffle(fx.generic.pairs, rng);
  return fx;
}

CompoundFixture compounds(std::uint64_t seed, const CompoundOptions& options) {
  std::mt19937_64 rng(seed);
  WordGenerator src_words(rng), tgt_words(rng);
  auto mods = word_pairs(src_words, tgt_words, options.modifiers);
  std::vector<WordPair> prefixes, suffixes;
  for (int k = 0; k < options.prefixes; ++k) prefixes.push_back({src_words.next(1, 2), tgt_words.next(1, 2)});
  for (int k = 0; k < options.suffixes; ++k) suffixes.push_back({src_words.next(1, 2), tgt_words.next(1, 2)});

  std::vector<std::pair<int, int>> combos;
  for (int p = 0; p < options.prefixes; ++p) {
    for (int s = 0; s < options.suffixes; ++s) combos.emplace_back(p, s);
  }
  shuffle(combos, rng);
  CompoundFixture fx;
  fx.train.name = "compound_train";
  fx.eval.name = "compound_eval";
  for (std::size_t k = 0; k < combos.size(); ++k) {
    const auto& pre = prefixes[static_cast<std::size_t>(combos[k].first)];
    const auto& suf = suffixes[static_cast<std::size_t>(combos[k].second)];
    bool held_out = k < static_cast<std::size_t>(options.held_out);
    int copies = held_out ? 1 : options.copies;
    for (int c = 0; c < copies; ++c) {
      const auto& mod = mods[static_cast<std::size_t>(uniform_int(rng, 0, options.modifiers - 1))];
      add(held_out ? fx.eval : fx.train, {mod.source, pre.source + suf.source}, {mod.target, pre.target + suf.target});
    }
  }
  for (const auto& group : {mods, prefixes, suffixes}) {
    for (const auto& w : group) {
      for (int c = 0; c < options.singles; ++c) add(fx.train, {w.source}, {w.target});
    }
  }
  shuffle(fx.train.pairs, rng);
  return fx;
}

ParallelCorpus copy_task(std::uint64_t seed, int pairs, int vocab, int min_len, int max_len) {
  std::mt19937_64 rng(seed);
  ParallelCorpus c;
  c.name = "copy";
  for (int k = 0; k < pairs; ++k) {
    Tokens t;
    int len = uniform_int(rng, min_len, max_len);
    for (int i = 0; i < len; ++i) t.push_back("w" + std::to_string(uniform_int(rng, 0, vocab - 1)));
    add(c, t, t);
  }
  return c;
}

void write_two_domains(const TwoDomainFixture& fx, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto* c : {&fx.generic, &fx.dev_a, &fx.eval_a, &fx.dev_b, &fx.eval_b}) {
    io::write_file_atomic(dir / (c->name + ".src"), format_side(c->sources()));
    io::write_file_atomic(dir / (c->name + ".tgt"), format_side(c->targets()));
  }
  io::write_file_atomic(dir / "lexicon_a.tsv", format_lexicon(fx.lexicon_a));
}

}  // namespace termforge::synthetic
