#include "termforge/bpe.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "termforge/error.hpp"
#include "termforge/io.hpp"

namespace termforge {

namespace {

std::string pair_key(const std::string& left, const std::string& right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key += left;
  key += '\x1f';
  key += right;
  return key;
}

std::vector<std::string> initial_symbols(std::string_view word) { return utf8_chars(word); }

}  // namespace

std::vector<std::string> utf8_chars(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    auto c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    if (i + len > word.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(word[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  return out;
}

bool bpe_pair_less(const BpeModel::Merge& a, const BpeModel::Merge& b) { return a < b; }

BpeModel::BpeModel(std::vector<Merge> merges, std::string marker)
    : merges_(std::move(merges)), marker_(std::move(marker)) {
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    if (!ranks_.emplace(pair_key(merges_[i].first, merges_[i].second), i).second) {
      throw ValidationError(fmt::format("duplicate merge '{} {}'", merges_[i].first, merges_[i].second));
    }
  }
}

std::ptrdiff_t BpeModel::rank(const std::string& left, const std::string& right) const {
  auto it = ranks_.find(pair_key(left, right));
  return it == ranks_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::vector<std::string> BpeModel::segment(std::string_view word) const {
  if (word.empty()) return {};
  auto symbols = initial_symbols(word);
  while (symbols.size() > 1) {
    std::ptrdiff_t best = -1;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto r = rank(symbols[i], symbols[i + 1]);
      if (r >= 0 && (best < 0 || r < best)) best = r;
    }
    if (best < 0) break;
    const auto& [left, right] = merges_[static_cast<std::size_t>(best)];
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
        next.push_back(left + right);
        ++i;
      } else {
        next.push_back(std::move(symbols[i]));
      }
    }
    symbols = std::move(next);
  }
  for (std::size_t i = 0; i + 1 < symbols.size(); ++i) symbols[i] += marker_;
  return symbols;
}

WordFrequencies word_frequencies(const std::vector<Tokens>& sentences) {
  WordFrequencies freq;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++freq[w];
  }
  return freq;
}

BpeModel learn_bpe(const WordFrequencies& words, std::size_t num_merges) {
  struct Word {
    std::vector<std::string> symbols;
    std::uint64_t freq;
  };
  std::vector<Word> vocab;
  for (const auto& [w, f] : words) {
    if (!w.empty() && f > 0) vocab.push_back({initial_symbols(w), f});
  }
  if (vocab.empty()) throw EmptyCorpusError("cannot learn BPE from an empty vocabulary");

  std::vector<BpeModel::Merge> merges;
  std::set<std::string> learned;
  while (merges.size() < num_merges) {
    std::map<BpeModel::Merge, std::uint64_t> counts;
    for (const auto& w : vocab) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) counts[{w.symbols[i], w.symbols[i + 1]}] += w.freq;
    }
    const BpeModel::Merge* best = nullptr;
    std::uint64_t best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count > best_count || (count == best_count && best && bpe_pair_less(pair, *best))) {
        best = &pair;
        best_count = count;
      }
    }
    if (!best) break;
    BpeModel::Merge merge = *best;
    // Re-formed pairs are merged again but recorded once.
    bool fresh = learned.insert(pair_key(merge.first, merge.second)).second;
    std::string joined = merge.first + merge.second;
    for (auto& w : vocab) {
      std::vector<std::string> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == merge.first && w.symbols[i + 1] == merge.second) {
          next.push_back(joined);
          ++i;
        } else {
          next.push_back(std::move(w.symbols[i]));
        }
      }
      w.symbols = std::move(next);
    }
    if (fresh) merges.push_back(std::move(merge));
  }
  return BpeModel(std::move(merges));
}

BpeModel learn_bpe(const std::vector<Tokens>& sentences, std::size_t num_merges) {
  return learn_bpe(word_frequencies(sentences), num_merges);
}

Tokens apply_bpe(const BpeModel& model, const Tokens& tokens) {
  Tokens out;
  for (const auto& t : tokens) {
    auto pieces = model.segment(t);
    out.insert(out.end(), std::make_move_iterator(pieces.begin()), std::make_move_iterator(pieces.end()));
  }
  return out;
}

Tokens decode_bpe(const Tokens& subwords, std::string_view marker) {
  Tokens out;
  std::string pending;
  bool open = false;
  for (const auto& piece : subwords) {
    bool cont = piece.size() >= marker.size() &&
                std::string_view(piece).substr(piece.size() - marker.size()) == marker;
    if (cont) {
      pending.append(piece, 0, piece.size() - marker.size());
      open = true;
    } else {
      pending += piece;
      out.push_back(std::move(pending));
      pending.clear();
      open = false;
    }
  }
  if (open) throw FormatError("subword sequence ends with a continuation marker");
  return out;
}

std::string format_bpe(const BpeModel& model) {
  std::string out = fmt::format("#bpe v1 merges={} marker={}\n", model.num_merges(), model.marker());
  for (const auto& [l, r] : model.merges()) {
    out += l;
    out += ' ';
    out += r;
    out += '\n';
  }
  return out;
}

BpeModel parse_bpe(std::string_view text) {
  auto lines = io::split(text, '\n');
  if (lines.empty() || lines[0].rfind("#bpe v1", 0) != 0) throw ParseError("missing '#bpe v1' header", 1);
  std::size_t declared = 0;
  std::string marker(BpeModel::kDefaultMarker);
  bool have_count = false;
  for (const auto& field : io::split_whitespace(lines[0])) {
    if (field.rfind("merges=", 0) == 0) {
      declared = std::stoul(field.substr(7));
      have_count = true;
    } else if (field.rfind("marker=", 0) == 0) {
      marker = field.substr(7);
    }
  }
  if (!have_count) throw ParseError("header lacks merges=<N>", 1);
  std::vector<BpeModel::Merge> merges;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto parts = io::split(lines[i], ' ');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) throw ParseError("expected 'left right'", i + 1);
    merges.emplace_back(parts[0], parts[1]);
  }
  if (merges.size() != declared) {
    throw ParseError(fmt::format("header declares {} merges, file has {}", declared, merges.size()));
  }
  return BpeModel(std::move(merges), marker);
}

BpeModel load_bpe(const std::filesystem::path& path) { return parse_bpe(io::read_file(path)); }

}  // namespace termforge
