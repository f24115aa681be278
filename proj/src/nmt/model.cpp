#include "termforge/nmt/model.hpp"

#include <random>

#include "termforge/error.hpp"

namespace termforge::nmt {

void ModelConfig::validate() const {
  if (layers < 1 || hidden < 1 || embed < 1) throw ValidationError("layers, hidden and embed must be positive");
  if (positional && max_positions < 1) throw ValidationError("max_positions must be positive");
  if (src_vocab_cap < Vocab::kReserved || tgt_vocab_cap < Vocab::kReserved) {
    throw ValidationError("vocabulary caps must be at least 4");
  }
}

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  z.visit([](const std::string&, auto& t) { t.setZero(); });
  return z;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

bool Parameters::all_finite() const {
  bool ok = true;
  visit([&](const std::string&, const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

bool Parameters::operator==(const Parameters& other) const {
  std::vector<const double*> mine, theirs;
  std::vector<Eigen::Index> sizes_a, sizes_b;
  visit([&](const std::string&, const auto& t) {
    mine.push_back(t.data());
    sizes_a.push_back(t.size());
  });
  other.visit([&](const std::string&, const auto& t) {
    theirs.push_back(t.data());
    sizes_b.push_back(t.size());
  });
  if (sizes_a != sizes_b) return false;
  for (std::size_t k = 0; k < mine.size(); ++k) {
    if (!std::equal(mine[k], mine[k] + sizes_a[k], theirs[k])) return false;
  }
  return true;
}

Seq2SeqModel Seq2SeqModel::create(const ModelConfig& config, Vocab src_vocab, Vocab tgt_vocab, std::uint64_t seed) {
  config.validate();
  Seq2SeqModel model;
  model.config = config;
  model.src_vocab = std::move(src_vocab);
  model.tgt_vocab = std::move(tgt_vocab);
  const Eigen::Index n = config.hidden, m = config.embed;
  const auto kx = static_cast<Eigen::Index>(model.src_vocab.size());
  const auto ky = static_cast<Eigen::Index>(model.tgt_vocab.size());
  auto& p = model.params;
  p.src_embed.resize(m, kx);
  p.tgt_embed.resize(m, ky);
  if (config.positional) {
    p.src_pos.resize(m, config.max_positions);
    p.tgt_pos.resize(m, config.max_positions);
  }
  if (m != n) {
    p.enc_proj.resize(n, m);
    p.dec_proj.resize(n, m);
  }
  for (int l = 0; l < config.layers; ++l) {
    LstmParams enc, dec;
    enc.W.resize(4 * n, l == 0 ? m : n);
    dec.W.resize(4 * n, l == 0 ? m + n : n);
    for (auto* layer : {&enc, &dec}) {
      layer->U.resize(4 * n, n);
      layer->b.resize(4 * n);
    }
    p.encoder.push_back(std::move(enc));
    p.decoder.push_back(std::move(dec));
  }
  p.attn_W.resize(n, n);
  p.concat_W.resize(n, 2 * n);
  p.out_W.resize(ky, n);
  p.out_b.resize(ky);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  p.visit([&](const std::string&, auto& t) {
    for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = uniform(rng);
  });
  return model;
}

Tokens Seq2SeqModel::segment_source(const Tokens& words) const {
  return subwords ? apply_bpe(subwords->source, words) : words;
}

Tokens Seq2SeqModel::segment_target(const Tokens& words) const {
  return subwords ? apply_bpe(subwords->target, words) : words;
}

Tokens Seq2SeqModel::merge_target(const Tokens& units) const {
  if (!subwords) return units;
  // Model output may end on a continuation piece.
  Tokens fixed = units;
  const auto& marker = subwords->target.marker();
  if (!fixed.empty() && fixed.back().size() >= marker.size() &&
      fixed.back().compare(fixed.back().size() - marker.size(), marker.size(), marker) == 0) {
    fixed.back().resize(fixed.back().size() - marker.size());
    if (fixed.back().empty()) fixed.pop_back();
  }
  return decode_bpe(fixed, marker);
}

}  // namespace termforge::nmt
