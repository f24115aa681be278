#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "termforge/bpe.hpp"
#include "termforge/nmt/vocab.hpp"

namespace termforge::nmt {

struct ModelConfig {
  int layers = 2;
  /// n: LSTM units per layer.
  int hidden = 64;
  /// m: embedding size.
  int embed = 32;
  std::size_t src_vocab_cap = 5000;
  std::size_t tgt_vocab_cap = 5000;
  /// Add the layer input to each layer's cell output.
  bool residual = true;
  /// Learned position embeddings added to the word embeddings.
  bool positional = false;
  int max_positions = 128;

  /// Throws ValidationError for non-positive sizes.
  void validate() const;
};

struct LstmParams {
  /// Rows are the input, forget, output and candidate gates, n each.
  Eigen::MatrixXd W;
  Eigen::MatrixXd U;
  Eigen::VectorXd b;
};

struct Parameters {
  Eigen::MatrixXd src_embed;  // m x K_x
  Eigen::MatrixXd tgt_embed;  // m x K_y
  Eigen::MatrixXd src_pos;    // m x max_positions, empty unless positional
  Eigen::MatrixXd tgt_pos;
  Eigen::MatrixXd enc_proj;   // n x m residual projection, empty when m == n
  Eigen::MatrixXd dec_proj;
  std::vector<LstmParams> encoder;
  std::vector<LstmParams> decoder;  // layer 1 input is [embedding; previous attentional state]
  Eigen::MatrixXd attn_W;    // n x n bilinear score
  Eigen::MatrixXd concat_W;  // n x 2n
  Eigen::MatrixXd out_W;     // K_y x n
  Eigen::VectorXd out_b;

  /// Calls fn(name, tensor) for every tensor in a fixed order; tensor is an
  /// Eigen::MatrixXd& or Eigen::VectorXd&.
  template <typename Fn>
  void visit(Fn&& fn) {
    visit_impl(*this, fn);
  }
  template <typename Fn>
  void visit(Fn&& fn) const {
    visit_impl(*this, fn);
  }

  Parameters zeros_like() const;
  std::size_t count() const;
  bool all_finite() const;
  bool operator==(const Parameters& other) const;

 private:
  template <typename Self, typename Fn>
  static void visit_impl(Self& p, Fn& fn) {
    fn("src_embed", p.src_embed);
    fn("tgt_embed", p.tgt_embed);
    fn("src_pos", p.src_pos);
    fn("tgt_pos", p.tgt_pos);
    fn("enc_proj", p.enc_proj);
    fn("dec_proj", p.dec_proj);
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
      std::string prefix = "encoder." + std::to_string(l + 1) + ".";
      fn(prefix + "W", p.encoder[l].W);
      fn(prefix + "U", p.encoder[l].U);
      fn(prefix + "b", p.encoder[l].b);
    }
    for (std::size_t l = 0; l < p.decoder.size(); ++l) {
      std::string prefix = "decoder." + std::to_string(l + 1) + ".";
      fn(prefix + "W", p.decoder[l].W);
      fn(prefix + "U", p.decoder[l].U);
      fn(prefix + "b", p.decoder[l].b);
    }
    fn("attn_W", p.attn_W);
    fn("concat_W", p.concat_W);
    fn("out_W", p.out_W);
    fn("out_b", p.out_b);
  }
};

/// Source and target merge lists when the model works on subwords.
struct Subwords {
  BpeModel source;
  BpeModel target;
};

/// Attention encoder-decoder with stacked residual LSTM layers.
struct Seq2SeqModel {
  ModelConfig config;
  Vocab src_vocab;
  Vocab tgt_vocab;
  std::optional<Subwords> subwords;
  Parameters params;

  /// Fresh model with parameters drawn uniformly from [-0.1, 0.1].
  static Seq2SeqModel create(const ModelConfig& config, Vocab src_vocab, Vocab tgt_vocab, std::uint64_t seed);

  /// Words to model units (identity for word-level models).
  Tokens segment_source(const Tokens& words) const;
  Tokens segment_target(const Tokens& words) const;
  /// Model units back to words.
  Tokens merge_target(const Tokens& units) const;
};

}  // namespace termforge::nmt
