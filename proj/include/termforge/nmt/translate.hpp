#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "termforge/corpus.hpp"
#include "termforge/nmt/model.hpp"

namespace termforge::nmt {

struct Translation {
  /// Model units (words or subwords) on both sides; output excludes </s>.
  Tokens source;
  Tokens output;
  /// Rows are output positions, columns source positions.
  Eigen::MatrixXd attention;
  /// Log-probability including </s>, divided by the number of predicted tokens.
  double score = 0.0;
};

/// Length-normalized beam search over model units. max_length 0 means
/// 2 * |source| + 5.
Translation translate_units(const Seq2SeqModel& model, const Tokens& source_units, std::size_t beam_width = 5,
                            std::size_t max_length = 0);

/// Replaces every <unk> at step j with the best lexicon translation of the
/// source token with the highest attention in row j (lowest index on ties), or
/// with that source token when the lexicon has no entry.
Tokens replace_unk(const Tokens& output, const Eigen::MatrixXd& attention, const Tokens& source,
                   const Lexicon* lexicon = nullptr);

std::size_t count_unk(const Tokens& tokens);

struct TranslateOptions {
  std::size_t beam_width = 5;
  bool replace_unknown = true;
  const Lexicon* lexicon = nullptr;
};

/// Words in, words out: segmentation, beam search, unk replacement and
/// subword merging.
Tokens translate(const Seq2SeqModel& model, const Tokens& words, const TranslateOptions& options = {});

}  // namespace termforge::nmt
