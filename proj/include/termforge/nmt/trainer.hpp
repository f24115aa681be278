#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "termforge/corpus.hpp"
#include "termforge/nmt/model.hpp"

namespace termforge::nmt {

struct TrainConfig {
  std::size_t batch_size = 16;
  double dropout = 0.3;
  int epochs = 13;
  double learning_rate = 1.0;
  /// Multiplier applied when the epoch perplexity fails to improve.
  double decay_factor = 0.5;
  double max_grad_norm = 5.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TrainLog {
  /// Mean per-token training loss of each epoch.
  std::vector<double> epoch_loss;
  std::vector<double> learning_rate;
  /// Dev perplexity per epoch when a dev set is given.
  std::vector<double> dev_perplexity;
};

/// Builds vocabularies from `corpus` (after subword segmentation when
/// `subwords` is set) and trains a fresh model.
Seq2SeqModel train_nmt(const ParallelCorpus& corpus, const ModelConfig& model_config, const TrainConfig& config,
                       std::optional<Subwords> subwords = std::nullopt, TrainLog* log = nullptr,
                       const ParallelCorpus* dev = nullptr);

/// Continues training on `data` with the model's vocabularies unchanged.
void continue_training(Seq2SeqModel& model, const ParallelCorpus& data, const TrainConfig& config,
                       TrainLog* log = nullptr, const ParallelCorpus* dev = nullptr);

/// Domain adaptation: continue_training on the dev terms only.
Seq2SeqModel fine_tune(const Seq2SeqModel& model, const ParallelCorpus& dev_terms, const TrainConfig& config,
                       TrainLog* log = nullptr);

/// Mean per-token negative log-likelihood of the corpus.
double corpus_loss(const Seq2SeqModel& model, const ParallelCorpus& corpus);

}  // namespace termforge::nmt
