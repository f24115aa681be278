#include "termforge/nmt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include "termforge/error.hpp"
#include "termforge/log.hpp"
#include "termforge/nmt/network.hpp"

namespace termforge::nmt {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must lie in [0, 1)");
  if (epochs < 0) throw ValidationError("epochs must be non-negative");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw ValidationError("decay_factor must lie in (0, 1]");
  if (!(max_grad_norm > 0.0)) throw ValidationError("max_grad_norm must be positive");
}

namespace {

std::vector<EncodedPair> encode_corpus(const Seq2SeqModel& model, const ParallelCorpus& corpus) {
  std::vector<EncodedPair> out;
  out.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) {
    out.emplace_back(model.src_vocab.encode(model.segment_source(p.source)),
                     model.tgt_vocab.encode(model.segment_target(p.target)));
  }
  return out;
}

double mean_loss(const Seq2SeqModel& model, const std::vector<EncodedPair>& data) {
  double loss = 0.0, tokens = 0.0;
  for (const auto& [src, tgt] : data) {
    loss += loss_and_gradient(model, src, tgt, nullptr);
    tokens += static_cast<double>(tgt.size() + 1);
  }
  return tokens > 0 ? loss / tokens : 0.0;
}

void sgd_update(Parameters& params, Parameters& grad, double scale, double lr, double max_norm) {
  double sq = 0.0;
  grad.visit([&](const std::string&, auto& t) {
    t *= scale;
    sq += t.squaredNorm();
  });
  double norm = std::sqrt(sq);
  double clip = norm > max_norm ? max_norm / norm : 1.0;
  std::vector<double*> g;
  grad.visit([&](const std::string&, auto& t) { g.push_back(t.data()); });
  std::size_t k = 0;
  params.visit([&](const std::string&, auto& t) {
    const double* gd = g[k++];
    for (Eigen::Index e = 0; e < t.size(); ++e) t.data()[e] -= lr * clip * gd[e];
  });
}

void run_training(Seq2SeqModel& model, const std::vector<EncodedPair>& data, const TrainConfig& config,
                  TrainLog* log, const std::vector<EncodedPair>* dev) {
  config.validate();
  if (config.epochs == 0) return;
  if (data.empty()) throw EmptyCorpusError("no training pairs");
  std::mt19937_64 rng(config.seed);
  Dropout dropout{config.dropout, &rng};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  double lr = config.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  Parameters grad = model.params.zeros_like();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0, epoch_tokens = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t end = std::min(order.size(), start + config.batch_size);
      grad.visit([](const std::string&, auto& t) { t.setZero(); });
      for (std::size_t b = start; b < end; ++b) {
        const auto& [src, tgt] = data[order[b]];
        double l = loss_and_gradient(model, src, tgt, &grad, dropout);
        if (!std::isfinite(l)) {
          throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch + 1) +
                                "; lower the learning rate or max_grad_norm");
        }
        epoch_loss += l;
        epoch_tokens += static_cast<double>(tgt.size() + 1);
      }
      sgd_update(model.params, grad, 1.0 / static_cast<double>(end - start), lr, config.max_grad_norm);
    }
    if (!model.params.all_finite()) {
      throw DivergenceError("non-finite parameters after epoch " + std::to_string(epoch + 1));
    }
    double mean = epoch_loss / epoch_tokens;
    double metric = mean;
    if (log) {
      log->epoch_loss.push_back(mean);
      log->learning_rate.push_back(lr);
    }
    if (dev && !dev->empty()) {
      metric = mean_loss(model, *dev);
      if (log) log->dev_perplexity.push_back(std::exp(metric));
    }
    termforge::log::info("epoch {}: loss {:.4f} ppl {:.3f} lr {}", epoch + 1, mean, std::exp(metric), lr);
    if (metric < best) {
      best = metric;
    } else {
      lr *= config.decay_factor;
    }
  }
}

}  // namespace

Seq2SeqModel train_nmt(const ParallelCorpus& corpus, const ModelConfig& model_config, const TrainConfig& config,
                       std::optional<Subwords> subwords, TrainLog* log, const ParallelCorpus* dev) {
  if (corpus.pairs.empty()) throw EmptyCorpusError("cannot train on an empty corpus");
  config.validate();
  std::vector<Tokens> src_side, tgt_side;
  for (const auto& p : corpus.pairs) {
    src_side.push_back(subwords ? apply_bpe(subwords->source, p.source) : p.source);
    tgt_side.push_back(subwords ? apply_bpe(subwords->target, p.target) : p.target);
  }
  auto model = Seq2SeqModel::create(model_config, Vocab::build(src_side, model_config.src_vocab_cap),
                                    Vocab::build(tgt_side, model_config.tgt_vocab_cap), config.seed);
  model.subwords = std::move(subwords);
  continue_training(model, corpus, config, log, dev);
  return model;
}

void continue_training(Seq2SeqModel& model, const ParallelCorpus& data, const TrainConfig& config, TrainLog* log,
                       const ParallelCorpus* dev) {
  auto encoded = encode_corpus(model, data);
  std::vector<EncodedPair> dev_encoded;
  if (dev) dev_encoded = encode_corpus(model, *dev);
  run_training(model, encoded, config, log, dev ? &dev_encoded : nullptr);
}

Seq2SeqModel fine_tune(const Seq2SeqModel& model, const ParallelCorpus& dev_terms, const TrainConfig& config,
                       TrainLog* log) {
  if (dev_terms.pairs.empty()) throw EmptyCorpusError("fine-tuning needs dev terms");
  Seq2SeqModel adapted = model;
  continue_training(adapted, dev_terms, config, log);
  return adapted;
}

double corpus_loss(const Seq2SeqModel& model, const ParallelCorpus& corpus) {
  return mean_loss(model, encode_corpus(model, corpus));
}

}  // namespace termforge::nmt
