#pragma once

#include <random>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "termforge/nmt/model.hpp"

namespace termforge::nmt {

/// Per-layer encoder activations for one source sentence.
struct EncoderStates {
  /// layers[0] is the residual input stream h^0 (n x S); layers[l] is h^l.
  std::vector<Eigen::MatrixXd> layers;
  /// cell_out[l] is the LSTM output o * tanh(c) of layer l; cell_out[0] is empty.
  std::vector<Eigen::MatrixXd> cell_out;
  std::vector<Eigen::VectorXd> final_h;
  std::vector<Eigen::VectorXd> final_c;

  const Eigen::MatrixXd& top() const { return layers.back(); }
};

EncoderStates encode(const Seq2SeqModel& model, const std::vector<int>& source);

struct DecoderState {
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> c;
  /// Previous attentional vector, fed into layer 1.
  Eigen::VectorXd feed;
};

DecoderState initial_decoder_state(const Seq2SeqModel& model, const EncoderStates& encoder);

struct StepOutput {
  Eigen::VectorXd log_probs;
  /// Attention over source positions; empty for an empty source.
  Eigen::VectorXd attention;
  DecoderState next;
};

/// One decoder step consuming `token` at target position `position`.
StepOutput decoder_step(const Seq2SeqModel& model, const EncoderStates& encoder, const DecoderState& state,
                        int token, int position);

/// Inverted dropout on LSTM cell inputs.
struct Dropout {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

/// Summed negative log-likelihood of target + </s> under teacher forcing.
/// When `grad` is given, adds d(loss)/d(params) into it.
double loss_and_gradient(const Seq2SeqModel& model, const std::vector<int>& source, const std::vector<int>& target,
                         Parameters* grad, const Dropout& dropout = {});

using EncodedPair = std::pair<std::vector<int>, std::vector<int>>;

struct GradientCheckOptions {
  double epsilon = 1e-4;
  /// Tensors to check by name; unset means all.
  std::optional<std::vector<std::string>> tensors;
  /// Relative error is |a - f| / max(|a|, |f|, floor).
  double floor = 1e-6;
};

/// Largest relative error between analytic and central-difference gradients
/// of the summed batch loss, over every selected parameter.
double gradient_check(Seq2SeqModel model, const std::vector<EncodedPair>& batch,
                      const GradientCheckOptions& options = {});

}  // namespace termforge::nmt
