#include "termforge/nmt/translate.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "termforge/nmt/network.hpp"

namespace termforge::nmt {

namespace {

struct Beam {
  std::vector<int> tokens;
  std::vector<Eigen::VectorXd> attention;
  double log_prob = 0.0;
  DecoderState state;
};

double normalized(double log_prob, std::size_t predicted) {
  return log_prob / static_cast<double>(std::max<std::size_t>(predicted, 1));
}

}  // namespace

Translation translate_units(const Seq2SeqModel& model, const Tokens& source_units, std::size_t beam_width,
                            std::size_t max_length) {
  beam_width = std::max<std::size_t>(beam_width, 1);
  if (max_length == 0) max_length = 2 * source_units.size() + 5;
  auto source = model.src_vocab.encode(source_units);
  EncoderStates enc = encode(model, source);

  std::vector<Beam> live(1);
  live[0].state = initial_decoder_state(model, enc);
  struct Finished {
    Beam beam;
    double score;
  };
  std::vector<Finished> finished;

  for (std::size_t step = 0; step < max_length && !live.empty() && finished.size() < beam_width; ++step) {
    struct Expansion {
      std::size_t beam;
      int token;
      double log_prob;
    };
    std::vector<Expansion> expansions;
    std::vector<StepOutput> outputs;
    for (std::size_t b = 0; b < live.size(); ++b) {
      int prev = live[b].tokens.empty() ? Vocab::kBos : live[b].tokens.back();
      outputs.push_back(decoder_step(model, enc, live[b].state, prev, static_cast<int>(step)));
      Eigen::VectorXd lp = outputs.back().log_probs;
      lp[Vocab::kPad] = -std::numeric_limits<double>::infinity();
      lp[Vocab::kBos] = -std::numeric_limits<double>::infinity();
      std::vector<int> ids(static_cast<std::size_t>(lp.size()));
      std::iota(ids.begin(), ids.end(), 0);
      std::size_t k = std::min(beam_width, ids.size());
      std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                        [&](int a, int c) { return lp[a] > lp[c] || (lp[a] == lp[c] && a < c); });
      for (std::size_t r = 0; r < k; ++r) {
        expansions.push_back({b, ids[r], live[b].log_prob + lp[ids[r]]});
      }
    }
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion& a, const Expansion& b) { return a.log_prob > b.log_prob; });
    std::vector<Beam> next;
    for (const auto& ex : expansions) {
      if (next.size() + finished.size() >= beam_width) break;
      Beam nb;
      nb.tokens = live[ex.beam].tokens;
      nb.attention = live[ex.beam].attention;
      nb.log_prob = ex.log_prob;
      if (ex.token == Vocab::kEos) {
        finished.push_back({nb, normalized(nb.log_prob, nb.tokens.size() + 1)});
        continue;
      }
      nb.tokens.push_back(ex.token);
      nb.attention.push_back(outputs[ex.beam].attention);
      nb.state = outputs[ex.beam].next;
      next.push_back(std::move(nb));
    }
    live = std::move(next);
  }
  for (auto& b : live) finished.push_back({b, normalized(b.log_prob, b.tokens.size())});

  const Finished* best = nullptr;
  for (const auto& f : finished) {
    if (!best || f.score > best->score) best = &f;
  }
  Translation t;
  t.source = source_units;
  if (!best) return t;
  t.score = best->score;
  const auto S = static_cast<Eigen::Index>(source_units.size());
  t.attention = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(best->beam.tokens.size()), S);
  for (std::size_t j = 0; j < best->beam.tokens.size(); ++j) {
    t.output.push_back(model.tgt_vocab.token(best->beam.tokens[j]));
    if (S > 0) t.attention.row(static_cast<Eigen::Index>(j)) = best->beam.attention[j].transpose();
  }
  return t;
}

Tokens replace_unk(const Tokens& output, const Eigen::MatrixXd& attention, const Tokens& source,
                   const Lexicon* lexicon) {
  Tokens out;
  for (std::size_t j = 0; j < output.size(); ++j) {
    if (output[j] != Vocab::kUnkToken || source.empty() || static_cast<Eigen::Index>(j) >= attention.rows()) {
      out.push_back(output[j]);
      continue;
    }
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < attention.cols() && i < static_cast<Eigen::Index>(source.size()); ++i) {
      if (attention(static_cast<Eigen::Index>(j), i) > attention(static_cast<Eigen::Index>(j), best)) best = i;
    }
    const auto& word = source[static_cast<std::size_t>(best)];
    const LexiconEntry* entry = lexicon ? lexicon->find(Tokens{word}) : nullptr;
    if (entry) {
      const auto& t = entry->best().tokens;
      out.insert(out.end(), t.begin(), t.end());
    } else {
      out.push_back(word);
    }
  }
  return out;
}

std::size_t count_unk(const Tokens& tokens) {
  return static_cast<std::size_t>(std::count(tokens.begin(), tokens.end(), std::string(Vocab::kUnkToken)));
}

Tokens translate(const Seq2SeqModel& model, const Tokens& words, const TranslateOptions& options) {
  auto t = translate_units(model, model.segment_source(words), options.beam_width);
  Tokens out = options.replace_unknown ? replace_unk(t.output, t.attention, t.source, options.lexicon) : t.output;
  return model.merge_target(out);
}

}  // namespace termforge::nmt
