#include "termforge/nmt/network.hpp"

#include <algorithm>
#include <cmath>

#include "termforge/error.hpp"

namespace termforge::nmt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd sigmoid(const VectorXd& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

VectorXd log_softmax(const VectorXd& x) {
  double mx = x.maxCoeff();
  double lse = mx + std::log((x.array() - mx).exp().sum());
  return (x.array() - lse).matrix();
}

VectorXd softmax(const VectorXd& x) {
  if (x.size() == 0) return x;
  VectorXd e = (x.array() - x.maxCoeff()).exp().matrix();
  return e / e.sum();
}

struct LstmCache {
  VectorXd in, h_prev, c_prev, i, f, o, g, c, tc, out, h;
};

void lstm_forward(const LstmParams& p, const VectorXd& in, const VectorXd& h_prev, const VectorXd& c_prev,
                  const VectorXd* residual, LstmCache& k) {
  const Eigen::Index n = h_prev.size();
  VectorXd z = p.W * in + p.U * h_prev + p.b;
  k.in = in;
  k.h_prev = h_prev;
  k.c_prev = c_prev;
  k.i = sigmoid(z.segment(0, n));
  k.f = sigmoid(z.segment(n, n));
  k.o = sigmoid(z.segment(2 * n, n));
  k.g = z.segment(3 * n, n).array().tanh().matrix();
  k.c = k.f.cwiseProduct(c_prev) + k.i.cwiseProduct(k.g);
  k.tc = k.c.array().tanh().matrix();
  k.out = k.o.cwiseProduct(k.tc);
  k.h = residual ? VectorXd(*residual + k.out) : k.out;
}

/// Gradient of the cell given dL/dh (through the cell output) and dL/dc from
/// the next step. Accumulates into `g`; fills din, dh_prev and dc_prev.
void lstm_backward(const LstmParams& p, LstmParams& g, const LstmCache& k, const VectorXd& dh,
                   const VectorXd& dc_next, VectorXd& din, VectorXd& dh_prev, VectorXd& dc_prev) {
  const Eigen::Index n = dh.size();
  VectorXd d_o = dh.cwiseProduct(k.tc);
  VectorXd dc = dh.cwiseProduct(k.o).cwiseProduct((1.0 - k.tc.array().square()).matrix()) + dc_next;
  VectorXd dz(4 * n);
  dz.segment(0, n) = dc.cwiseProduct(k.g).cwiseProduct(k.i.cwiseProduct((1.0 - k.i.array()).matrix()));
  dz.segment(n, n) = dc.cwiseProduct(k.c_prev).cwiseProduct(k.f.cwiseProduct((1.0 - k.f.array()).matrix()));
  dz.segment(2 * n, n) = d_o.cwiseProduct(k.o.cwiseProduct((1.0 - k.o.array()).matrix()));
  dz.segment(3 * n, n) = dc.cwiseProduct(k.i).cwiseProduct((1.0 - k.g.array().square()).matrix());
  dc_prev = dc.cwiseProduct(k.f);
  g.W.noalias() += dz * k.in.transpose();
  g.U.noalias() += dz * k.h_prev.transpose();
  g.b += dz;
  din = p.W.transpose() * dz;
  dh_prev = p.U.transpose() * dz;
}

VectorXd embed(const MatrixXd& table, const MatrixXd& pos, bool positional, int token, int position) {
  VectorXd e = table.col(token);
  if (positional) e += pos.col(std::min<Eigen::Index>(position, pos.cols() - 1));
  return e;
}

VectorXd residual_input(const MatrixXd& proj, const VectorXd& e) { return proj.size() ? VectorXd(proj * e) : e; }

VectorXd dropout_mask(const Dropout& d, Eigen::Index size) {
  if (d.rate <= 0.0 || !d.rng) return VectorXd();
  std::bernoulli_distribution keep(1.0 - d.rate);
  VectorXd m(size);
  for (Eigen::Index k = 0; k < size; ++k) m[k] = keep(*d.rng) ? 1.0 / (1.0 - d.rate) : 0.0;
  return m;
}

VectorXd apply_mask(const VectorXd& v, const VectorXd& mask) { return mask.size() ? VectorXd(v.cwiseProduct(mask)) : v; }

struct EncoderCache {
  std::vector<VectorXd> emb;
  std::vector<std::vector<LstmCache>> cells;  // [layer][position]
  std::vector<std::vector<VectorXd>> masks;
};

EncoderStates run_encoder(const Seq2SeqModel& model, const std::vector<int>& source, const Dropout& dropout,
                          EncoderCache* cache) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const Eigen::Index n = cfg.hidden;
  const auto S = static_cast<Eigen::Index>(source.size());
  const auto L = static_cast<std::size_t>(cfg.layers);
  EncoderStates st;
  st.layers.assign(L + 1, MatrixXd(n, S));
  st.cell_out.assign(L + 1, MatrixXd());
  for (std::size_t l = 1; l <= L; ++l) st.cell_out[l].resize(n, S);
  st.final_h.assign(L, VectorXd::Zero(n));
  st.final_c.assign(L, VectorXd::Zero(n));
  if (cache) {
    cache->emb.clear();
    cache->cells.assign(L, std::vector<LstmCache>(source.size()));
    cache->masks.assign(L, std::vector<VectorXd>(source.size()));
  }
  std::vector<VectorXd> h(L, VectorXd::Zero(n)), c(L, VectorXd::Zero(n));
  LstmCache scratch;
  for (Eigen::Index i = 0; i < S; ++i) {
    VectorXd e = embed(p.src_embed, p.src_pos, cfg.positional, source[static_cast<std::size_t>(i)], static_cast<int>(i));
    st.layers[0].col(i) = residual_input(p.enc_proj, e);
    if (cache) cache->emb.push_back(e);
    for (std::size_t l = 0; l < L; ++l) {
      VectorXd in = l == 0 ? e : VectorXd(st.layers[l].col(i));
      VectorXd mask = dropout_mask(dropout, in.size());
      VectorXd res = st.layers[l].col(i);
      LstmCache& k = cache ? cache->cells[l][static_cast<std::size_t>(i)] : scratch;
      lstm_forward(p.encoder[l], apply_mask(in, mask), h[l], c[l], cfg.residual ? &res : nullptr, k);
      if (cache) cache->masks[l][static_cast<std::size_t>(i)] = mask;
      h[l] = k.h;
      c[l] = k.c;
      st.layers[l + 1].col(i) = k.h;
      st.cell_out[l + 1].col(i) = k.out;
    }
  }
  st.final_h = h;
  st.final_c = c;
  return st;
}

struct StepCache {
  int token = 0;
  int position = 0;
  VectorXd emb;
  std::vector<LstmCache> cells;
  std::vector<VectorXd> masks;
  VectorXd alpha, ctx, cat, htilde, probs;
};

StepOutput run_step(const Seq2SeqModel& model, const EncoderStates& enc, const DecoderState& state, int token,
                    int position, const Dropout& dropout, StepCache* cache) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const Eigen::Index n = cfg.hidden, m = cfg.embed;
  const auto L = static_cast<std::size_t>(cfg.layers);
  const MatrixXd& H = enc.top();

  StepOutput out;
  out.next.h.resize(L);
  out.next.c.resize(L);
  VectorXd e = embed(p.tgt_embed, p.tgt_pos, cfg.positional, token, position);
  VectorXd in1(m + n);
  in1 << e, state.feed;
  VectorXd below = residual_input(p.dec_proj, e);
  if (cache) {
    cache->token = token;
    cache->position = position;
    cache->emb = e;
    cache->cells.assign(L, LstmCache());
    cache->masks.assign(L, VectorXd());
  }
  LstmCache scratch;
  for (std::size_t l = 0; l < L; ++l) {
    VectorXd in = l == 0 ? in1 : below;
    VectorXd mask = dropout_mask(dropout, in.size());
    LstmCache& k = cache ? cache->cells[l] : scratch;
    lstm_forward(p.decoder[l], apply_mask(in, mask), state.h[l], state.c[l], cfg.residual ? &below : nullptr, k);
    if (cache) cache->masks[l] = mask;
    out.next.h[l] = k.h;
    out.next.c[l] = k.c;
    below = k.h;
  }
  const VectorXd& s = below;
  VectorXd ctx = VectorXd::Zero(n);
  if (H.cols() > 0) {
    VectorXd scores = H.transpose() * (p.attn_W.transpose() * s);
    out.attention = softmax(scores);
    ctx = H * out.attention;
  }
  VectorXd cat(2 * n);
  cat << ctx, s;
  VectorXd htilde = (p.concat_W * cat).array().tanh().matrix();
  out.log_probs = log_softmax(p.out_W * htilde + p.out_b);
  out.next.feed = htilde;
  if (cache) {
    cache->alpha = out.attention;
    cache->ctx = ctx;
    cache->cat = cat;
    cache->htilde = htilde;
    cache->probs = out.log_probs.array().exp().matrix();
  }
  return out;
}

}  // namespace

EncoderStates encode(const Seq2SeqModel& model, const std::vector<int>& source) {
  return run_encoder(model, source, {}, nullptr);
}

DecoderState initial_decoder_state(const Seq2SeqModel& model, const EncoderStates& encoder) {
  DecoderState s;
  s.h = encoder.final_h;
  s.c = encoder.final_c;
  s.feed = VectorXd::Zero(model.config.hidden);
  return s;
}

StepOutput decoder_step(const Seq2SeqModel& model, const EncoderStates& encoder, const DecoderState& state,
                        int token, int position) {
  return run_step(model, encoder, state, token, position, {}, nullptr);
}

double loss_and_gradient(const Seq2SeqModel& model, const std::vector<int>& source, const std::vector<int>& target,
                         Parameters* grad, const Dropout& dropout) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const Eigen::Index n = cfg.hidden, m = cfg.embed;
  const auto L = static_cast<std::size_t>(cfg.layers);
  const std::size_t T = target.size();

  EncoderCache enc_cache;
  EncoderStates enc = run_encoder(model, source, dropout, grad ? &enc_cache : nullptr);
  const MatrixXd& H = enc.top();
  DecoderState state = initial_decoder_state(model, enc);

  std::vector<StepCache> steps(grad ? T + 1 : 0);
  double loss = 0.0;
  for (std::size_t j = 0; j <= T; ++j) {
    int token = j == 0 ? Vocab::kBos : target[j - 1];
    int gold = j < T ? target[j] : Vocab::kEos;
    auto out = run_step(model, enc, state, token, static_cast<int>(j), dropout, grad ? &steps[j] : nullptr);
    loss -= out.log_probs[gold];
    state = std::move(out.next);
  }
  if (!grad) return loss;

  Parameters& g = *grad;
  MatrixXd dH = MatrixXd::Zero(n, H.cols());
  std::vector<VectorXd> dh_rec(L, VectorXd::Zero(n)), dc_rec(L, VectorXd::Zero(n));
  VectorXd dfeed = VectorXd::Zero(n);
  VectorXd din, dh_prev, dc_prev;
  for (std::size_t j = T + 1; j-- > 0;) {
    const StepCache& k = steps[j];
    int gold = j < T ? target[j] : Vocab::kEos;
    VectorXd dlogits = k.probs;
    dlogits[gold] -= 1.0;
    g.out_W.noalias() += dlogits * k.htilde.transpose();
    g.out_b += dlogits;
    VectorXd dht = p.out_W.transpose() * dlogits + dfeed;
    VectorXd da = dht.cwiseProduct((1.0 - k.htilde.array().square()).matrix());
    g.concat_W.noalias() += da * k.cat.transpose();
    VectorXd dcat = p.concat_W.transpose() * da;
    VectorXd ds = dcat.tail(n);
    const VectorXd& s = k.cells.back().h;
    if (H.cols() > 0) {
      VectorXd dctx = dcat.head(n);
      VectorXd dalpha = H.transpose() * dctx;
      dH.noalias() += dctx * k.alpha.transpose();
      VectorXd dscores = k.alpha.cwiseProduct((dalpha.array() - k.alpha.dot(dalpha)).matrix());
      VectorXd v = p.attn_W.transpose() * s;
      VectorXd dv = H * dscores;
      dH.noalias() += v * dscores.transpose();
      ds += p.attn_W * dv;
      g.attn_W.noalias() += s * dv.transpose();
    }
    VectorXd dup = ds;
    for (std::size_t l = L; l-- > 0;) {
      VectorXd dh = dup + dh_rec[l];
      lstm_backward(p.decoder[l], g.decoder[l], k.cells[l], dh, dc_rec[l], din, dh_prev, dc_prev);
      dh_rec[l] = dh_prev;
      dc_rec[l] = dc_prev;
      VectorXd dinput = apply_mask(din, k.masks[l]);
      if (l > 0) {
        dup = dinput;
        if (cfg.residual) dup += dh;
      } else {
        VectorXd demb = dinput.head(m);
        dfeed = dinput.tail(n);
        if (cfg.residual) {
          if (p.dec_proj.size()) {
            g.dec_proj.noalias() += dh * k.emb.transpose();
            demb += p.dec_proj.transpose() * dh;
          } else {
            demb += dh;
          }
        }
        g.tgt_embed.col(k.token) += demb;
        if (cfg.positional) g.tgt_pos.col(std::min<Eigen::Index>(k.position, p.tgt_pos.cols() - 1)) += demb;
      }
    }
  }

  for (std::size_t i = source.size(); i-- > 0;) {
    VectorXd dup = dH.col(static_cast<Eigen::Index>(i));
    for (std::size_t l = L; l-- > 0;) {
      VectorXd dh = dup + dh_rec[l];
      const LstmCache& k = enc_cache.cells[l][i];
      lstm_backward(p.encoder[l], g.encoder[l], k, dh, dc_rec[l], din, dh_prev, dc_prev);
      dh_rec[l] = dh_prev;
      dc_rec[l] = dc_prev;
      VectorXd dinput = apply_mask(din, enc_cache.masks[l][i]);
      if (l > 0) {
        dup = dinput;
        if (cfg.residual) dup += dh;
      } else {
        VectorXd demb = dinput;
        if (cfg.residual) {
          if (p.enc_proj.size()) {
            g.enc_proj.noalias() += dh * enc_cache.emb[i].transpose();
            demb += p.enc_proj.transpose() * dh;
          } else {
            demb += dh;
          }
        }
        g.src_embed.col(source[i]) += demb;
        if (cfg.positional) {
          g.src_pos.col(std::min<Eigen::Index>(static_cast<Eigen::Index>(i), p.src_pos.cols() - 1)) += demb;
        }
      }
    }
  }
  return loss;
}

double gradient_check(Seq2SeqModel model, const std::vector<EncodedPair>& batch, const GradientCheckOptions& options) {
  Parameters analytic = model.params.zeros_like();
  for (const auto& [src, tgt] : batch) loss_and_gradient(model, src, tgt, &analytic);

  std::vector<double*> values;
  std::vector<const double*> grads;
  std::vector<Eigen::Index> sizes;
  std::vector<std::string> names;
  model.params.visit([&](const std::string& name, auto& t) {
    values.push_back(t.data());
    sizes.push_back(t.size());
    names.push_back(name);
  });
  analytic.visit([&](const std::string&, const auto& t) { grads.push_back(t.data()); });

  auto total_loss = [&] {
    double s = 0.0;
    for (const auto& [src, tgt] : batch) s += loss_and_gradient(model, src, tgt, nullptr);
    return s;
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (options.tensors &&
        std::find(options.tensors->begin(), options.tensors->end(), names[k]) == options.tensors->end()) {
      continue;
    }
    for (Eigen::Index e = 0; e < sizes[k]; ++e) {
      double saved = values[k][e];
      values[k][e] = saved + options.epsilon;
      double up = total_loss();
      values[k][e] = saved - options.epsilon;
      double down = total_loss();
      values[k][e] = saved;
      double numeric = (up - down) / (2.0 * options.epsilon);
      double a = grads[k][e];
      double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace termforge::nmt
