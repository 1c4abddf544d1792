/*
 * Copyright 2026 the dpf authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "field.hpp"
#include "optim.hpp"
#include "rng.hpp"
#include "tensor.hpp"

// The noise-prediction network over coordinate-signal sets: eps_hat_q =
// eps_theta(C_t, t, Q_t). Three interchangeable bodies share the contract:
//
//   cross_attention     context pairs cross-attend into a learnable latent
//                       array, self-attention refines the latents, query
//                       pairs cross-attend back out (encoder-decoder).
//   transformer_encoder self-attention over context pairs; each query is
//                       decoded from its embedding plus the mean-pooled
//                       context representation.
//   mlp_mixer           token/channel-mixing MLPs over a fixed number of
//                       context tokens; query decoding as above.
//
// Rows carry no order semantics anywhere except the mixer's token-mixing
// stage, which is tied to a fixed token count and is not permutation
// invariant in the context set.

namespace dpf {

enum class ScoreArch { cross_attention, transformer_encoder, mlp_mixer };

std::string to_string(ScoreArch a);
ScoreArch score_arch_from_string(const std::string& s);

struct ScoreFieldConfig {
  ScoreArch architecture = ScoreArch::cross_attention;
  int n_latents = 64;
  int d_latent = 128;
  int n_blocks = 4;
  int self_attends_per_block = 2;
  int n_heads = 4;
  int d_head = 0;  // 0 -> d_latent / n_heads
  int decoder_blocks = 1;
  int coord_freqs = 10;  // frequency bands for coordinates
  int time_freqs = 64;   // frequency bands for the timestep
  int signal_dim = 3;
  int coord_dim = 2;
  int mlp_ratio = 2;
  int mixer_tokens = 0;  // required token count for mlp_mixer

  void validate() const;
  int head_dim() const { return d_head > 0 ? d_head : d_latent / n_heads; }
  /// Width of one embedded pair before the learned projection:
  /// coordinate ladder + raw coordinates + signal + time ladder + raw t/T.
  int embed_in_width() const {
    return 2 * coord_freqs * coord_dim + coord_dim + signal_dim + 2 * time_freqs + 1;
  }
  bool operator==(const ScoreFieldConfig&) const = default;
};

inline constexpr double kLayerNormEps = 1e-5;

template <class S>
struct AttnParams {
  nn::Tensor<S> ln_q_g, ln_q_b;    // pre-norm on the query-side input
  nn::Tensor<S> ln_kv_g, ln_kv_b;  // pre-norm on the key/value input (cross form only)
  nn::Tensor<S> wq, bq, wk, bk, wv, bv, wo, bo;
  int n_heads = 1;
  int d_head = 1;
  bool cross = false;
};

template <class S>
struct MlpParams {
  nn::Tensor<S> ln_g, ln_b, w1, b1, w2, b2;
};

template <class S>
struct MixerParams {
  nn::Tensor<S> ln1_g, ln1_b, tok_w1, tok_b1, tok_w2, tok_b2;
  MlpParams<S> channel;
};

/// Multi-head scaled-dot-product attention with pre-norm and residual:
/// out = q_in + Wo concat_h[ softmax(Q_h K_h^T / sqrt(d_h)) V_h ].
/// Output row i depends on q_in row i and all of kv_in. For the self form
/// (p.cross == false) keys and values are projected from the same
/// normalized input as the queries.
template <class S>
nn::Tensor<S> multihead_attention(const nn::Tensor<S>& q_in, const nn::Tensor<S>& kv_in,
                                  const AttnParams<S>& p) {
  const S eps = static_cast<S>(kLayerNormEps);
  auto qn = nn::layer_normalize(q_in, p.ln_q_g, p.ln_q_b, eps);
  auto kn = p.cross ? nn::layer_normalize(kv_in, p.ln_kv_g, p.ln_kv_b, eps) : qn;
  auto q = nn::add_bias(nn::matmul(qn, p.wq), p.bq);
  auto k = nn::add_bias(nn::matmul(kn, p.wk), p.bk);
  auto v = nn::add_bias(nn::matmul(kn, p.wv), p.bv);
  const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(static_cast<double>(p.d_head)));
  std::vector<nn::Tensor<S>> heads;
  heads.reserve(p.n_heads);
  for (int h = 0; h < p.n_heads; ++h) {
    auto qh = nn::slice_cols(q, h * p.d_head, p.d_head);
    auto kh = nn::slice_cols(k, h * p.d_head, p.d_head);
    auto vh = nn::slice_cols(v, h * p.d_head, p.d_head);
    auto scores = nn::scale(nn::matmul(qh, nn::transpose(kh)), inv_sqrt);
    heads.push_back(nn::matmul(nn::softmax(scores, -1), vh));
  }
  auto merged = p.n_heads == 1 ? heads[0] : nn::concat_cols(heads);
  return nn::add(q_in, nn::add_bias(nn::matmul(merged, p.wo), p.bo));
}

/// Pre-norm residual MLP: x + W2 gelu(W1 LN(x) + b1) + b2.
template <class S>
nn::Tensor<S> mlp_sublayer(const nn::Tensor<S>& x, const MlpParams<S>& p) {
  auto h = nn::layer_normalize(x, p.ln_g, p.ln_b, static_cast<S>(kLayerNormEps));
  h = nn::gelu(nn::add_bias(nn::matmul(h, p.w1), p.b1));
  return nn::add(x, nn::add_bias(nn::matmul(h, p.w2), p.b2));
}

/// Pre-norm self-attention followed by a pre-norm MLP, both residual.
template <class S>
nn::Tensor<S> self_attention_block(const nn::Tensor<S>& x, const AttnParams<S>& attn,
                                   const MlpParams<S>& mlp) {
  return mlp_sublayer(multihead_attention(x, x, attn), mlp);
}

/// Token-mixing MLP across rows (fixed token count) followed by a
/// channel-mixing MLP, both residual with pre-norm.
template <class S>
nn::Tensor<S> mixer_block(const nn::Tensor<S>& x, const MixerParams<S>& p) {
  if (x.dim(0) != p.tok_w1.dim(0))
    throw UsageError("mixer_block: got " + std::to_string(x.dim(0)) + " tokens, block is built for " +
                     std::to_string(p.tok_w1.dim(0)));
  auto xn = nn::layer_normalize(x, p.ln1_g, p.ln1_b, static_cast<S>(kLayerNormEps));
  auto t = nn::transpose(xn);  // [d x n]
  auto h = nn::gelu(nn::add_bias(nn::matmul(t, p.tok_w1), p.tok_b1));
  auto mixed = nn::transpose(nn::add_bias(nn::matmul(h, p.tok_w2), p.tok_b2));
  auto u = nn::add(x, mixed);
  return mlp_sublayer(u, p.channel);
}

template <class S>
class ScoreField {
public:
  ScoreField(ScoreFieldConfig cfg, uint64_t init_seed);

  const ScoreFieldConfig& config() const { return cfg_; }
  nn::ParameterStore<S>& params() { return params_; }
  const nn::ParameterStore<S>& params() const { return params_; }

  /// eps_hat_q = eps_theta(C_t, t, Q_t), on the tape. T is the schedule
  /// length used to normalize the timestep.
  nn::Tensor<S> eval(const ContextSet& ctx, int t, const QuerySet& qry, int T) const;

  /// Tape-free evaluation returning plain signals.
  Mat eval_signals(const ContextSet& ctx, int t, const QuerySet& qry, int T) const;

  /// Embedded pair rows for one set (exposed for tests).
  nn::Tensor<S> embed(const PairSet& set, int t, int T, bool query_side) const;

private:
  ScoreFieldConfig cfg_;
  nn::ParameterStore<S> params_;

  nn::Tensor<S> latents_;
  nn::Tensor<S> embed_ctx_w_, embed_ctx_b_, embed_qry_w_, embed_qry_b_;
  std::vector<AttnParams<S>> enc_cross_;
  std::vector<std::vector<AttnParams<S>>> enc_self_attn_;
  std::vector<std::vector<MlpParams<S>>> enc_self_mlp_;
  std::vector<MlpParams<S>> enc_cross_mlp_;
  std::vector<AttnParams<S>> dec_cross_;
  std::vector<AttnParams<S>> tr_attn_;
  std::vector<MlpParams<S>> tr_mlp_;
  std::vector<MixerParams<S>> mixer_;
  nn::Tensor<S> final_ln_g_, final_ln_b_;
  nn::Tensor<S> head_w_, head_b_;
  nn::Tensor<S> pool_w1_, pool_b1_, pool_w2_, pool_b2_;

  nn::Tensor<S> weight(Rng& rng, const std::string& name, int in, int out, bool zero_init = false);
  nn::Tensor<S> vec_param(const std::string& name, int n, S fill);
  AttnParams<S> make_attn(Rng& rng, const std::string& prefix, bool cross, int d_kv);
  MlpParams<S> make_mlp(Rng& rng, const std::string& prefix, int d);
  MixerParams<S> make_mixer(Rng& rng, const std::string& prefix);
  nn::Tensor<S> pooled_head(const nn::Tensor<S>& encoded, const nn::Tensor<S>& queries) const;
};

extern template class ScoreField<float>;
extern template class ScoreField<double>;

}  // namespace dpf
