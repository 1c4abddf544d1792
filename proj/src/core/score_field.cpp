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
#include "score_field.hpp"

namespace dpf {

std::string to_string(ScoreArch a) {
  switch (a) {
    case ScoreArch::cross_attention: return "cross_attention";
    case ScoreArch::transformer_encoder: return "transformer_encoder";
    case ScoreArch::mlp_mixer: return "mlp_mixer";
  }
  return "?";
}

ScoreArch score_arch_from_string(const std::string& s) {
  if (s == "cross_attention") return ScoreArch::cross_attention;
  if (s == "transformer_encoder") return ScoreArch::transformer_encoder;
  if (s == "mlp_mixer") return ScoreArch::mlp_mixer;
  throw UsageError("unknown score architecture '" + s + "'");
}

void ScoreFieldConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw UsageError(std::string("score config: ") + name + " must be >= 1");
  };
  positive(n_latents, "n_latents");
  positive(d_latent, "d_latent");
  positive(n_blocks, "n_blocks");
  positive(self_attends_per_block, "self_attends_per_block");
  positive(n_heads, "n_heads");
  positive(decoder_blocks, "decoder_blocks");
  positive(coord_freqs, "coord_freqs");
  positive(time_freqs, "time_freqs");
  positive(signal_dim, "signal_dim");
  positive(mlp_ratio, "mlp_ratio");
  if (coord_dim != 2 && coord_dim != 3)
    throw UsageError("score config: coord_dim must be 2 or 3");
  if (architecture != ScoreArch::mlp_mixer && d_head == 0 && d_latent % n_heads != 0)
    throw UsageError("score config: d_latent (" + std::to_string(d_latent) +
                     ") not divisible by n_heads (" + std::to_string(n_heads) + ")");
  if (architecture == ScoreArch::mlp_mixer && mixer_tokens < 1)
    throw UsageError("score config: mlp_mixer requires mixer_tokens >= 1");
}

namespace {

/// Truncated-normal init scaled by fan-in (resampled beyond 2 sigma).
template <class S>
std::vector<S> trunc_normal(Rng& rng, int64_t n, double std) {
  std::vector<S> out(n);
  for (auto& v : out) {
    double g;
    do {
      g = rng.gaussian();
    } while (std::abs(g) > 2.0);
    v = static_cast<S>(g * std);
  }
  return out;
}

}  // namespace

template <class S>
nn::Tensor<S> ScoreField<S>::weight(Rng& rng, const std::string& name, int in, int out,
                                    bool zero_init) {
  std::vector<S> data;
  if (zero_init)
    data.assign(static_cast<size_t>(in) * out, S(0));
  else
    data = trunc_normal<S>(rng, static_cast<int64_t>(in) * out, 1.0 / std::sqrt(double(in)));
  return params_.add(name, nn::Tensor<S>::leaf({in, out}, std::move(data), true));
}

template <class S>
nn::Tensor<S> ScoreField<S>::vec_param(const std::string& name, int n, S fill) {
  return params_.add(name, nn::Tensor<S>::leaf({n}, std::vector<S>(n, fill), true));
}

template <class S>
AttnParams<S> ScoreField<S>::make_attn(Rng& rng, const std::string& prefix, bool cross, int d_kv) {
  const int d = cfg_.d_latent;
  const int dh = cfg_.head_dim();
  const int proj = cfg_.n_heads * dh;
  AttnParams<S> p;
  p.cross = cross;
  p.n_heads = cfg_.n_heads;
  p.d_head = dh;
  p.ln_q_g = vec_param(prefix + ".ln_q.g", d, S(1));
  p.ln_q_b = vec_param(prefix + ".ln_q.b", d, S(0));
  if (cross) {
    p.ln_kv_g = vec_param(prefix + ".ln_kv.g", d_kv, S(1));
    p.ln_kv_b = vec_param(prefix + ".ln_kv.b", d_kv, S(0));
  }
  p.wq = weight(rng, prefix + ".wq", d, proj);
  p.bq = vec_param(prefix + ".bq", proj, S(0));
  p.wk = weight(rng, prefix + ".wk", d_kv, proj);
  p.bk = vec_param(prefix + ".bk", proj, S(0));
  p.wv = weight(rng, prefix + ".wv", d_kv, proj);
  p.bv = vec_param(prefix + ".bv", proj, S(0));
  p.wo = weight(rng, prefix + ".wo", proj, d);
  p.bo = vec_param(prefix + ".bo", d, S(0));
  return p;
}

template <class S>
MlpParams<S> ScoreField<S>::make_mlp(Rng& rng, const std::string& prefix, int d) {
  const int hidden = cfg_.mlp_ratio * d;
  MlpParams<S> p;
  p.ln_g = vec_param(prefix + ".ln.g", d, S(1));
  p.ln_b = vec_param(prefix + ".ln.b", d, S(0));
  p.w1 = weight(rng, prefix + ".w1", d, hidden);
  p.b1 = vec_param(prefix + ".b1", hidden, S(0));
  p.w2 = weight(rng, prefix + ".w2", hidden, d);
  p.b2 = vec_param(prefix + ".b2", d, S(0));
  return p;
}

template <class S>
MixerParams<S> ScoreField<S>::make_mixer(Rng& rng, const std::string& prefix) {
  const int d = cfg_.d_latent;
  const int n_tok = cfg_.mixer_tokens;
  const int hidden = cfg_.mlp_ratio * n_tok;
  MixerParams<S> p;
  p.ln1_g = vec_param(prefix + ".ln_tok.g", d, S(1));
  p.ln1_b = vec_param(prefix + ".ln_tok.b", d, S(0));
  p.tok_w1 = weight(rng, prefix + ".tok_w1", n_tok, hidden);
  p.tok_b1 = vec_param(prefix + ".tok_b1", hidden, S(0));
  p.tok_w2 = weight(rng, prefix + ".tok_w2", hidden, n_tok);
  p.tok_b2 = vec_param(prefix + ".tok_b2", n_tok, S(0));
  p.channel = make_mlp(rng, prefix + ".ch", d);
  return p;
}

template <class S>
ScoreField<S>::ScoreField(ScoreFieldConfig cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(splitmix64(init_seed ^ 0xd1f5c0de5eedULL));
  const int d = cfg_.d_latent;
  const int in_w = cfg_.embed_in_width();

  embed_ctx_w_ = weight(rng, "embed_ctx.w", in_w, d);
  embed_ctx_b_ = vec_param("embed_ctx.b", d, S(0));
  embed_qry_w_ = weight(rng, "embed_qry.w", in_w, d);
  embed_qry_b_ = vec_param("embed_qry.b", d, S(0));

  switch (cfg_.architecture) {
    case ScoreArch::cross_attention: {
      latents_ = params_.add("latents", nn::Tensor<S>::leaf({cfg_.n_latents, d},
                                                            trunc_normal<S>(rng, int64_t(cfg_.n_latents) * d, 0.02),
                                                            true));
      for (int b = 0; b < cfg_.n_blocks; ++b) {
        std::string base = "enc" + std::to_string(b);
        enc_cross_.push_back(make_attn(rng, base + ".cross", true, d));
        enc_cross_mlp_.push_back(make_mlp(rng, base + ".cross_mlp", d));
        enc_self_attn_.emplace_back();
        enc_self_mlp_.emplace_back();
        for (int sblk = 0; sblk < cfg_.self_attends_per_block; ++sblk) {
          std::string sb = base + ".self" + std::to_string(sblk);
          enc_self_attn_.back().push_back(make_attn(rng, sb + ".attn", false, d));
          enc_self_mlp_.back().push_back(make_mlp(rng, sb + ".mlp", d));
        }
      }
      for (int b = 0; b < cfg_.decoder_blocks; ++b)
        dec_cross_.push_back(make_attn(rng, "dec" + std::to_string(b) + ".cross", true, d));
      final_ln_g_ = vec_param("final_ln.g", d, S(1));
      final_ln_b_ = vec_param("final_ln.b", d, S(0));
      head_w_ = weight(rng, "head.w", d, cfg_.signal_dim, /*zero_init=*/true);
      head_b_ = vec_param("head.b", cfg_.signal_dim, S(0));
      break;
    }
    case ScoreArch::transformer_encoder: {
      for (int b = 0; b < cfg_.n_blocks; ++b) {
        std::string base = "blk" + std::to_string(b);
        tr_attn_.push_back(make_attn(rng, base + ".attn", false, d));
        tr_mlp_.push_back(make_mlp(rng, base + ".mlp", d));
      }
      final_ln_g_ = vec_param("final_ln.g", d, S(1));
      final_ln_b_ = vec_param("final_ln.b", d, S(0));
      pool_w1_ = weight(rng, "head.w1", 2 * d, d);
      pool_b1_ = vec_param("head.b1", d, S(0));
      pool_w2_ = weight(rng, "head.w2", d, cfg_.signal_dim, /*zero_init=*/true);
      pool_b2_ = vec_param("head.b2", cfg_.signal_dim, S(0));
      break;
    }
    case ScoreArch::mlp_mixer: {
      for (int b = 0; b < cfg_.n_blocks; ++b)
        mixer_.push_back(make_mixer(rng, "mix" + std::to_string(b)));
      final_ln_g_ = vec_param("final_ln.g", d, S(1));
      final_ln_b_ = vec_param("final_ln.b", d, S(0));
      pool_w1_ = weight(rng, "head.w1", 2 * d, d);
      pool_b1_ = vec_param("head.b1", d, S(0));
      pool_w2_ = weight(rng, "head.w2", d, cfg_.signal_dim, /*zero_init=*/true);
      pool_b2_ = vec_param("head.b2", cfg_.signal_dim, S(0));
      break;
    }
  }
}

template <class S>
nn::Tensor<S> ScoreField<S>::embed(const PairSet& set, int t, int T, bool query_side) const {
  const Mat& coords = set.coords.m;
  const Mat& signals = set.signals.y;
  if (coords.cols != cfg_.coord_dim)
    throw UsageError("score: coordinate dim " + std::to_string(coords.cols) +
                     " does not match config coord_dim " + std::to_string(cfg_.coord_dim));
  if (signals.cols != cfg_.signal_dim)
    throw UsageError("score: signal dim " + std::to_string(signals.cols) +
                     " does not match config signal_dim " + std::to_string(cfg_.signal_dim));
  if (coords.rows != signals.rows)
    throw UsageError("score: coordinate rows " + std::to_string(coords.rows) +
                     " != signal rows " + std::to_string(signals.rows));
  if (t < 1 || t > T)
    throw UsageError("score: t=" + std::to_string(t) + " outside {1.." + std::to_string(T) + "}");

  const int n = coords.rows;
  const int width = cfg_.embed_in_width();
  Mat ladder = fourier_encode(coords, cfg_.coord_freqs);
  double t_norm = static_cast<double>(t) / static_cast<double>(T);
  std::vector<double> t_feat = fourier_encode_scalar(t_norm, cfg_.time_freqs);

  std::vector<S> rows(static_cast<size_t>(n) * width);
  for (int r = 0; r < n; ++r) {
    S* dst = rows.data() + static_cast<size_t>(r) * width;
    int c = 0;
    for (int j = 0; j < ladder.cols; ++j) dst[c++] = static_cast<S>(ladder(r, j));
    for (int j = 0; j < coords.cols; ++j) dst[c++] = static_cast<S>(coords(r, j));
    for (int j = 0; j < signals.cols; ++j) dst[c++] = static_cast<S>(signals(r, j));
    for (double f : t_feat) dst[c++] = static_cast<S>(f);
    dst[c++] = static_cast<S>(t_norm);
  }
  auto input = nn::Tensor<S>::leaf({n, width}, std::move(rows), false);
  const auto& w = query_side ? embed_qry_w_ : embed_ctx_w_;
  const auto& b = query_side ? embed_qry_b_ : embed_ctx_b_;
  return nn::add_bias(nn::matmul(input, w), b);
}

template <class S>
nn::Tensor<S> ScoreField<S>::pooled_head(const nn::Tensor<S>& encoded,
                                         const nn::Tensor<S>& queries) const {
  auto pooled = nn::mean_rows(
      nn::layer_normalize(encoded, final_ln_g_, final_ln_b_, static_cast<S>(kLayerNormEps)));
  auto rep = nn::tile_rows(pooled, queries.dim(0));
  auto h = nn::concat_cols<S>({queries, rep});
  h = nn::gelu(nn::add_bias(nn::matmul(h, pool_w1_), pool_b1_));
  return nn::add_bias(nn::matmul(h, pool_w2_), pool_b2_);
}

template <class S>
nn::Tensor<S> ScoreField<S>::eval(const ContextSet& ctx, int t, const QuerySet& qry, int T) const {
  if (ctx.size() < 1 || qry.size() < 1)
    throw UsageError("score: context and query sets must be non-empty");
  auto e_ctx = embed(ctx, t, T, /*query_side=*/false);
  auto e_qry = embed(qry, t, T, /*query_side=*/true);

  switch (cfg_.architecture) {
    case ScoreArch::cross_attention: {
      auto z = latents_;
      for (int b = 0; b < cfg_.n_blocks; ++b) {
        z = multihead_attention(z, e_ctx, enc_cross_[b]);
        z = mlp_sublayer(z, enc_cross_mlp_[b]);
        for (int sblk = 0; sblk < cfg_.self_attends_per_block; ++sblk)
          z = self_attention_block(z, enc_self_attn_[b][sblk], enc_self_mlp_[b][sblk]);
      }
      auto out = e_qry;
      for (const auto& dec : dec_cross_) out = multihead_attention(out, z, dec);
      out = nn::layer_normalize(out, final_ln_g_, final_ln_b_, static_cast<S>(kLayerNormEps));
      return nn::add_bias(nn::matmul(out, head_w_), head_b_);
    }
    case ScoreArch::transformer_encoder: {
      auto h = e_ctx;
      for (int b = 0; b < cfg_.n_blocks; ++b) h = self_attention_block(h, tr_attn_[b], tr_mlp_[b]);
      return pooled_head(h, e_qry);
    }
    case ScoreArch::mlp_mixer: {
      if (ctx.size() != cfg_.mixer_tokens)
        throw UsageError("score: mlp_mixer built for " + std::to_string(cfg_.mixer_tokens) +
                         " context tokens, got " + std::to_string(ctx.size()));
      auto h = e_ctx;
      for (const auto& blk : mixer_) h = mixer_block(h, blk);
      return pooled_head(h, e_qry);
    }
  }
  throw UsageError("score: unknown architecture");
}

template <class S>
Mat ScoreField<S>::eval_signals(const ContextSet& ctx, int t, const QuerySet& qry, int T) const {
  nn::NoGradGuard ng;
  nn::Tensor<S> out = eval(ctx, t, qry, T);
  Mat m(qry.size(), cfg_.signal_dim);
  for (size_t i = 0; i < m.v.size(); ++i) m.v[i] = static_cast<double>(out.data()[i]);
  return m;
}

template class ScoreField<float>;
template class ScoreField<double>;

}  // namespace dpf
