/*
 * Copyright 2026 The ReliFusion Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "relifusion/stfa.hpp"

#include <cmath>

#include "relifusion/errors.hpp"

namespace relifusion::stfa {

using ad::Tensor;

StfaParams StfaParams::init(const StfaConfig& cfg, Rng& rng) {
  StfaParams p;
  p.cfg = cfg;
  const int d = cfg.d, F = cfg.flat_dim(), dp = cfg.pooled_dim();
  p.w_embed = Tensor::randn({F, d}, rng, 1.0 / std::sqrt(static_cast<double>(F)));
  p.b_embed = Tensor::zeros({d});
  p.view_embed = Tensor::randn({cfg.n_views, d}, rng, 0.02);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  p.wq_s = Tensor::randn({d, d}, rng, sd);
  p.wk_s = Tensor::randn({d, d}, rng, sd);
  p.wv_s = Tensor::randn({d, d}, rng, sd);
  p.wq_t = Tensor::randn({d, d}, rng, sd);
  p.wk_t = Tensor::randn({d, d}, rng, sd);
  p.wv_t = Tensor::randn({d, d}, rng, sd);
  p.p_t = Tensor::randn({cfg.T, d}, rng, 0.02);
  const int hid = cfg.mlp_mult * dp;
  p.mlp_w1 = Tensor::randn({dp, hid}, rng, 1.0 / std::sqrt(static_cast<double>(dp)));
  p.mlp_b1 = Tensor::zeros({hid});
  p.mlp_w2 = Tensor::randn({hid, dp}, rng, 1.0 / std::sqrt(static_cast<double>(hid)));
  p.mlp_b2 = Tensor::zeros({dp});
  p.ln_gain = Tensor::full({dp}, 1.0);
  p.ln_bias = Tensor::zeros({dp});
  return p;
}

Tensor embed_views(const std::vector<Tensor>& views, const StfaParams& p,
                   ad::Tape* tape) {
  const StfaConfig& cfg = p.cfg;
  if (static_cast<int>(views.size()) != cfg.n_views) {
    throw DimensionError("embed_views: expected " + std::to_string(cfg.n_views) +
                         " views");
  }
  // flatten the (constant) maps into one [6, F] matrix
  Tensor flat = Tensor::zeros({cfg.n_views, cfg.flat_dim()});
  for (int k = 0; k < cfg.n_views; ++k) {
    const Tensor& v = views[static_cast<std::size_t>(k)];
    if (v.size() != cfg.flat_dim()) {
      throw DimensionError("embed_views: view " + std::to_string(k) + " has shape " +
                           v.shape_str() + ", expected " +
                           std::to_string(cfg.flat_dim()) + " values");
    }
    std::copy(v.v.begin(), v.v.end(),
              flat.v.begin() + static_cast<std::ptrdiff_t>(k) * cfg.flat_dim());
  }
  Tensor e = ad::add_rowvec(ad::matmul(flat, p.w_embed, tape), p.b_embed, tape);
  return ad::add(e, p.view_embed, tape);
}

namespace {

// softmax((M Wq)(M' Wk)^T / sqrt(d)) (M' Wv), optionally masking the diagonal.
Tensor attention_block(const Tensor& queries, const Tensor& keys_values,
                       const Tensor& wq, const Tensor& wk, const Tensor& wv,
                       int d, bool mask_diag, ad::Tape* tape) {
  Tensor q = ad::matmul(queries, wq, tape);
  Tensor k = ad::matmul(keys_values, wk, tape);
  Tensor v = ad::matmul(keys_values, wv, tape);
  Tensor logits = ad::mul_scalar(ad::matmul(q, ad::transpose(k, tape), tape),
                                 1.0 / std::sqrt(static_cast<double>(d)), tape);
  if (mask_diag) {
    Tensor mask = Tensor::zeros(logits.shape);
    const int n = logits.shape[0];
    for (int i = 0; i < n; ++i) mask.at(i, i) = -1e9;
    logits = ad::add(logits, mask, tape);
  }
  Tensor attn = ad::softmax_rows(logits, tape);
  return ad::matmul(attn, v, tape);
}

}  // namespace

Tensor spatial_attention(const Tensor& embeddings, const StfaParams& p,
                         ad::Tape* tape) {
  if (embeddings.rank() != 2 || embeddings.shape[0] != p.cfg.n_views ||
      embeddings.shape[1] != p.cfg.d) {
    throw DimensionError("spatial_attention: expected [" +
                         std::to_string(p.cfg.n_views) + "x" +
                         std::to_string(p.cfg.d) + "], got " +
                         embeddings.shape_str());
  }
  return attention_block(embeddings, embeddings, p.wq_s, p.wk_s, p.wv_s, p.cfg.d,
                         false, tape);
}

Tensor add_temporal_encoding(const Tensor& s, int t, const StfaParams& p,
                             ad::Tape* tape) {
  if (t < 1 || t > p.cfg.T) {
    throw ArgumentError("add_temporal_encoding: t=" + std::to_string(t) +
                        " outside [1, " + std::to_string(p.cfg.T) + "]");
  }
  Tensor pt = ad::reshape(ad::slice_rows(p.p_t, t - 1, t, tape), {p.cfg.d}, tape);
  return ad::add_rowvec(s, pt, tape);
}

Tensor temporal_attention(const std::vector<Tensor>& s_tilde, const StfaParams& p,
                          ad::Tape* tape) {
  const int T = static_cast<int>(s_tilde.size());
  if (T < 1) throw ArgumentError("temporal_attention: T < 1");
  const bool mask = p.cfg.exclude_self && T >= 2;

  std::vector<Tensor> slot_rows;
  slot_rows.reserve(static_cast<std::size_t>(p.cfg.n_views));
  for (int slot = 0; slot < p.cfg.n_views; ++slot) {
    std::vector<Tensor> rows;
    rows.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      rows.push_back(ad::slice_rows(s_tilde[static_cast<std::size_t>(t)], slot, slot + 1, tape));
    }
    Tensor m = T == 1 ? rows[0] : ad::concat_rows(rows, tape);  // [T, d]
    Tensor attended = attention_block(m, m, p.wq_t, p.wk_t, p.wv_t, p.cfg.d, mask, tape);
    // aggregate over query steps, normalized so T identical steps match T=1
    Tensor agg = ad::row_mean(ad::transpose(attended, tape), tape);  // [d]
    slot_rows.push_back(ad::reshape(agg, {1, p.cfg.d}, tape));
  }
  return ad::concat_rows(slot_rows, tape);  // [6, d]
}

Tensor refine(const Tensor& t_agg, const StfaParams& p, ad::Tape* tape) {
  std::vector<ad::LinearLayer> mlp = {{p.mlp_w1, p.mlp_b1}, {p.mlp_w2, p.mlp_b2}};
  Tensor h = ad::add(t_agg, ad::mlp_forward(t_agg, mlp, tape), tape);
  return ad::layer_norm(h, p.ln_gain, p.ln_bias, 1e-5, tape);
}

namespace {

Tensor pool_slots(const Tensor& slots, const StfaParams& p, ad::Tape* tape) {
  if (p.cfg.pool == TemporalPool::concat) {
    return ad::reshape(slots, {p.cfg.n_views * p.cfg.d}, tape);
  }
  return ad::row_mean(ad::transpose(slots, tape), tape);  // mean over slots -> [d]
}

}  // namespace

StfaOut stfa_forward(const std::vector<std::vector<Tensor>>& step_views,
                     const StfaParams& p, ad::Tape* tape) {
  if (p.cfg.mode == Mode::off) {
    throw ArgumentError("stfa_forward: module is disabled (mode off)");
  }
  const int T = static_cast<int>(step_views.size());
  if (T < 1 || T > p.cfg.T) {
    throw ArgumentError("stfa_forward: got " + std::to_string(T) +
                        " steps for T=" + std::to_string(p.cfg.T));
  }

  StfaOut out;
  out.s_cache.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    Tensor e = embed_views(step_views[static_cast<std::size_t>(t)], p, tape);
    Tensor s = p.cfg.mode == Mode::temporal ? e : spatial_attention(e, p, tape);
    out.s_cache.push_back(s);
  }

  Tensor slots;  // [6, d]
  if (p.cfg.mode == Mode::spatial) {
    slots = out.s_cache[0];
    for (int t = 1; t < T; ++t) slots = ad::add(slots, out.s_cache[static_cast<std::size_t>(t)], tape);
    slots = ad::mul_scalar(slots, 1.0 / T, tape);
  } else {
    std::vector<Tensor> s_tilde;
    s_tilde.reserve(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      s_tilde.push_back(add_temporal_encoding(out.s_cache[static_cast<std::size_t>(t)], t + 1, p, tape));
    }
    slots = temporal_attention(s_tilde, p, tape);
  }

  out.t_hat = refine(pool_slots(slots, p, tape), p, tape);
  return out;
}

}  // namespace relifusion::stfa
