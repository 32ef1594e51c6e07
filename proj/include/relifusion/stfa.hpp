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

#ifndef RELIFUSION_STFA_HPP
#define RELIFUSION_STFA_HPP

#include <cstdint>
#include <vector>

#include "relifusion/tensor.hpp"

namespace relifusion::stfa {

enum class Mode { off, spatial, temporal, full };
enum class TemporalPool { mean, concat };

struct StfaConfig {
  int d = 32;            // embedding width
  int T = 3;             // time steps
  int n_views = 6;
  int view_channels = 5;
  int view_h = 8;
  int view_w = 12;
  Mode mode = Mode::full;
  // honor the literal cross-time-only attention (undefined at T=1)
  bool exclude_self = false;
  TemporalPool pool = TemporalPool::mean;
  int mlp_mult = 4;

  int flat_dim() const { return view_channels * view_h * view_w; }
  int pooled_dim() const { return pool == TemporalPool::concat ? n_views * d : d; }
};

struct StfaParams {
  StfaConfig cfg;
  ad::Tensor w_embed;     // [flat_dim, d]
  ad::Tensor b_embed;     // [d]
  ad::Tensor view_embed;  // [n_views, d], learnable per-view offsets
  ad::Tensor wq_s, wk_s, wv_s;  // [d, d] spatial projections
  ad::Tensor wq_t, wk_t, wv_t;  // [d, d] temporal projections
  ad::Tensor p_t;         // [T, d] temporal encodings
  ad::Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // pooled_dim -> mult*pooled_dim -> pooled_dim
  ad::Tensor ln_gain, ln_bias;                // [pooled_dim]

  static StfaParams init(const StfaConfig& cfg, Rng& rng);

  template <typename F>
  void for_each(F&& f) {
    f("stfa/w_embed", w_embed);
    f("stfa/b_embed", b_embed);
    f("stfa/view_embed", view_embed);
    f("stfa/wq_s", wq_s);
    f("stfa/wk_s", wk_s);
    f("stfa/wv_s", wv_s);
    f("stfa/wq_t", wq_t);
    f("stfa/wk_t", wk_t);
    f("stfa/wv_t", wv_t);
    f("stfa/p_t", p_t);
    f("stfa/mlp_w1", mlp_w1);
    f("stfa/mlp_b1", mlp_b1);
    f("stfa/mlp_w2", mlp_w2);
    f("stfa/mlp_b2", mlp_b2);
    f("stfa/ln_gain", ln_gain);
    f("stfa/ln_bias", ln_bias);
  }
};

// E_k = W_embed^T flatten(F_k) + b + view_embed_k, stacked as rows: [6, d]
ad::Tensor embed_views(const std::vector<ad::Tensor>& views,
                       const StfaParams& p, ad::Tape* tape = nullptr);

// Per-view self-attention over the six embeddings (keys include j = k).
ad::Tensor spatial_attention(const ad::Tensor& embeddings, const StfaParams& p,
                             ad::Tape* tape = nullptr);

// S + P_t(t) broadcast over view slots; t is 1-based in [1, T].
ad::Tensor add_temporal_encoding(const ad::Tensor& s, int t, const StfaParams& p,
                                 ad::Tape* tape = nullptr);

// Attention across time steps, run per view slot with shared projections;
// aggregation over query steps is normalized by T. Returns [6, d].
ad::Tensor temporal_attention(const std::vector<ad::Tensor>& s_tilde,
                              const StfaParams& p, ad::Tape* tape = nullptr);

// LayerNorm(x + MLP(x)) on the pooled feature.
ad::Tensor refine(const ad::Tensor& t_agg, const StfaParams& p,
                  ad::Tape* tape = nullptr);

struct StfaOut {
  ad::Tensor t_hat;                  // [pooled_dim]
  std::vector<ad::Tensor> s_cache;   // T x [6, d] spatially aggregated features
};

// Full pipeline: embed -> spatial -> temporal-encode -> temporal -> pool ->
// refine, honoring cfg.mode (spatial-only and temporal-only ablations).
StfaOut stfa_forward(const std::vector<std::vector<ad::Tensor>>& step_views,
                     const StfaParams& p, ad::Tape* tape = nullptr);

}  // namespace relifusion::stfa

#endif  // RELIFUSION_STFA_HPP
