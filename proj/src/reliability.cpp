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

#include "relifusion/reliability.hpp"

#include <cmath>

#include "relifusion/errors.hpp"

namespace relifusion::rel {

using ad::Tensor;

ReliabilityParams ReliabilityParams::init(const ReliabilityConfig& cfg, Rng& rng) {
  ReliabilityParams p;
  p.cfg = cfg;
  auto make_mlp = [&]() {
    std::vector<ad::LinearLayer> mlp;
    mlp.push_back({Tensor::randn({cfg.in_channels, cfg.hidden}, rng,
                                 1.0 / std::sqrt(static_cast<double>(cfg.in_channels))),
                   Tensor::randn({cfg.hidden}, rng, 0.01)});
    mlp.push_back({Tensor::randn({cfg.hidden, cfg.embed_dim}, rng,
                                 1.0 / std::sqrt(static_cast<double>(cfg.hidden))),
                   Tensor::randn({cfg.embed_dim}, rng, 0.01)});
    return mlp;
  };
  // small random biases keep the all-zero-grid embedding well defined
  p.mlp_lidar = make_mlp();
  p.mlp_camera = make_mlp();
  p.w_conf_lidar = Tensor::randn({cfg.embed_dim}, rng, 0.1);
  p.b_conf_lidar = Tensor::zeros({1});
  p.w_conf_camera = Tensor::randn({cfg.embed_dim}, rng, 0.1);
  p.b_conf_camera = Tensor::zeros({1});
  return p;
}

Tensor embed_modality(const bev::BevGrid& grid, Modality which,
                      const ReliabilityParams& p, ad::Tape* tape) {
  const int C = grid.features.shape[0];
  if (C != p.cfg.in_channels) {
    throw DimensionError("embed_modality: grid has " + std::to_string(C) +
                         " channels, expected " + std::to_string(p.cfg.in_channels));
  }
  const int hw = grid.features.shape[1] * grid.features.shape[2];
  Tensor pooled = ad::row_mean(ad::reshape(grid.features, {C, hw}, tape), tape);
  const auto& mlp = which == Modality::lidar ? p.mlp_lidar : p.mlp_camera;
  Tensor z = ad::mlp_forward(pooled, mlp, tape);
  return ad::l2_normalize(z, tape);
}

Tensor confidence(const ad::Tensor& z, Modality which, const ReliabilityParams& p,
                  ad::Tape* tape) {
  const Tensor& w = which == Modality::lidar ? p.w_conf_lidar : p.w_conf_camera;
  const Tensor& b = which == Modality::lidar ? p.b_conf_lidar : p.b_conf_camera;
  Tensor s = ad::add(ad::dot(w, z, tape), b, tape);
  return ad::sigmoid(s, tape);
}

namespace {

void require_unit_rows(const char* who, const Tensor& z) {
  const int k = z.rows(), d = z.cols();
  for (int i = 0; i < k; ++i) {
    double nsq = 0.0;
    for (int j = 0; j < d; ++j) nsq += z.at(i, j) * z.at(i, j);
    if (std::fabs(nsq - 1.0) > 1e-6) {
      throw ArgumentError(std::string(who) + ": embeddings must be unit-norm");
    }
  }
}

// mean_i [ logsumexp_j(S_ij) - S_ii ] with S = queries . keys^T / tau
Tensor one_direction(const Tensor& queries, const Tensor& keys, double tau,
                     ad::Tape* tape) {
  const int k = queries.rows();
  Tensor sims = ad::mul_scalar(ad::matmul(queries, ad::transpose(keys, tape), tape),
                               1.0 / tau, tape);
  Tensor lse = ad::logsumexp_rows(sims, tape);
  Tensor diag_mask = Tensor::zeros(sims.shape);
  for (int i = 0; i < k; ++i) diag_mask.at(i, i) = 1.0;
  Tensor diag = ad::row_sum(ad::mul(sims, diag_mask, tape), tape);
  return ad::mean(ad::sub(lse, diag, tape), tape);
}

}  // namespace

Tensor contrastive_loss(const Tensor& z_lidar, const Tensor& z_camera, double tau,
                        ad::Tape* tape, const Tensor* extra_camera_keys,
                        const Tensor* extra_lidar_keys, bool symmetric) {
  if (tau <= 0.0) throw ArgumentError("contrastive_loss: tau must be > 0");
  if (z_lidar.rank() != 2 || z_camera.rank() != 2 ||
      z_lidar.shape != z_camera.shape) {
    throw ArgumentError("contrastive_loss: batches must be [K x d] and aligned");
  }
  const int k = z_lidar.rows();
  if (k < 1) throw ArgumentError("contrastive_loss: empty batch");
  require_unit_rows("contrastive_loss", z_lidar);
  require_unit_rows("contrastive_loss", z_camera);

  Tensor camera_keys = z_camera;
  if (extra_camera_keys != nullptr && extra_camera_keys->size() > 0) {
    camera_keys = ad::concat_rows({z_camera, *extra_camera_keys}, tape);
  }
  Tensor loss = one_direction(z_lidar, camera_keys, tau, tape);
  if (symmetric) {
    Tensor lidar_keys = z_lidar;
    if (extra_lidar_keys != nullptr && extra_lidar_keys->size() > 0) {
      lidar_keys = ad::concat_rows({z_lidar, *extra_lidar_keys}, tape);
    }
    Tensor rev = one_direction(z_camera, lidar_keys, tau, tape);
    loss = ad::mul_scalar(ad::add(loss, rev, tape), 0.5, tape);
  }
  return loss;
}

PairSet make_pairs(int batch_size, const CorruptionSampler& sampler,
                   std::uint64_t seed) {
  if (batch_size < 1) throw ArgumentError("make_pairs: batch_size < 1");
  PairSet out;
  for (int i = 0; i < batch_size; ++i) out.positives.push_back(i);
  for (int i = 0; i < batch_size; ++i) {
    for (int j = 0; j < batch_size; ++j) {
      if (i == j) continue;
      PairSet::Negative n;
      n.i = i;
      n.j = j;
      out.negatives.push_back(n);
    }
  }
  if (sampler.enabled()) {
    Rng rng(seed);
    for (int i = 0; i < batch_size; ++i) {
      if (rng.uniform01() < sampler.rate) {
        PairSet::Negative n;
        n.i = i;
        n.j = i;
        n.spec = sampler.menu[static_cast<std::size_t>(rng.below(sampler.menu.size()))];
        n.corrupted_modality = n.spec.affects_lidar() ? 0 : 1;
        out.negatives.push_back(n);
      }
    }
  }
  return out;
}

}  // namespace relifusion::rel
