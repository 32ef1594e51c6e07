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

#ifndef RELIFUSION_RELIABILITY_HPP
#define RELIFUSION_RELIABILITY_HPP

#include <cstdint>
#include <vector>

#include "relifusion/bev.hpp"
#include "relifusion/corruption.hpp"
#include "relifusion/tensor.hpp"

namespace relifusion::rel {

enum class Modality { lidar, camera };

struct ReliabilityConfig {
  int in_channels = 5;  // BEV grid channels after pooling
  int hidden = 256;
  int embed_dim = 128;
  double tau = 0.07;
  // Eq-literal loss uses camera-side negatives only; the mirrored term is
  // optional.
  bool symmetric = false;
};

struct ReliabilityParams {
  ReliabilityConfig cfg;
  std::vector<ad::LinearLayer> mlp_lidar;   // in -> hidden -> embed
  std::vector<ad::LinearLayer> mlp_camera;
  ad::Tensor w_conf_lidar, b_conf_lidar;    // [embed], [1]
  ad::Tensor w_conf_camera, b_conf_camera;

  static ReliabilityParams init(const ReliabilityConfig& cfg, Rng& rng);

  template <typename F>
  void for_each(F&& f) {
    f("rel/mlp_lidar_w1", mlp_lidar[0].w);
    f("rel/mlp_lidar_b1", mlp_lidar[0].b);
    f("rel/mlp_lidar_w2", mlp_lidar[1].w);
    f("rel/mlp_lidar_b2", mlp_lidar[1].b);
    f("rel/mlp_camera_w1", mlp_camera[0].w);
    f("rel/mlp_camera_b1", mlp_camera[0].b);
    f("rel/mlp_camera_w2", mlp_camera[1].w);
    f("rel/mlp_camera_b2", mlp_camera[1].b);
    f("rel/w_conf_lidar", w_conf_lidar);
    f("rel/b_conf_lidar", b_conf_lidar);
    f("rel/w_conf_camera", w_conf_camera);
    f("rel/b_conf_camera", b_conf_camera);
  }
};

// Global-average-pool over H x W, modality MLP, L2 normalization. Throws
// DegenerateError when the vector to normalize has near-zero norm.
ad::Tensor embed_modality(const bev::BevGrid& grid, Modality which,
                          const ReliabilityParams& p, ad::Tape* tape = nullptr);

// sigma(w . z + b) for the modality head; scalar strictly inside (0, 1).
ad::Tensor confidence(const ad::Tensor& z, Modality which,
                      const ReliabilityParams& p, ad::Tape* tape = nullptr);

// Temperature-scaled alignment loss over row-aligned unit embeddings
// [K, embed]: positives on the diagonal, in-batch negatives off it, optional
// extra negative keys appended to the denominator. symmetric=true adds the
// mirrored (lidar-side) term and halves the sum.
ad::Tensor contrastive_loss(const ad::Tensor& z_lidar, const ad::Tensor& z_camera,
                            double tau, ad::Tape* tape = nullptr,
                            const ad::Tensor* extra_camera_keys = nullptr,
                            const ad::Tensor* extra_lidar_keys = nullptr,
                            bool symmetric = false);

// Which scenes pair with which for the contrastive stage.
struct PairSet {
  struct Negative {
    int i = 0;
    int j = 0;
    // -1: plain cross-scene negative. Otherwise the same-scene pair where one
    // modality passed through `spec`.
    int corrupted_modality = -1;  // 0 lidar, 1 camera
    corrupt::CorruptionSpec spec;
  };
  std::vector<int> positives;  // scene index i pairs with itself
  std::vector<Negative> negatives;
};

struct CorruptionSampler {
  double rate = 1.0;
  std::vector<corrupt::CorruptionSpec> menu;  // empty = disabled

  bool enabled() const { return rate > 0.0 && !menu.empty(); }
};

// Positives: the clean (lidar, camera) pair per scene. Negatives: every
// cross-scene pair plus, per sampled scene, a same-scene pair with one
// corrupted modality.
PairSet make_pairs(int batch_size, const CorruptionSampler& sampler,
                   std::uint64_t seed);

}  // namespace relifusion::rel

#endif  // RELIFUSION_RELIABILITY_HPP
