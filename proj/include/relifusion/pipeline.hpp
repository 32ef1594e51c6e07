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

#ifndef RELIFUSION_PIPELINE_HPP
#define RELIFUSION_PIPELINE_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "relifusion/bev.hpp"
#include "relifusion/fusion.hpp"
#include "relifusion/reliability.hpp"
#include "relifusion/scene.hpp"
#include "relifusion/stfa.hpp"

namespace relifusion::pipeline {

struct ModelConfig {
  bev::GridConfig grid = bev::GridConfig::square(16, 24.0, {-0.5, 0.0, 0.5, 1.5, 3.5});
  scene::ViewGeometry view_geom;
  stfa::StfaConfig stfa;
  rel::ReliabilityConfig rel;
  fusion::FusionConfig fus;
  fusion::HeadConfig head;
  int depth_bins = 6;
  int n_classes = 3;
  fusion::Mode fusion_mode = fusion::Mode::cw_mca;
  bool reliability_on = true;

  int channels() const { return grid.channels(); }
  // Propagates the shared channel count/grid dims into the per-module
  // configs and validates consistency.
  void finalize();
};

struct Model {
  ModelConfig cfg;
  stfa::StfaParams stfa_p;
  rel::ReliabilityParams rel_p;
  fusion::FusionParams fus_p;
  fusion::HeadParams head_p;
  ad::Tensor depth_logits;  // [view_w, depth_bins]
  ad::Tensor w_mod, b_mod;  // [pooled_dim, C], [C]: T_hat channel modulation

  static Model init(const ModelConfig& cfg, std::uint64_t seed);

  template <typename F>
  void for_each_param(F&& f) {
    stfa_p.for_each(f);
    f("cam/depth_logits", depth_logits);
    f("cam/w_mod", w_mod);
    f("cam/b_mod", b_mod);
    rel_p.for_each(f);
    fus_p.for_each(f);
    head_p.for_each(f);
  }

  // Copy whose parameters are tape leaves, in for_each_param order.
  Model bind(ad::Tape& tape) const;

  std::vector<std::pair<std::string, const ad::Tensor*>> named_params() const;
  void load_params(const std::map<std::string, ad::Tensor>& blocks);
};

struct RunOpts {
  bool zero_lidar = false;   // stage-2 stream isolation
  bool zero_camera = false;
  bool need_embeddings = true;
  bool need_head = true;
};

struct PipelineOut {
  bev::BevGrid lidar_bev;
  bev::BevGrid camera_bev;  // post-modulation camera branch
  ad::Tensor z_lidar, z_camera;
  ad::Tensor c_lidar, c_camera;  // [1]; constant 1 when reliability is off
  std::vector<ad::Tensor> s_cache;
  bev::BevGrid fused;
  fusion::HeadOut head;
};

PipelineOut run_pipeline(const Model& m, const scene::Sequence& seq,
                         ad::Tape* tape = nullptr, const RunOpts& opts = {});

// The camera branch alone (lift-splat + optional STFA modulation), reused for
// corrupted-view embedding passes.
bev::BevGrid camera_branch(const Model& m,
                           const std::vector<std::vector<ad::Tensor>>& step_views,
                           ad::Tape* tape, std::vector<ad::Tensor>* s_cache_out);

std::vector<fusion::Detection> infer_detections(const Model& m,
                                                const scene::Sequence& seq,
                                                double score_threshold,
                                                double nms_iou);

}  // namespace relifusion::pipeline

#endif  // RELIFUSION_PIPELINE_HPP
