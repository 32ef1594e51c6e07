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

#include "relifusion/pipeline.hpp"

#include <cmath>

#include "relifusion/errors.hpp"

namespace relifusion::pipeline {

using ad::Tensor;

void ModelConfig::finalize() {
  grid.validate();
  stfa.view_channels = channels();
  stfa.view_h = view_geom.height;
  stfa.view_w = view_geom.width;
  stfa.n_views = view_geom.n_views;
  rel.in_channels = channels();
  fus.channels = channels();
  fus.grid_h = grid.h;
  fus.grid_w = grid.w;
  head.channels = channels();
  head.n_classes = n_classes;
  head.grid_h = grid.h;
  head.grid_w = grid.w;
  if (depth_bins < 1) throw ConfigError("model: depth_bins must be >= 1");
  if (n_classes < 1) throw ConfigError("model: n_classes must be >= 1");
  if (stfa.T < 1) throw ConfigError("model: stfa.T must be >= 1");
}

Model Model::init(const ModelConfig& cfg_in, std::uint64_t seed) {
  Model m;
  m.cfg = cfg_in;
  m.cfg.finalize();
  Rng rs(derive_seed(seed, "init/stfa"));
  m.stfa_p = stfa::StfaParams::init(m.cfg.stfa, rs);
  Rng rr(derive_seed(seed, "init/rel"));
  m.rel_p = rel::ReliabilityParams::init(m.cfg.rel, rr);
  Rng rf(derive_seed(seed, "init/fusion"));
  m.fus_p = fusion::FusionParams::init(m.cfg.fus, rf);
  Rng rh(derive_seed(seed, "init/head"));
  m.head_p = fusion::HeadParams::init(m.cfg.head, rh);
  Rng rc(derive_seed(seed, "init/cam"));
  m.depth_logits = Tensor::randn({m.cfg.view_geom.width, m.cfg.depth_bins}, rc, 0.1);
  m.w_mod = Tensor::randn({m.cfg.stfa.pooled_dim(), m.cfg.channels()}, rc, 0.02);
  m.b_mod = Tensor::zeros({m.cfg.channels()});
  return m;
}

Model Model::bind(ad::Tape& tape) const {
  Model bound = *this;
  bound.for_each_param([&](const char*, Tensor& t) { t = tape.leaf(t); });
  return bound;
}

std::vector<std::pair<std::string, const Tensor*>> Model::named_params() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  const_cast<Model*>(this)->for_each_param(
      [&](const char* name, Tensor& t) { out.push_back({name, &t}); });
  return out;
}

void Model::load_params(const std::map<std::string, Tensor>& blocks) {
  for_each_param([&](const char* name, Tensor& t) {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw IoError(std::string("checkpoint missing parameter ") + name);
    if (it->second.shape != t.shape) {
      throw IoError(std::string("checkpoint shape mismatch for ") + name + ": " +
                    it->second.shape_str() + " vs " + t.shape_str());
    }
    t = it->second;
  });
}

namespace {

std::vector<std::vector<Tensor>> collect_views(const Model& m,
                                               const scene::Sequence& seq,
                                               bool zero_camera) {
  std::vector<std::vector<Tensor>> steps;
  steps.reserve(seq.frames.size());
  for (const scene::Frame& f : seq.frames) {
    if (zero_camera) {
      steps.emplace_back(static_cast<std::size_t>(m.cfg.view_geom.n_views),
                         Tensor::zeros({m.cfg.channels(), m.cfg.view_geom.height,
                                        m.cfg.view_geom.width}));
    } else {
      steps.push_back(f.views);
    }
  }
  return steps;
}

// per-channel additive modulation of the grid by a [C] vector
Tensor modulate_channels(const Tensor& grid_feat, const Tensor& mod, ad::Tape* tape) {
  const int C = grid_feat.shape[0];
  const int hw = grid_feat.shape[1] * grid_feat.shape[2];
  Tensor tokens = ad::transpose(ad::reshape(grid_feat, {C, hw}, tape), tape);
  Tensor shifted = ad::add_rowvec(tokens, mod, tape);
  return ad::reshape(ad::transpose(shifted, tape),
                     {C, grid_feat.shape[1], grid_feat.shape[2]}, tape);
}

}  // namespace

bev::BevGrid camera_branch(const Model& m,
                           const std::vector<std::vector<Tensor>>& step_views,
                           ad::Tape* tape, std::vector<Tensor>* s_cache_out) {
  const auto& last = step_views.back();
  bev::BevGrid cam = bev::lift_splat(last, m.cfg.view_geom, m.depth_logits,
                                     m.cfg.grid, tape);
  if (m.cfg.stfa.mode != stfa::Mode::off) {
    stfa::StfaOut so = stfa::stfa_forward(step_views, m.stfa_p, tape);
    if (s_cache_out != nullptr) *s_cache_out = so.s_cache;
    Tensor t_hat_row = ad::reshape(so.t_hat, {1, m.cfg.stfa.pooled_dim()}, tape);
    Tensor mod = ad::reshape(
        ad::add_rowvec(ad::matmul(t_hat_row, m.w_mod, tape), m.b_mod, tape),
        {m.cfg.channels()}, tape);
    cam.features = modulate_channels(cam.features, mod, tape);
  } else if (s_cache_out != nullptr) {
    s_cache_out->clear();
  }
  return cam;
}

PipelineOut run_pipeline(const Model& m, const scene::Sequence& seq, ad::Tape* tape,
                         const RunOpts& opts) {
  if (seq.frames.empty()) throw ArgumentError("run_pipeline: empty sequence");
  PipelineOut out;

  // LiDAR branch: voxelized current frame
  if (opts.zero_lidar) {
    out.lidar_bev = bev::BevGrid{Tensor::zeros({m.cfg.channels(), m.cfg.grid.h,
                                                m.cfg.grid.w}),
                                 m.cfg.grid};
  } else {
    out.lidar_bev = bev::voxelize(seq.frames.back().cloud, m.cfg.grid);
  }

  // Camera branch
  auto step_views = collect_views(m, seq, opts.zero_camera);
  out.camera_bev = camera_branch(m, step_views, tape, &out.s_cache);

  // Reliability
  if (m.cfg.reliability_on) {
    out.z_lidar = rel::embed_modality(out.lidar_bev, rel::Modality::lidar, m.rel_p, tape);
    out.z_camera = rel::embed_modality(out.camera_bev, rel::Modality::camera, m.rel_p, tape);
    out.c_lidar = rel::confidence(out.z_lidar, rel::Modality::lidar, m.rel_p, tape);
    out.c_camera = rel::confidence(out.z_camera, rel::Modality::camera, m.rel_p, tape);
  } else {
    out.c_lidar = Tensor::scalar(1.0);
    out.c_camera = Tensor::scalar(1.0);
    if (opts.need_embeddings) {
      // embeddings still available for diagnostics when asked for
      out.z_lidar = rel::embed_modality(out.lidar_bev, rel::Modality::lidar, m.rel_p, tape);
      out.z_camera = rel::embed_modality(out.camera_bev, rel::Modality::camera, m.rel_p, tape);
    }
  }

  if (opts.need_head) {
    // The fusion product uses detached confidence values: the scores are
    // supervised by their own regression loss, and letting the detection
    // gradient rescale them destroys the clean/corrupted discrimination.
    const Tensor c_l = Tensor::scalar(out.c_lidar.v[0]);
    const Tensor c_c = Tensor::scalar(out.c_camera.v[0]);
    out.fused = fusion::baseline_fusions(out.lidar_bev, out.camera_bev,
                                         m.cfg.fusion_mode, m.fus_p, c_l, c_c, tape);
    out.head = fusion::head_forward(out.fused, m.head_p, tape);
  }
  return out;
}

std::vector<fusion::Detection> infer_detections(const Model& m,
                                                const scene::Sequence& seq,
                                                double score_threshold,
                                                double nms_iou) {
  RunOpts opts;
  opts.need_embeddings = false;
  PipelineOut out = run_pipeline(m, seq, nullptr, opts);
  return fusion::decode_detections(out.head.heat_logits, out.head.reg, m.cfg.grid,
                                   score_threshold, nms_iou);
}

}  // namespace relifusion::pipeline
