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

#ifndef RELIFUSION_CONFIG_HPP
#define RELIFUSION_CONFIG_HPP

#include <string>
#include <vector>

#include "relifusion/train.hpp"

namespace relifusion::cli {

// Whole-experiment configuration: dataset synthesis, model dimensions, the
// three training stages and evaluation knobs. Parsed from a key=value text
// file; unknown keys are rejected. All randomness derives from `seed`.
struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "runs/out";

  int train_scenes = 48;
  int test_scenes = 32;
  int objects_min = 2;
  int objects_max = 4;
  int T = 2;
  int points = 512;
  double noise_sigma = 0.02;
  double extent = 24.0;
  int classes = 3;
  double view_noise = 0.05;
  bool static_objects = false;

  int grid_cells = 16;
  int zbins = 4;
  double z_min = -0.5;
  double z_max = 3.5;

  int view_h = 8;
  int view_w = 12;
  double r_min = 1.0;
  double r_max = 16.0;

  int d = 16;
  int d_k = 16;
  int embed_hidden = 256;
  int embed_dim = 128;
  double tau = 0.07;
  int depth_bins = 6;
  int head_hidden = 32;
  std::string stfa_mode = "full";          // full|spatial|temporal|off
  std::string fusion_mode = "cw_mca";      // add|cross_image|cross_lidar|mca|cw_mca
  bool reliability = true;
  bool exclude_self = false;
  std::string temporal_pool = "mean";      // mean|concat
  bool symmetric_contrastive = false;
  bool positional = true;
  double beta_init = 2.0;

  train::StageConfig stage1{12, 8, 3e-3, 0.0};
  train::StageConfig stage2{16, 8, 1e-3, 1e-5};
  train::StageConfig stage3{10, 16, 1e-4, 1e-5};
  double corrupt_rate = 0.5;
  bool use_sgd = false;

  double score_threshold = 0.3;
  double nms_iou = 0.5;
  double match_iou = 0.5;

  // Applies one "key=value" override; throws ConfigError on unknown keys or
  // malformed values.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  scene::SceneConfig scene_config() const;
  pipeline::ModelConfig model_config() const;
  train::TrainSetup train_setup() const;
  train::EvalOpts eval_opts(int threads) const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_string(const ExperimentConfig& cfg);

}  // namespace relifusion::cli

#endif  // RELIFUSION_CONFIG_HPP
