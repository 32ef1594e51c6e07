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

#ifndef RELIFUSION_TRAIN_HPP
#define RELIFUSION_TRAIN_HPP

#include <string>
#include <vector>

#include "relifusion/corruption.hpp"
#include "relifusion/losses.hpp"
#include "relifusion/metrics.hpp"
#include "relifusion/pipeline.hpp"

namespace relifusion::train {

struct StageConfig {
  int epochs = 10;
  int batch_size = 8;
  double lr = 1e-3;
  double weight_decay = 0.0;
};

struct TrainSetup {
  pipeline::ModelConfig model;
  scene::SceneConfig scene;
  int train_scenes = 48;
  std::uint64_t seed = 42;
  // stage 1 pretrains contrastive/confidence/STFA; stage 2 trains the two
  // streams separately (camera zeroed, then lidar zeroed); stage 3 fine-tunes
  // end to end with the full multi-task loss.
  StageConfig stage1{12, 8, 3e-3, 0.0};
  StageConfig stage2{16, 8, 1e-3, 1e-5};
  StageConfig stage3{10, 16, 1e-4, 1e-5};  // batch 16, lr 1e-4, decay 1e-5
  double corrupt_rate = 0.5;  // stage-3 corruption augmentation
  bool use_sgd = false;
};

struct EpochRow {
  int stage = 0;
  int epoch = 0;
  LossBreakdown loss;
};

struct TrainResult {
  pipeline::Model model;
  std::vector<EpochRow> curves;
};

std::vector<scene::Sequence> build_dataset(const scene::SceneConfig& cfg, int n,
                                           std::uint64_t seed, const std::string& tag);

// Runs the requested stages in order (subset of {1,2,3}); deterministic in
// setup.seed. Throws TrainError naming stage/epoch if the loss diverges.
TrainResult train(const TrainSetup& setup, const std::vector<int>& stages = {1, 2, 3},
                  const pipeline::Model* warm_start = nullptr);

struct EvalOpts {
  double score_threshold = 0.3;
  double nms_iou = 0.5;
  double match_iou = 0.5;
  int threads = 1;
};

// Applies `spec` (if any) to every test sequence, runs inference, reports
// detection quality. Scene fan-out may be threaded; reduction order is fixed.
EvalReport evaluate_model(const pipeline::Model& m,
                          const std::vector<scene::Sequence>& test,
                          const corrupt::CorruptionSpec* spec, const EvalOpts& opts);

struct ScenarioRow {
  corrupt::CorruptionSpec spec;
  EvalReport report;
};

std::vector<ScenarioRow> robustness_sweep(const pipeline::Model& m,
                                          const corrupt::ScenarioTable& table,
                                          const std::vector<scene::Sequence>& test,
                                          const EvalOpts& opts);

// ---- ablation harness ----

struct AblationConfig {
  std::string name;
  pipeline::ModelConfig model;
};

// The four cumulative rows: base / +STFA / +CW-MCA / +Reliability.
std::vector<AblationConfig> module_ablation_rows(const pipeline::ModelConfig& base);
// The five fusion modes: add / cross_image / cross_lidar / mca / cw_mca.
std::vector<AblationConfig> fusion_ablation_rows(const pipeline::ModelConfig& base);

struct AblationRow {
  std::string name;
  // [scenario][seed] mAP plus the per-scenario median
  std::vector<std::vector<double>> map_per_scenario_seed;
  std::vector<double> median_map;
};

// Trains each configuration over the shared seeds and evaluates it on each
// scenario of the table.
std::vector<AblationRow> ablation_sweep(const TrainSetup& base,
                                        const std::vector<AblationConfig>& configs,
                                        const std::vector<std::uint64_t>& seeds,
                                        const corrupt::ScenarioTable& scenarios,
                                        int test_scenes, const EvalOpts& opts);

double median(std::vector<double> xs);

// ---- report formatting ----
std::string sweep_csv(const std::vector<ScenarioRow>& rows);
std::string sweep_pretty(const std::vector<ScenarioRow>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows,
                         const corrupt::ScenarioTable& scenarios);
std::string curves_csv(const std::vector<EpochRow>& curves);

}  // namespace relifusion::train

#endif  // RELIFUSION_TRAIN_HPP
