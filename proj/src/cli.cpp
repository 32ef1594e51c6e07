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

#include "relifusion/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "relifusion/checkpoint.hpp"
#include "relifusion/scene_io.hpp"

namespace relifusion::cli {

namespace fs = std::filesystem;

int eval_threads() {
  const char* env = std::getenv("RELIFUSION_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

void write_split(const ExperimentConfig& cfg, const std::string& out_dir,
                 const std::string& split, int n_scenes, std::ostream& manifest) {
  scene::SceneConfig sc = cfg.scene_config();
  for (int i = 0; i < n_scenes; ++i) {
    const std::uint64_t seed =
        derive_seed(cfg.seed, split + "/scene=" + std::to_string(i));
    scene::Sequence seq = scene::simulate_sequence(sc, seed);
    char dirname[64];
    std::snprintf(dirname, sizeof(dirname), "%s_%04d", split.c_str(), i);
    const std::string scene_dir = out_dir + "/" + dirname;
    ensure_dir(scene_dir);
    for (const scene::Frame& f : seq.frames) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "frame_%02d", f.t);
      scene::save_boxes(scene_dir + "/" + stem + "_boxes.txt", f.gt_boxes);
      scene::save_cloud(scene_dir + "/" + stem + ".rfpc", f.cloud);
    }
    manifest << "scene=" << i << " split=" << split << " seed=" << seed
             << " T=" << seq.frames.size()
             << " objects=" << seq.frames[0].gt_boxes.size() << " dir=" << dirname
             << "\n";
  }
}

pipeline::Model load_model(const ExperimentConfig& cfg, const std::string& checkpoint) {
  pipeline::Model m = pipeline::Model::init(cfg.model_config(),
                                            derive_seed(cfg.seed, "init"));
  m.load_params(train::load_checkpoint(checkpoint));
  return m;
}

}  // namespace

void cmd_synth(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  std::ostringstream manifest;
  manifest << "# scene split seed T objects dir\n";
  write_split(cfg, out_dir, "train", cfg.train_scenes, manifest);
  write_split(cfg, out_dir, "test", cfg.test_scenes, manifest);
  write_file(out_dir + "/manifest.txt", manifest.str());
  write_file(out_dir + "/config_used.cfg", config_to_string(cfg));
  std::cout << "synth: wrote " << cfg.train_scenes << " train / " << cfg.test_scenes
            << " test scenes to " << out_dir << "\n";
}

void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir,
               const std::vector<int>& stages) {
  ensure_dir(out_dir);
  train::TrainSetup setup = cfg.train_setup();
  pipeline::Model model = pipeline::Model::init(setup.model, derive_seed(setup.seed, "init"));
  std::vector<train::EpochRow> curves;
  for (int stage : stages) {
    train::TrainResult r = train::train(setup, {stage}, &model);
    model = r.model;
    curves.insert(curves.end(), r.curves.begin(), r.curves.end());
    train::save_checkpoint(out_dir + "/checkpoint_stage" + std::to_string(stage) + ".rfck",
                           model.named_params());
    std::cout << "train: stage " << stage << " done ("
              << (r.curves.empty() ? 0.0 : r.curves.back().loss.l_total)
              << " final loss)\n";
  }
  train::save_checkpoint(out_dir + "/checkpoint.rfck", model.named_params());
  write_file(out_dir + "/curves.csv", train::curves_csv(curves));
  write_file(out_dir + "/config_used.cfg", config_to_string(cfg));
}

void cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
              const std::string& out_dir) {
  ensure_dir(out_dir);
  pipeline::Model m = load_model(cfg, checkpoint);
  scene::SceneConfig sc = cfg.scene_config();
  const auto test = train::build_dataset(sc, cfg.test_scenes, cfg.seed, "test");
  corrupt::ScenarioTable clean_only;
  clean_only.entries.push_back(corrupt::CorruptionSpec{});
  const auto rows = train::robustness_sweep(m, clean_only, test, cfg.eval_opts(eval_threads()));
  write_file(out_dir + "/eval.csv", train::sweep_csv(rows));
  write_file(out_dir + "/eval.txt", train::sweep_pretty(rows));
  std::cout << train::sweep_pretty(rows);
}

void cmd_sweep(const ExperimentConfig& cfg, const std::string& checkpoint,
               const std::string& scenarios, const std::string& out_dir,
               const std::string& ablation, int seeds) {
  ensure_dir(out_dir);
  corrupt::ScenarioTable table;
  if (scenarios == "standard") {
    table = corrupt::standard_scenarios();
  } else {
    table = corrupt::load_scenarios(scenarios);
  }
  const train::EvalOpts opts = cfg.eval_opts(eval_threads());

  if (ablation == "none") {
    if (checkpoint.empty()) throw ConfigError("sweep: --checkpoint is required");
    pipeline::Model m = load_model(cfg, checkpoint);
    scene::SceneConfig sc = cfg.scene_config();
    const auto test = train::build_dataset(sc, cfg.test_scenes, cfg.seed, "test");
    const auto rows = train::robustness_sweep(m, table, test, opts);
    write_file(out_dir + "/sweep.csv", train::sweep_csv(rows));
    write_file(out_dir + "/sweep.txt", train::sweep_pretty(rows));
    std::cout << train::sweep_pretty(rows);
    return;
  }

  if (ablation != "modules" && ablation != "fusion") {
    throw ConfigError("sweep: --ablation must be none|modules|fusion");
  }
  train::TrainSetup base = cfg.train_setup();
  const auto configs = ablation == "modules"
                           ? train::module_ablation_rows(base.model)
                           : train::fusion_ablation_rows(base.model);
  std::vector<std::uint64_t> seed_list;
  for (int i = 0; i < seeds; ++i) seed_list.push_back(cfg.seed + static_cast<std::uint64_t>(i));
  const auto rows = train::ablation_sweep(base, configs, seed_list, table,
                                          cfg.test_scenes, opts);
  const std::string csv = train::ablation_csv(rows, table);
  write_file(out_dir + "/ablation_" + ablation + ".csv", csv);
  std::cout << csv;
}

}  // namespace relifusion::cli
