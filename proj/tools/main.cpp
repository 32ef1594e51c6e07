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

#include <CLI11.hpp>
#include <iostream>

#include "relifusion/cli.hpp"

using namespace relifusion;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--config", c.config_path, "experiment config file");
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--set", c.overrides, "key=value override (repeatable)");
  cmd->add_option("--seed", c.seed, "root seed override");
}

cli::ExperimentConfig build_config(const CommonOpts& c) {
  cli::ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg = cli::load_config(c.config_path);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relifusion: lidar-camera BEV fusion benchmark harness"};
  app.require_subcommand(1);

  CommonOpts synth_opts, train_opts, eval_opts, sweep_opts;
  std::vector<int> stages;
  std::string eval_ckpt, sweep_ckpt;
  std::string scenarios = "standard";
  std::string ablation = "none";
  int ablation_seeds = 5;

  CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset");
  add_common(synth, synth_opts);

  CLI::App* trainc = app.add_subcommand("train", "run the training stages");
  add_common(trainc, train_opts);
  trainc->add_option("--stage", stages, "stage subset (default 1 2 3)");

  CLI::App* evalc = app.add_subcommand("eval", "evaluate a checkpoint on clean data");
  add_common(evalc, eval_opts);
  evalc->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "robustness / ablation sweeps");
  add_common(sweep, sweep_opts);
  sweep->add_option("--checkpoint", sweep_ckpt, "checkpoint file");
  sweep->add_option("--scenarios", scenarios, "scenario file path or 'standard'");
  sweep->add_option("--ablation", ablation, "none|modules|fusion");
  sweep->add_option("--ablation-seeds", ablation_seeds, "seeds per ablation row");

  CLI::App* selftest = app.add_subcommand("selftest", "gradient + invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto cfg = build_config(synth_opts);
      cli::cmd_synth(cfg, cfg.out_dir);
    } else if (trainc->parsed()) {
      const auto cfg = build_config(train_opts);
      std::vector<int> run_stages = stages.empty() ? std::vector<int>{1, 2, 3} : stages;
      cli::cmd_train(cfg, cfg.out_dir, run_stages);
    } else if (evalc->parsed()) {
      const auto cfg = build_config(eval_opts);
      cli::cmd_eval(cfg, eval_ckpt, cfg.out_dir);
    } else if (sweep->parsed()) {
      const auto cfg = build_config(sweep_opts);
      cli::cmd_sweep(cfg, sweep_ckpt, scenarios, cfg.out_dir, ablation, ablation_seeds);
    } else if (selftest->parsed()) {
      const auto cases = cli::run_selftest();
      const bool ok = cli::selftest_report(std::cout, cases);
      if (!ok) return 3;
    }
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
