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

#ifndef RELIFUSION_CLI_HPP
#define RELIFUSION_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "relifusion/config.hpp"
#include "relifusion/grad_check.hpp"

namespace relifusion::cli {

// Evaluation fan-out cap from RELIFUSION_THREADS (default 1).
int eval_threads();

// Writes sequences (boxes text + RFPC clouds per frame) and a manifest under
// out_dir. Byte-stable for identical configs.
void cmd_synth(const ExperimentConfig& cfg, const std::string& out_dir);

// Runs the requested training stages in order, writing
// checkpoint_stage<N>.rfck per stage, a final checkpoint.rfck and curves.csv.
void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir,
               const std::vector<int>& stages);

// Clean-set evaluation of a checkpoint; writes eval.csv / eval.txt.
void cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
              const std::string& out_dir);

// Robustness sweep over a scenario table ("standard" or a file path), or a
// module/fusion ablation sweep that trains per configuration.
void cmd_sweep(const ExperimentConfig& cfg, const std::string& checkpoint,
               const std::string& scenarios, const std::string& out_dir,
               const std::string& ablation, int seeds);

struct SelftestCase {
  std::string name;
  double max_err = 0.0;
  double tol = 0.0;
  bool pass = false;
};

// Shared helper so tests can inject their own (possibly broken) cases and get
// the same reporting.
SelftestCase gradient_case(const std::string& name, const ad::ScalarFn& fn,
                           const std::vector<ad::Tensor>& point, double tol,
                           double step = 1e-5);

// Gradient checks for every primitive, the closed-form invariant corners and
// the full multi-task loss through a tiny pipeline.
std::vector<SelftestCase> run_selftest();

// Prints one line per case; returns true when everything passed.
bool selftest_report(std::ostream& os, const std::vector<SelftestCase>& cases);

}  // namespace relifusion::cli

#endif  // RELIFUSION_CLI_HPP
