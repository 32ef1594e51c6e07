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

#ifndef RELIFUSION_OPTIMIZER_HPP
#define RELIFUSION_OPTIMIZER_HPP

#include <vector>

#include "relifusion/tensor.hpp"

namespace relifusion::train {

struct OptimizerConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
  bool plain_sgd = false;  // for gradient-check fixtures
};

// Adaptive moments with decoupled weight decay. State is indexed by the
// position of each parameter in the step() call, so callers must keep a
// stable parameter order.
class AdamW {
 public:
  explicit AdamW(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(const std::vector<ad::Tensor*>& params,
            const std::vector<std::vector<double>>& grads);

  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace relifusion::train

#endif  // RELIFUSION_OPTIMIZER_HPP
