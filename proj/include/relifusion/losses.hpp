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

#ifndef RELIFUSION_LOSSES_HPP
#define RELIFUSION_LOSSES_HPP

#include <vector>

#include "relifusion/fusion.hpp"
#include "relifusion/tensor.hpp"

namespace relifusion::train {

// multi-task weights
inline constexpr double kLambdaDet = 1.0;
inline constexpr double kLambdaContrast = 0.1;
inline constexpr double kLambdaTemp = 0.2;
inline constexpr double kLambdaConf = 0.05;

struct LossBreakdown {
  double l_det = 0.0;
  double l_contrast = 0.0;
  double l_temp = 0.0;
  double l_conf = 0.0;
  double l_total = 0.0;
};

// Binary focal loss (alpha=0.25, gamma=2) on the class heatmap plus L1 on the
// regression channels at positive cells, both normalized by the positive
// count.
ad::Tensor detection_loss(const fusion::HeadOut& out,
                          const fusion::HeadTargets& targets,
                          ad::Tape* tape = nullptr);

// Mean squared difference between consecutive cached spatial aggregates;
// zero for T < 2. The generator keeps the ego frame fixed, so ego-motion
// alignment is the identity here.
ad::Tensor temporal_loss(const std::vector<ad::Tensor>& s_cache,
                         ad::Tape* tape = nullptr);

// Mean binary cross-entropy of confidence scores against 1 - severity.
ad::Tensor confidence_loss(const std::vector<ad::Tensor>& scores,
                           const std::vector<double>& targets,
                           ad::Tape* tape = nullptr);

// l_total = 1.0*det + 0.1*contrast + 0.2*temp + 0.05*conf. The returned
// breakdown is recomputed from the scalar components with the same operation
// order, so the identity holds bit-exactly.
ad::Tensor total_loss(const ad::Tensor& det, const ad::Tensor& contrast,
                      const ad::Tensor& temp, const ad::Tensor& conf,
                      ad::Tape* tape = nullptr, LossBreakdown* breakdown = nullptr);

}  // namespace relifusion::train

#endif  // RELIFUSION_LOSSES_HPP
