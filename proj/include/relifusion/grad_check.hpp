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

#ifndef RELIFUSION_GRAD_CHECK_HPP
#define RELIFUSION_GRAD_CHECK_HPP

#include <functional>
#include <vector>

#include "relifusion/tensor.hpp"

namespace relifusion::ad {

// A deterministic scalar function of its leaves. When tape is null the
// function must run untraced (leaves are constants); grad_check uses that
// path for the finite-difference probes.
using ScalarFn = std::function<Tensor(const std::vector<Tensor>& leaves, Tape* tape)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  int worst_leaf = -1;
  int worst_index = -1;
};

// Compares reverse-mode gradients against central finite differences at the
// given point. Relative error per component:
//   |analytic - fd| / max(|analytic|, |fd|, 1e-8)
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& point,
                           double step = 1e-5);

}  // namespace relifusion::ad

#endif  // RELIFUSION_GRAD_CHECK_HPP
