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

#include "relifusion/optimizer.hpp"

#include <cmath>

#include "relifusion/errors.hpp"

namespace relifusion::train {

void AdamW::step(const std::vector<ad::Tensor*>& params,
                 const std::vector<std::vector<double>>& grads) {
  if (params.size() != grads.size()) {
    throw ArgumentError("AdamW::step: params/grads size mismatch");
  }
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i]->v.size(), 0.0);
      v_[i].assign(params[i]->v.size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor& p = *params[i];
    const std::vector<double>& g = grads[i];
    if (g.size() != p.v.size()) {
      throw ArgumentError("AdamW::step: gradient size mismatch at param " +
                          std::to_string(i));
    }
    if (cfg_.plain_sgd) {
      for (std::size_t j = 0; j < p.v.size(); ++j) {
        p.v[j] -= cfg_.lr * (g[j] + cfg_.weight_decay * p.v[j]);
      }
      continue;
    }
    for (std::size_t j = 0; j < p.v.size(); ++j) {
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      p.v[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                           cfg_.weight_decay * p.v[j]);
    }
  }
}

}  // namespace relifusion::train
