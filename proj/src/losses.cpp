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

#include "relifusion/losses.hpp"

#include <algorithm>

#include "relifusion/errors.hpp"

namespace relifusion::train {

using ad::Tensor;

Tensor detection_loss(const fusion::HeadOut& out, const fusion::HeadTargets& targets,
                      ad::Tape* tape) {
  if (out.heat_logits.shape != targets.heat.shape ||
      out.reg.shape != targets.reg.shape) {
    throw DimensionError("detection_loss: prediction/target shape mismatch");
  }
  const double alpha = 0.25;
  const double norm = 1.0 / std::max(1, targets.n_pos);
  const double reg_norm = 1.0 / std::max(1, targets.reg_cells);

  Tensor p = ad::sigmoid(out.heat_logits, tape);
  Tensor one_minus_p = ad::add_scalar(ad::mul_scalar(p, -1.0, tape), 1.0, tape);
  Tensor neg_mask = ad::add_scalar(ad::mul_scalar(targets.heat, -1.0), 1.0);

  // focal, gamma = 2
  Tensor pos_term = ad::mul(targets.heat,
                            ad::mul(ad::mul(one_minus_p, one_minus_p, tape),
                                    ad::log_(p, tape), tape),
                            tape);
  Tensor neg_term = ad::mul(neg_mask,
                            ad::mul(ad::mul(p, p, tape),
                                    ad::log_(one_minus_p, tape), tape),
                            tape);
  Tensor heat_loss = ad::mul_scalar(
      ad::add(ad::mul_scalar(ad::sum(pos_term, tape), alpha, tape),
              ad::mul_scalar(ad::sum(neg_term, tape), 1.0 - alpha, tape), tape),
      -norm, tape);

  Tensor l1 = ad::mul_scalar(
      ad::sum(ad::mul(ad::abs_(ad::sub(out.reg, targets.reg, tape), tape),
                      targets.reg_mask, tape),
              tape),
      reg_norm, tape);
  return ad::add(heat_loss, l1, tape);
}

Tensor temporal_loss(const std::vector<Tensor>& s_cache, ad::Tape* tape) {
  const int T = static_cast<int>(s_cache.size());
  if (T < 2) return Tensor::scalar(0.0);
  Tensor acc = Tensor::scalar(0.0);
  for (int t = 1; t < T; ++t) {
    Tensor d = ad::sub(s_cache[static_cast<std::size_t>(t)],
                       s_cache[static_cast<std::size_t>(t) - 1], tape);
    acc = ad::add(acc, ad::mean(ad::mul(d, d, tape), tape), tape);
  }
  return ad::mul_scalar(acc, 1.0 / (T - 1), tape);
}

Tensor confidence_loss(const std::vector<Tensor>& scores,
                       const std::vector<double>& targets, ad::Tape* tape) {
  if (scores.empty() || scores.size() != targets.size()) {
    throw ArgumentError("confidence_loss: scores/targets size mismatch");
  }
  Tensor acc = Tensor::scalar(0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double t = targets[i];
    if (t < 0.0 || t > 1.0) throw ArgumentError("confidence_loss: target outside [0,1]");
    const Tensor& c = scores[i];
    Tensor one_minus_c = ad::add_scalar(ad::mul_scalar(c, -1.0, tape), 1.0, tape);
    Tensor term = ad::add(ad::mul_scalar(ad::log_(c, tape), t, tape),
                          ad::mul_scalar(ad::log_(one_minus_c, tape), 1.0 - t, tape),
                          tape);
    acc = ad::add(acc, term, tape);
  }
  return ad::mul_scalar(acc, -1.0 / static_cast<double>(scores.size()), tape);
}

Tensor total_loss(const Tensor& det, const Tensor& contrast, const Tensor& temp,
                  const Tensor& conf, ad::Tape* tape, LossBreakdown* breakdown) {
  for (const Tensor* t : {&det, &contrast, &temp, &conf}) {
    if (t->size() != 1) throw ArgumentError("total_loss: components must be scalars");
    if (!std::isfinite(t->v[0])) throw NumericError("total_loss: non-finite component");
  }
  Tensor total = ad::add(
      ad::add(ad::add(ad::mul_scalar(det, kLambdaDet, tape),
                      ad::mul_scalar(contrast, kLambdaContrast, tape), tape),
              ad::mul_scalar(temp, kLambdaTemp, tape), tape),
      ad::mul_scalar(conf, kLambdaConf, tape), tape);
  if (breakdown != nullptr) {
    breakdown->l_det = det.v[0];
    breakdown->l_contrast = contrast.v[0];
    breakdown->l_temp = temp.v[0];
    breakdown->l_conf = conf.v[0];
    breakdown->l_total = total.v[0];
  }
  return total;
}

}  // namespace relifusion::train
