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

#include "relifusion/grad_check.hpp"

#include <cmath>

namespace relifusion::ad {

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& point,
                           double step) {
  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(point.size());
  for (const Tensor& t : point) leaves.push_back(tape.leaf(t));
  Tensor loss = f(leaves, &tape);
  if (loss.size() != 1) throw ArgumentError("grad_check: f must return a scalar");
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (const Tensor& l : leaves) analytic.push_back(tape.grad(l));

  GradCheckReport report;
  std::vector<Tensor> probe = point;
  for (std::size_t li = 0; li < probe.size(); ++li) {
    for (int j = 0; j < probe[li].size(); ++j) {
      const double orig = probe[li].v[static_cast<std::size_t>(j)];
      probe[li].v[static_cast<std::size_t>(j)] = orig + step;
      const double fp = f(probe, nullptr).item();
      probe[li].v[static_cast<std::size_t>(j)] = orig - step;
      const double fm = f(probe, nullptr).item();
      probe[li].v[static_cast<std::size_t>(j)] = orig;

      const double fd = (fp - fm) / (2.0 * step);
      const double a = analytic[li][static_cast<std::size_t>(j)];
      const double denom = std::max({std::fabs(a), std::fabs(fd), 1e-8});
      const double rel = std::fabs(a - fd) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_leaf = static_cast<int>(li);
        report.worst_index = j;
      }
    }
  }
  return report;
}

}  // namespace relifusion::ad
