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

#ifndef RELIFUSION_METRICS_HPP
#define RELIFUSION_METRICS_HPP

#include <vector>

#include "relifusion/fusion.hpp"
#include "relifusion/scene.hpp"

namespace relifusion::train {

// Rotated-rectangle IoU in the ground plane (convex polygon clipping).
double bev_iou(const scene::Box3D& a, const scene::Box3D& b);

// Class-agnostic AP over one ranked list: greedy one-to-one matching by
// descending score (ties broken by detection index), area under the
// interpolated precision-recall curve.
double average_precision(const std::vector<fusion::Detection>& detections,
                         const std::vector<scene::Box3D>& gt, double iou_threshold);

struct EvalReport {
  std::vector<int> class_ids;        // classes with ground truth
  std::vector<double> per_class_ap;  // aligned with class_ids
  double map = 0.0;
  double mate = 0.0;  // mean BEV translation error of matched pairs, meters
  int n_gt = 0;
  int n_detections = 0;
};

// Pools detections per class across scenes (matching stays within a scene)
// and reports per-class AP, mAP over classes with ground truth, and the mean
// translation error of matched pairs.
EvalReport evaluate_detections(
    const std::vector<std::vector<fusion::Detection>>& per_scene_detections,
    const std::vector<std::vector<scene::Box3D>>& per_scene_gt, int n_classes,
    double iou_threshold);

}  // namespace relifusion::train

#endif  // RELIFUSION_METRICS_HPP
