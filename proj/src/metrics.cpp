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

#include "relifusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "relifusion/geometry.hpp"

namespace relifusion::train {

double bev_iou(const scene::Box3D& a, const scene::Box3D& b) {
  return geom::rect_iou(a.x, a.y, a.w, a.l, a.yaw, b.x, b.y, b.w, b.l, b.yaw);
}

namespace {

struct Ranked {
  double score;
  int order;
  int scene;
  const scene::Box3D* box;
};

struct MatchOutcome {
  std::vector<bool> tp;            // per ranked detection
  std::vector<double> distances;   // BEV center distance per match
  int n_gt = 0;
};

// Greedy score-descending one-to-one matching at the IoU threshold.
MatchOutcome match_ranked(std::vector<Ranked>& dets,
                          const std::vector<std::vector<scene::Box3D>>& gt_by_scene,
                          double iou_threshold) {
  std::stable_sort(dets.begin(), dets.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.order < b.order;
  });
  MatchOutcome out;
  std::vector<std::vector<bool>> used(gt_by_scene.size());
  for (std::size_t s = 0; s < gt_by_scene.size(); ++s) {
    used[s].assign(gt_by_scene[s].size(), false);
    out.n_gt += static_cast<int>(gt_by_scene[s].size());
  }
  out.tp.assign(dets.size(), false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    const auto& gts = gt_by_scene[static_cast<std::size_t>(dets[d].scene)];
    int best = -1;
    double best_iou = iou_threshold;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[static_cast<std::size_t>(dets[d].scene)][g]) continue;
      const double iou = bev_iou(*dets[d].box, gts[g]);
      if (iou >= best_iou) {
        best_iou = iou;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(dets[d].scene)][static_cast<std::size_t>(best)] = true;
      out.tp[d] = true;
      const scene::Box3D& g = gts[static_cast<std::size_t>(best)];
      out.distances.push_back(std::hypot(dets[d].box->x - g.x, dets[d].box->y - g.y));
    }
  }
  return out;
}

// Area under the interpolated precision-recall curve (precision envelope).
double ap_from_matches(const MatchOutcome& m) {
  if (m.n_gt == 0) return 0.0;
  const std::size_t n = m.tp.size();
  if (n == 0) return 0.0;
  std::vector<double> recall(n), precision(n);
  int tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += m.tp[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / m.n_gt;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // envelope: max precision at recall >= r
  for (std::size_t i = n - 1; i > 0; --i) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

}  // namespace

double average_precision(const std::vector<fusion::Detection>& detections,
                         const std::vector<scene::Box3D>& gt, double iou_threshold) {
  std::vector<Ranked> ranked;
  ranked.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    ranked.push_back({detections[i].score, static_cast<int>(i), 0, &detections[i].box});
  }
  std::vector<std::vector<scene::Box3D>> gts = {gt};
  MatchOutcome m = match_ranked(ranked, gts, iou_threshold);
  return ap_from_matches(m);
}

EvalReport evaluate_detections(
    const std::vector<std::vector<fusion::Detection>>& per_scene_detections,
    const std::vector<std::vector<scene::Box3D>>& per_scene_gt, int n_classes,
    double iou_threshold) {
  if (per_scene_detections.size() != per_scene_gt.size()) {
    throw ArgumentError("evaluate_detections: scene count mismatch");
  }
  EvalReport report;
  std::vector<double> all_distances;
  for (int c = 0; c < n_classes; ++c) {
    std::vector<std::vector<scene::Box3D>> gt_c(per_scene_gt.size());
    int n_gt = 0;
    for (std::size_t s = 0; s < per_scene_gt.size(); ++s) {
      for (const scene::Box3D& b : per_scene_gt[s]) {
        if (b.class_id == c) {
          gt_c[s].push_back(b);
          ++n_gt;
        }
      }
    }
    std::vector<Ranked> ranked;
    int order = 0;
    for (std::size_t s = 0; s < per_scene_detections.size(); ++s) {
      for (const fusion::Detection& d : per_scene_detections[s]) {
        report.n_detections += (c == 0) ? 1 : 0;
        if (d.class_id == c) {
          ranked.push_back({d.score, order++, static_cast<int>(s), &d.box});
        }
      }
    }
    if (n_gt == 0) continue;  // class absent from ground truth
    MatchOutcome m = match_ranked(ranked, gt_c, iou_threshold);
    report.class_ids.push_back(c);
    report.per_class_ap.push_back(ap_from_matches(m));
    report.n_gt += n_gt;
    all_distances.insert(all_distances.end(), m.distances.begin(), m.distances.end());
  }
  if (!report.per_class_ap.empty()) {
    double acc = 0.0;
    for (double ap : report.per_class_ap) acc += ap;
    report.map = acc / static_cast<double>(report.per_class_ap.size());
  }
  if (!all_distances.empty()) {
    double acc = 0.0;
    for (double d : all_distances) acc += d;
    report.mate = acc / static_cast<double>(all_distances.size());
  } else {
    report.mate = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace relifusion::train
