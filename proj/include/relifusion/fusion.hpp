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

#ifndef RELIFUSION_FUSION_HPP
#define RELIFUSION_FUSION_HPP

#include <string>
#include <vector>

#include "relifusion/bev.hpp"

namespace relifusion::fusion {

enum class Direction { lidar_to_camera, camera_to_lidar };
enum class Mode { add, cross_image, cross_lidar, mca, cw_mca };

Mode mode_from_name(const std::string& name);
const char* mode_name(Mode m);

struct FusionConfig {
  int channels = 5;
  int d_k = 32;
  int grid_h = 32;
  int grid_w = 32;
  // Synthetic BEV features are zero away from objects, so attention tokens get
  // fixed positional channels on the Q/K path plus a learnable distance bias;
  // without them an empty query grid collapses to one global mixture and the
  // camera-only regime cannot localize. positional=false recovers the bare
  // equations.
  bool positional = true;
  int pos_dim = 6;
  double beta_init = 2.0;
};

struct FusionParams {
  FusionConfig cfg;
  // direction L->C: queries from camera tokens, keys/values from lidar
  ad::Tensor wq_l2c, wk_l2c;  // [(C+P), d_k]
  ad::Tensor wv_l2c;          // [C, d_k]
  ad::Tensor wo_l2c;          // [d_k, C]
  ad::Tensor beta_l2c;        // [1] locality bias strength
  ad::Tensor wq_c2l, wk_c2l, wv_c2l, wo_c2l, beta_c2l;
  ad::Tensor pos;    // const [HW, P]
  ad::Tensor dist2;  // const [HW, HW] normalized squared cell distance

  static FusionParams init(const FusionConfig& cfg, Rng& rng);

  template <typename F>
  void for_each(F&& f) {
    f("fusion/wq_l2c", wq_l2c);
    f("fusion/wk_l2c", wk_l2c);
    f("fusion/wv_l2c", wv_l2c);
    f("fusion/wo_l2c", wo_l2c);
    f("fusion/beta_l2c", beta_l2c);
    f("fusion/wq_c2l", wq_c2l);
    f("fusion/wk_c2l", wk_c2l);
    f("fusion/wv_c2l", wv_c2l);
    f("fusion/wo_c2l", wo_c2l);
    f("fusion/beta_c2l", beta_c2l);
  }
};

// confidence * softmax(Q K^T / sqrt(d_k)) V over flattened BEV cells, then the
// shared d_k -> C output projection back onto the grid. The confidence scalar
// is the KV-side modality's score.
bev::BevGrid cross_attend(const bev::BevGrid& query_grid,
                          const bev::BevGrid& kv_grid,
                          const ad::Tensor& confidence, const FusionParams& p,
                          Direction dir, ad::Tape* tape = nullptr);

// F_fused = F_l2c + F_c2l, elementwise.
bev::BevGrid fuse(const bev::BevGrid& f_l2c, const bev::BevGrid& f_c2l,
                  ad::Tape* tape = nullptr);

// The benchmark fusion family: add / single-direction cross / mutual / the
// confidence-weighted variant.
bev::BevGrid baseline_fusions(const bev::BevGrid& f_lidar,
                              const bev::BevGrid& f_camera, Mode mode,
                              const FusionParams& p, const ad::Tensor& c_lidar,
                              const ad::Tensor& c_camera, ad::Tape* tape = nullptr);

// ---- simplified detection head ----

struct Detection {
  scene::Box3D box;
  int class_id = 0;
  double score = 0.0;
};

struct HeadConfig {
  int channels = 5;
  int n_classes = 3;
  int hidden = 32;
  int grid_h = 32;
  int grid_w = 32;
};

struct HeadParams {
  HeadConfig cfg;
  ad::Tensor coords;  // const [HW, 2] normalized cell coordinates
  ad::Tensor w1, b1;  // [9C + 2, hidden]
  ad::Tensor w2, b2;  // [hidden, n_classes + 9]

  static HeadParams init(const HeadConfig& cfg, Rng& rng);

  template <typename F>
  void for_each(F&& f) {
    f("head/w1", w1);
    f("head/b1", b1);
    f("head/w2", w2);
    f("head/b2", b2);
  }
};

struct HeadOut {
  ad::Tensor heat_logits;  // [HW, n_classes]
  ad::Tensor reg;          // [HW, 9]: dx dy logw logl logh sin cos vx vy
};

HeadOut head_forward(const bev::BevGrid& fused, const HeadParams& p,
                     ad::Tape* tape = nullptr);

struct HeadTargets {
  ad::Tensor heat;      // [HW, n_classes] 0/1, centers only
  ad::Tensor reg;       // [HW, 9]
  ad::Tensor reg_mask;  // [HW, 9] rows of ones at regression-supervised cells
  int n_pos = 0;        // heatmap positives (centers)
  int reg_cells = 0;    // regression-supervised cells (3x3 around centers)
};

// Heat target 1 at each box's center cell; regression targets over the 3x3
// neighborhood around it so off-by-one peaks still decode to the true box.
// When two boxes claim one cell the first keeps it.
HeadTargets encode_targets(const std::vector<scene::Box3D>& gt,
                           const bev::GridConfig& cfg, int n_classes);

// Inverse of encode_targets at one cell (exposed for the codec test).
scene::Box3D decode_box(const double* reg9, int cell, int class_id,
                        const bev::GridConfig& cfg);

// Threshold + 8-neighbor peak selection + greedy BEV-IoU NMS.
std::vector<Detection> decode_detections(const ad::Tensor& heat_logits,
                                         const ad::Tensor& reg,
                                         const bev::GridConfig& cfg,
                                         double score_threshold, double nms_iou);

std::vector<Detection> detect(const bev::BevGrid& fused, const HeadParams& p,
                              double score_threshold = 0.3, double nms_iou = 0.5);

std::vector<Detection> nms_bev(std::vector<Detection> candidates, double nms_iou);

// "class score x y z w l h yaw vx vy" per line.
std::string detections_to_string(const std::vector<Detection>& dets);
std::vector<Detection> detections_from_string(const std::string& text);
void save_detections(const std::string& path, const std::vector<Detection>& dets);

}  // namespace relifusion::fusion

#endif  // RELIFUSION_FUSION_HPP
