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

#include "relifusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "relifusion/errors.hpp"
#include "relifusion/geometry.hpp"

namespace relifusion::fusion {

using ad::Tensor;

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
}

Mode mode_from_name(const std::string& name) {
  if (name == "add") return Mode::add;
  if (name == "cross_image") return Mode::cross_image;
  if (name == "cross_lidar") return Mode::cross_lidar;
  if (name == "mca") return Mode::mca;
  if (name == "cw_mca") return Mode::cw_mca;
  throw ConfigError("unknown fusion mode: " + name);
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::add: return "add";
    case Mode::cross_image: return "cross_image";
    case Mode::cross_lidar: return "cross_lidar";
    case Mode::mca: return "mca";
    case Mode::cw_mca: return "cw_mca";
  }
  return "?";
}

FusionParams FusionParams::init(const FusionConfig& cfg, Rng& rng) {
  FusionParams p;
  p.cfg = cfg;
  const int P = cfg.positional ? cfg.pos_dim : 0;
  const int qk_in = cfg.channels + P;
  // value/output start near pass-through and the locality bias dominates the
  // content logits, so the fused grid begins close to a smoothed sum of the
  // two modality grids and training sharpens it from there
  const double s_qk = 0.3 / std::sqrt(static_cast<double>(qk_in));
  auto value_proj = [&]() {
    Tensor w = Tensor::randn({cfg.channels, cfg.d_k}, rng,
                             0.05 / std::sqrt(static_cast<double>(cfg.channels)));
    for (int c = 0; c < cfg.channels && c < cfg.d_k; ++c) w.at(c, c) += 1.0;
    return w;
  };
  auto out_proj = [&]() {
    Tensor w = Tensor::randn({cfg.d_k, cfg.channels}, rng,
                             0.05 / std::sqrt(static_cast<double>(cfg.d_k)));
    for (int c = 0; c < cfg.channels && c < cfg.d_k; ++c) w.at(c, c) += 1.0;
    return w;
  };
  p.wq_l2c = Tensor::randn({qk_in, cfg.d_k}, rng, s_qk);
  p.wk_l2c = Tensor::randn({qk_in, cfg.d_k}, rng, s_qk);
  p.wv_l2c = value_proj();
  p.wo_l2c = out_proj();
  p.beta_l2c = Tensor::scalar(cfg.beta_init);
  p.wq_c2l = Tensor::randn({qk_in, cfg.d_k}, rng, s_qk);
  p.wk_c2l = Tensor::randn({qk_in, cfg.d_k}, rng, s_qk);
  p.wv_c2l = value_proj();
  p.wo_c2l = out_proj();
  p.beta_c2l = Tensor::scalar(cfg.beta_init);

  const int H = cfg.grid_h, W = cfg.grid_w, HW = H * W;
  if (cfg.positional) {
    p.pos = Tensor::zeros({HW, cfg.pos_dim});
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        const double xh = W > 1 ? (2.0 * j / (W - 1) - 1.0) : 0.0;
        const double yh = H > 1 ? (2.0 * i / (H - 1) - 1.0) : 0.0;
        double enc[6] = {xh, yh, std::sin(kPi * xh), std::cos(kPi * xh),
                         std::sin(kPi * yh), std::cos(kPi * yh)};
        for (int c = 0; c < cfg.pos_dim && c < 6; ++c) p.pos.at(i * W + j, c) = enc[c];
      }
    }
    // squared distance in cell units, so beta ~ 0.5 already means a
    // one-cell attention window at any grid size
    p.dist2 = Tensor::zeros({HW, HW});
    for (int a = 0; a < HW; ++a) {
      const int ia = a / W, ja = a % W;
      for (int b = 0; b < HW; ++b) {
        const int ib = b / W, jb = b % W;
        const double di = ia - ib, dj = ja - jb;
        p.dist2.at(a, b) = di * di + dj * dj;
      }
    }
  }
  return p;
}

namespace {

Tensor grid_tokens(const bev::BevGrid& g, ad::Tape* tape) {
  const int C = g.features.shape[0];
  const int hw = g.features.shape[1] * g.features.shape[2];
  return ad::transpose(ad::reshape(g.features, {C, hw}, tape), tape);  // [HW, C]
}

bev::BevGrid tokens_to_grid(const Tensor& tokens, const bev::GridConfig& cfg,
                            ad::Tape* tape) {
  const int C = tokens.shape[1];
  Tensor feat = ad::reshape(ad::transpose(tokens, tape), {C, cfg.h, cfg.w}, tape);
  return bev::BevGrid{std::move(feat), cfg};
}

}  // namespace

bev::BevGrid cross_attend(const bev::BevGrid& query_grid,
                          const bev::BevGrid& kv_grid, const Tensor& confidence,
                          const FusionParams& p, Direction dir, ad::Tape* tape) {
  if (query_grid.features.shape != kv_grid.features.shape) {
    throw ConfigError("cross_attend: grid shapes differ, " +
                      query_grid.features.shape_str() + " vs " +
                      kv_grid.features.shape_str());
  }
  if (query_grid.features.shape[0] != p.cfg.channels ||
      query_grid.features.shape[1] != p.cfg.grid_h ||
      query_grid.features.shape[2] != p.cfg.grid_w) {
    throw ConfigError("cross_attend: grid " + query_grid.features.shape_str() +
                      " does not match fusion config");
  }
  const bool l2c = dir == Direction::lidar_to_camera;
  const Tensor& wq = l2c ? p.wq_l2c : p.wq_c2l;
  const Tensor& wk = l2c ? p.wk_l2c : p.wk_c2l;
  const Tensor& wv = l2c ? p.wv_l2c : p.wv_c2l;
  const Tensor& wo = l2c ? p.wo_l2c : p.wo_c2l;
  const Tensor& beta = l2c ? p.beta_l2c : p.beta_c2l;

  Tensor tq = grid_tokens(query_grid, tape);
  Tensor tkv = grid_tokens(kv_grid, tape);
  Tensor q_in = p.cfg.positional ? ad::concat_cols(tq, p.pos, tape) : tq;
  Tensor k_in = p.cfg.positional ? ad::concat_cols(tkv, p.pos, tape) : tkv;

  Tensor q = ad::matmul(q_in, wq, tape);
  Tensor k = ad::matmul(k_in, wk, tape);
  Tensor v = ad::matmul(tkv, wv, tape);
  Tensor logits = ad::mul_scalar(ad::matmul(q, ad::transpose(k, tape), tape),
                                 1.0 / std::sqrt(static_cast<double>(p.cfg.d_k)), tape);
  if (p.cfg.positional) {
    logits = ad::sub(logits, ad::scale(p.dist2, beta, tape), tape);
  }
  Tensor attn = ad::softmax_rows(logits, tape);
  Tensor out = ad::matmul(ad::matmul(attn, v, tape), wo, tape);  // [HW, C]
  out = ad::scale(out, confidence, tape);
  return tokens_to_grid(out, query_grid.cfg, tape);
}

bev::BevGrid fuse(const bev::BevGrid& f_l2c, const bev::BevGrid& f_c2l,
                  ad::Tape* tape) {
  return bev::BevGrid{ad::add(f_l2c.features, f_c2l.features, tape), f_l2c.cfg};
}

bev::BevGrid baseline_fusions(const bev::BevGrid& f_lidar,
                              const bev::BevGrid& f_camera, Mode mode,
                              const FusionParams& p, const Tensor& c_lidar,
                              const Tensor& c_camera, ad::Tape* tape) {
  const Tensor one = Tensor::scalar(1.0);
  switch (mode) {
    case Mode::add:
      return bev::BevGrid{ad::add(f_lidar.features, f_camera.features, tape),
                          f_lidar.cfg};
    case Mode::cross_image:
      // image as query, lidar content delivered to camera-token cells
      return cross_attend(f_camera, f_lidar, one, p, Direction::lidar_to_camera, tape);
    case Mode::cross_lidar:
      return cross_attend(f_lidar, f_camera, one, p, Direction::camera_to_lidar, tape);
    case Mode::mca: {
      bev::BevGrid l2c = cross_attend(f_camera, f_lidar, one, p, Direction::lidar_to_camera, tape);
      bev::BevGrid c2l = cross_attend(f_lidar, f_camera, one, p, Direction::camera_to_lidar, tape);
      return fuse(l2c, c2l, tape);
    }
    case Mode::cw_mca: {
      bev::BevGrid l2c = cross_attend(f_camera, f_lidar, c_lidar, p, Direction::lidar_to_camera, tape);
      bev::BevGrid c2l = cross_attend(f_lidar, f_camera, c_camera, p, Direction::camera_to_lidar, tape);
      return fuse(l2c, c2l, tape);
    }
  }
  throw ConfigError("baseline_fusions: unknown mode");
}

// ---- detection head ----

HeadParams HeadParams::init(const HeadConfig& cfg, Rng& rng) {
  HeadParams p;
  p.cfg = cfg;
  const int hw = cfg.grid_h * cfg.grid_w;
  p.coords = Tensor::zeros({hw, 2});
  for (int i = 0; i < cfg.grid_h; ++i) {
    for (int j = 0; j < cfg.grid_w; ++j) {
      p.coords.at(i * cfg.grid_w + j, 0) =
          cfg.grid_w > 1 ? 2.0 * j / (cfg.grid_w - 1) - 1.0 : 0.0;
      p.coords.at(i * cfg.grid_w + j, 1) =
          cfg.grid_h > 1 ? 2.0 * i / (cfg.grid_h - 1) - 1.0 : 0.0;
    }
  }
  const int in = 9 * cfg.channels + 2;
  p.w1 = Tensor::randn({in, cfg.hidden}, rng, 1.0 / std::sqrt(static_cast<double>(in)));
  p.b1 = Tensor::zeros({cfg.hidden});
  p.w2 = Tensor::randn({cfg.hidden, cfg.n_classes + 9}, rng,
                       1.0 / std::sqrt(static_cast<double>(cfg.hidden)));
  p.b2 = Tensor::zeros({cfg.n_classes + 9});
  // bias the heatmap towards "no object" so early training is not flooded
  for (int c = 0; c < cfg.n_classes; ++c) p.b2.v[static_cast<std::size_t>(c)] = -3.0;
  return p;
}

HeadOut head_forward(const bev::BevGrid& fused, const HeadParams& p, ad::Tape* tape) {
  if (fused.features.shape[0] != p.cfg.channels ||
      fused.features.shape[1] != p.cfg.grid_h ||
      fused.features.shape[2] != p.cfg.grid_w) {
    throw DimensionError("head_forward: fused grid " + fused.features.shape_str() +
                         " does not match head config");
  }
  // 3x3 neighborhood per cell plus the cell's own normalized coordinates
  Tensor feats = ad::concat_cols(ad::neighborhood3x3(fused.features, tape), p.coords, tape);
  Tensor h = ad::gelu(ad::add_rowvec(ad::matmul(feats, p.w1, tape), p.b1, tape), tape);
  Tensor out = ad::add_rowvec(ad::matmul(h, p.w2, tape), p.b2, tape);
  HeadOut ho;
  ho.heat_logits = ad::slice_cols(out, 0, p.cfg.n_classes, tape);
  ho.reg = ad::slice_cols(out, p.cfg.n_classes, p.cfg.n_classes + 9, tape);
  return ho;
}

HeadTargets encode_targets(const std::vector<scene::Box3D>& gt,
                           const bev::GridConfig& cfg, int n_classes) {
  const int HW = cfg.h * cfg.w;
  HeadTargets t;
  t.heat = Tensor::zeros({HW, n_classes});
  t.reg = Tensor::zeros({HW, 9});
  t.reg_mask = Tensor::zeros({HW, 9});
  for (const scene::Box3D& b : gt) {
    const int cell = cfg.cell_index(b.x, b.y);
    if (cell < 0 || b.class_id < 0 || b.class_id >= n_classes) continue;
    bool occupied = false;
    for (int j = 0; j < 9; ++j) occupied |= (t.reg_mask.at(cell, j) != 0.0);
    if (occupied) continue;
    t.heat.at(cell, b.class_id) = 1.0;
    t.n_pos += 1;
    const int ci = cell / cfg.w, cj = cell % cfg.w;
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        const int i = ci + di, j = cj + dj;
        if (i < 0 || i >= cfg.h || j < 0 || j >= cfg.w) continue;
        const int rc = i * cfg.w + j;
        if (t.reg_mask.at(rc, 0) != 0.0) continue;
        const double vals[9] = {b.x - cfg.cell_center_x(j), b.y - cfg.cell_center_y(i),
                                std::log(b.w),  std::log(b.l), std::log(b.h),
                                std::sin(b.yaw), std::cos(b.yaw), b.vx, b.vy};
        for (int r = 0; r < 9; ++r) {
          t.reg.at(rc, r) = vals[r];
          t.reg_mask.at(rc, r) = 1.0;
        }
        t.reg_cells += 1;
      }
    }
  }
  return t;
}

scene::Box3D decode_box(const double* reg9, int cell, int class_id,
                        const bev::GridConfig& cfg) {
  scene::Box3D b;
  const int i = cell / cfg.w, j = cell % cfg.w;
  b.x = cfg.cell_center_x(j) + reg9[0];
  b.y = cfg.cell_center_y(i) + reg9[1];
  b.w = std::exp(reg9[2]);
  b.l = std::exp(reg9[3]);
  b.h = std::exp(reg9[4]);
  b.yaw = std::atan2(reg9[5], reg9[6]);
  b.z = b.h / 2.0;
  b.vx = reg9[7];
  b.vy = reg9[8];
  b.class_id = class_id;
  return b;
}

std::vector<Detection> nms_bev(std::vector<Detection> candidates, double nms_iou) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const Detection& c : candidates) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      const double iou = geom::rect_iou(c.box.x, c.box.y, c.box.w, c.box.l, c.box.yaw,
                                        k.box.x, k.box.y, k.box.w, k.box.l, k.box.yaw);
      if (iou >= nms_iou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

std::vector<Detection> decode_detections(const Tensor& heat_logits, const Tensor& reg,
                                         const bev::GridConfig& cfg,
                                         double score_threshold, double nms_iou) {
  const int HW = heat_logits.shape[0];
  const int ncls = heat_logits.shape[1];
  std::vector<Detection> cands;
  auto score_at = [&](int cell, int c) {
    const double x = heat_logits.at(cell, c);
    return 1.0 / (1.0 + std::exp(-x));
  };
  for (int cell = 0; cell < HW; ++cell) {
    const int i = cell / cfg.w, j = cell % cfg.w;
    for (int c = 0; c < ncls; ++c) {
      const double s = score_at(cell, c);
      if (s <= score_threshold) continue;
      bool peak = true;
      for (int di = -1; di <= 1 && peak; ++di) {
        for (int dj = -1; dj <= 1 && peak; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || ii >= cfg.h || jj < 0 || jj >= cfg.w) continue;
          if (score_at(ii * cfg.w + jj, c) > s) peak = false;
        }
      }
      if (!peak) continue;
      double reg9[9];
      for (int r = 0; r < 9; ++r) reg9[r] = reg.at(cell, r);
      Detection d;
      d.box = decode_box(reg9, cell, c, cfg);
      d.class_id = c;
      d.score = s;
      cands.push_back(d);
    }
  }
  return nms_bev(std::move(cands), nms_iou);
}

std::vector<Detection> detect(const bev::BevGrid& fused, const HeadParams& p,
                              double score_threshold, double nms_iou) {
  HeadOut out = head_forward(fused, p, nullptr);
  return decode_detections(out.heat_logits, out.reg, fused.cfg, score_threshold,
                           nms_iou);
}

std::string detections_to_string(const std::vector<Detection>& dets) {
  std::ostringstream os;
  for (const Detection& d : dets) {
    char buf[360];
    std::snprintf(buf, sizeof(buf),
                  "%d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  d.class_id, d.score, d.box.x, d.box.y, d.box.z, d.box.w, d.box.l,
                  d.box.h, d.box.yaw, d.box.vx, d.box.vy);
    os << buf;
  }
  return os.str();
}

std::vector<Detection> detections_from_string(const std::string& text) {
  std::vector<Detection> dets;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Detection d;
    if (!(ls >> d.class_id >> d.score >> d.box.x >> d.box.y >> d.box.z >> d.box.w >>
          d.box.l >> d.box.h >> d.box.yaw >> d.box.vx >> d.box.vy)) {
      throw IoError("detections: malformed line");
    }
    d.box.class_id = d.class_id;
    dets.push_back(d);
  }
  return dets;
}

void save_detections(const std::string& path, const std::vector<Detection>& dets) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f << detections_to_string(dets);
}

}  // namespace relifusion::fusion
