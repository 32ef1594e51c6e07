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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relifusion/grad_check.hpp"
#include "relifusion/fusion.hpp"
#include "relifusion/losses.hpp"
#include "relifusion/metrics.hpp"

using namespace relifusion;
using namespace relifusion::fusion;
using ad::Tensor;

namespace {

bev::GridConfig grid_cfg(int cells) {
  return bev::GridConfig::square(cells, 24.0, {-0.5, 0.0, 0.5, 1.5});
}

bev::BevGrid random_bev(int c, int cells, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  return bev::BevGrid{Tensor::randn({c, cells, cells}, rng, scale), grid_cfg(cells)};
}

FusionParams make_params(int channels, int cells, int d_k, bool positional,
                         std::uint64_t seed) {
  FusionConfig cfg;
  cfg.channels = channels;
  cfg.d_k = d_k;
  cfg.grid_h = cfg.grid_w = cells;
  cfg.positional = positional;
  Rng rng(seed);
  return FusionParams::init(cfg, rng);
}

bool grids_equal(const bev::BevGrid& a, const bev::BevGrid& b) {
  if (a.features.shape != b.features.shape) return false;
  for (int i = 0; i < a.features.size(); ++i) {
    if (a.features.v[static_cast<std::size_t>(i)] != b.features.v[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("cross_attend zero confidence annihilates") {
  FusionParams p = make_params(4, 3, 5, true, 1);
  bev::BevGrid q = random_bev(4, 3, 2);
  bev::BevGrid kv = random_bev(4, 3, 3);
  bev::BevGrid out = cross_attend(q, kv, Tensor::scalar(0.0), p,
                                  Direction::lidar_to_camera);
  for (double v : out.features.v) CHECK(v == 0.0);
}

TEST_CASE("cross_attend single cell returns confidence * V") {
  // d_k == C and identity output projection make the value path transparent
  FusionParams p = make_params(3, 1, 3, false, 4);
  p.wo_l2c = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) p.wo_l2c.at(i, i) = 1.0;
  bev::BevGrid q = random_bev(3, 1, 5);
  bev::BevGrid kv = random_bev(3, 1, 6);
  const double conf = 0.37;
  bev::BevGrid out = cross_attend(q, kv, Tensor::scalar(conf), p,
                                  Direction::lidar_to_camera);
  // expected: conf * (token . Wv), attention weight is exactly 1
  for (int c = 0; c < 3; ++c) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += kv.features.v[static_cast<std::size_t>(i)] * p.wv_l2c.at(i, c);
    CHECK(out.features.v[static_cast<std::size_t>(c)] == doctest::Approx(conf * v).epsilon(1e-12));
  }
}

TEST_CASE("cross_attend matches a dense loop oracle (2x2 grids)") {
  for (bool positional : {false, true}) {
    FusionParams p = make_params(3, 2, 4, positional, 7);
    bev::BevGrid q = random_bev(3, 2, 8);
    bev::BevGrid kv = random_bev(3, 2, 9);
    const double conf = 0.81;
    bev::BevGrid out = cross_attend(q, kv, Tensor::scalar(conf), p,
                                    Direction::camera_to_lidar);

    const int HW = 4, C = 3, dk = 4, P = positional ? p.cfg.pos_dim : 0;
    auto token = [&](const bev::BevGrid& g, int cell, int c) {
      return g.features.v[static_cast<std::size_t>(c) * HW + cell];
    };
    auto qk_input = [&](const bev::BevGrid& g, int cell, int c) {
      if (c < C) return token(g, cell, c);
      return p.pos.at(cell, c - C);
    };
    for (int a = 0; a < HW; ++a) {
      std::vector<double> logits(HW);
      for (int b = 0; b < HW; ++b) {
        double acc = 0.0;
        for (int e = 0; e < dk; ++e) {
          double qe = 0.0, ke = 0.0;
          for (int c = 0; c < C + P; ++c) {
            qe += qk_input(q, a, c) * p.wq_c2l.at(c, e);
            ke += qk_input(kv, b, c) * p.wk_c2l.at(c, e);
          }
          acc += qe * ke;
        }
        logits[static_cast<std::size_t>(b)] = acc / std::sqrt(4.0);
        if (positional) {
          logits[static_cast<std::size_t>(b)] -= p.beta_c2l.item() * p.dist2.at(a, b);
        }
      }
      double mx = logits[0];
      for (double l : logits) mx = std::max(mx, l);
      double z = 0.0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        z += l;
      }
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int b = 0; b < HW; ++b) {
          double ve[8] = {0};
          for (int e = 0; e < dk; ++e) {
            for (int cc = 0; cc < C; ++cc) ve[e] += token(kv, b, cc) * p.wv_c2l.at(cc, e);
          }
          double proj = 0.0;
          for (int e = 0; e < dk; ++e) proj += ve[e] * p.wo_c2l.at(e, c);
          acc += logits[static_cast<std::size_t>(b)] / z * proj;
        }
        const double got = out.features.v[static_cast<std::size_t>(c) * HW + a];
        CHECK(std::fabs(got - conf * acc) < 1e-10);
      }
    }
  }
}

TEST_CASE("fuse corners") {
  bev::BevGrid a = random_bev(3, 2, 10);
  bev::BevGrid z = a;
  z.features = Tensor::zeros(a.features.shape);

  bev::BevGrid both = fuse(z, z);
  for (double v : both.features.v) CHECK(v == 0.0);

  CHECK(grids_equal(fuse(a, z), a));
  CHECK(grids_equal(fuse(z, a), a));

  bev::BevGrid b = random_bev(3, 2, 11);
  bev::BevGrid s = fuse(a, b);
  for (int i = 0; i < s.features.size(); ++i) {
    CHECK(s.features.v[static_cast<std::size_t>(i)] ==
          a.features.v[static_cast<std::size_t>(i)] + b.features.v[static_cast<std::size_t>(i)]);
  }

  bev::BevGrid wrong = random_bev(2, 2, 12);
  CHECK_THROWS_AS(fuse(a, wrong), DimensionError);
}

TEST_CASE("degenerate confidence algebra is exact") {
  FusionParams p = make_params(4, 3, 6, true, 13);
  bev::BevGrid fl = random_bev(4, 3, 14);
  bev::BevGrid fc = random_bev(4, 3, 15);

  const Tensor zero = Tensor::scalar(0.0);
  const Tensor c_l = Tensor::scalar(0.63);
  const Tensor c_c = Tensor::scalar(0.41);

  bev::BevGrid l2c = cross_attend(fc, fl, c_l, p, Direction::lidar_to_camera);
  bev::BevGrid c2l = cross_attend(fl, fc, c_c, p, Direction::camera_to_lidar);

  // c_camera = 0: fused == F_{L->C}
  bev::BevGrid fused_nc = baseline_fusions(fl, fc, Mode::cw_mca, p, c_l, zero);
  CHECK(grids_equal(fused_nc, l2c));

  // c_lidar = 0: fused == F_{C->L}
  bev::BevGrid fused_nl = baseline_fusions(fl, fc, Mode::cw_mca, p, zero, c_c);
  CHECK(grids_equal(fused_nl, c2l));

  // both zero
  bev::BevGrid fused_00 = baseline_fusions(fl, fc, Mode::cw_mca, p, zero, zero);
  for (double v : fused_00.features.v) CHECK(v == 0.0);

  // linear in each confidence: doubling c scales that direction by exactly 2
  bev::BevGrid once = cross_attend(fc, fl, Tensor::scalar(0.25), p, Direction::lidar_to_camera);
  bev::BevGrid twice = cross_attend(fc, fl, Tensor::scalar(0.5), p, Direction::lidar_to_camera);
  for (int i = 0; i < once.features.size(); ++i) {
    CHECK(twice.features.v[static_cast<std::size_t>(i)] ==
          doctest::Approx(2.0 * once.features.v[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("baseline fusion modes") {
  FusionParams p = make_params(4, 3, 6, true, 16);
  bev::BevGrid fl = random_bev(4, 3, 17);
  bev::BevGrid fc = random_bev(4, 3, 18);
  bev::BevGrid zero = fl;
  zero.features = Tensor::zeros(fl.features.shape);
  const Tensor one = Tensor::scalar(1.0);

  // add on (X, 0) -> X
  CHECK(grids_equal(baseline_fusions(fl, zero, Mode::add, p, one, one), fl));

  // mca equals cw_mca at unit confidences, bit for bit
  bev::BevGrid mca = baseline_fusions(fl, fc, Mode::mca, p, one, one);
  bev::BevGrid cw = baseline_fusions(fl, fc, Mode::cw_mca, p, one, one);
  CHECK(grids_equal(mca, cw));

  // cross_lidar is cross_attend(Q=lidar, KV=camera, c=1)
  bev::BevGrid cl = baseline_fusions(fl, fc, Mode::cross_lidar, p, one, one);
  CHECK(grids_equal(cl, cross_attend(fl, fc, one, p, Direction::camera_to_lidar)));
  bev::BevGrid ci = baseline_fusions(fl, fc, Mode::cross_image, p, one, one);
  CHECK(grids_equal(ci, cross_attend(fc, fl, one, p, Direction::lidar_to_camera)));

  CHECK(mode_from_name("cw_mca") == Mode::cw_mca);
  CHECK_THROWS_AS(mode_from_name("bogus"), ConfigError);
}

TEST_CASE("target codec round-trips") {
  bev::GridConfig cfg = grid_cfg(8);
  scene::Box3D b;
  b.x = 3.3;
  b.y = -4.1;
  b.w = 1.9;
  b.l = 4.4;
  b.h = 1.5;
  b.z = 0.75;
  b.yaw = 0.77;
  b.class_id = 1;
  b.vx = 1.5;
  b.vy = -0.25;

  HeadTargets t = encode_targets({b}, cfg, 3);
  CHECK(t.n_pos == 1);
  const int cell = cfg.cell_index(b.x, b.y);
  REQUIRE(cell >= 0);
  CHECK(t.heat.at(cell, 1) == 1.0);

  double reg9[9];
  for (int r = 0; r < 9; ++r) reg9[r] = t.reg.at(cell, r);
  scene::Box3D back = decode_box(reg9, cell, 1, cfg);
  CHECK(back.x == doctest::Approx(b.x).epsilon(1e-12));
  CHECK(back.y == doctest::Approx(b.y).epsilon(1e-12));
  CHECK(back.w == doctest::Approx(b.w).epsilon(1e-12));
  CHECK(back.l == doctest::Approx(b.l).epsilon(1e-12));
  CHECK(back.h == doctest::Approx(b.h).epsilon(1e-12));
  CHECK(back.yaw == doctest::Approx(b.yaw).epsilon(1e-12));
  CHECK(back.vx == b.vx);
  CHECK(back.z == doctest::Approx(b.h / 2).epsilon(1e-12));
}

TEST_CASE("decode_detections corners and NMS") {
  bev::GridConfig cfg = grid_cfg(8);
  const int HW = 64;

  // all-zero logits: score exactly 0.5, never above a 0.5 threshold
  Tensor heat = Tensor::zeros({HW, 2});
  Tensor reg = Tensor::zeros({HW, 9});
  CHECK(decode_detections(heat, reg, cfg, 0.5, 0.5).empty());

  // one synthetic peak decodes to its encoded box
  scene::Box3D b;
  b.x = 1.6;
  b.y = 2.2;
  b.w = 2.0;
  b.l = 4.0;
  b.h = 1.5;
  b.class_id = 0;
  HeadTargets t = encode_targets({b}, cfg, 2);
  const int cell = cfg.cell_index(b.x, b.y);
  Tensor heat2 = Tensor::full({HW, 2}, -9.0);
  heat2.at(cell, 0) = 5.0;
  auto dets = decode_detections(heat2, t.reg, cfg, 0.3, 0.5);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].class_id == 0);
  CHECK(dets[0].box.x == doctest::Approx(b.x).epsilon(1e-9));
  CHECK(dets[0].score > 0.99);

  // two overlapping candidates at IoU above the threshold: the higher wins
  Detection d1, d2;
  d1.box = b;
  d1.score = 0.9;
  d2.box = b;
  d2.box.x += 0.1;
  d2.score = 0.7;
  auto kept = nms_bev({d1, d2}, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.9);

  // pairwise IoU of survivors stays below the threshold (property)
  Rng rng(55);
  std::vector<Detection> cands;
  for (int i = 0; i < 40; ++i) {
    Detection d;
    d.box.x = rng.uniform(-8, 8);
    d.box.y = rng.uniform(-8, 8);
    d.box.w = rng.uniform(1.0, 2.5);
    d.box.l = rng.uniform(2.0, 5.0);
    d.box.h = 1.5;
    d.box.yaw = rng.uniform(-3.1, 3.1);
    d.score = rng.uniform01();
    cands.push_back(d);
  }
  auto survivors = nms_bev(cands, 0.4);
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    for (std::size_t j = i + 1; j < survivors.size(); ++j) {
      CHECK(train::bev_iou(survivors[i].box, survivors[j].box) < 0.4);
    }
  }
}

TEST_CASE("detections serialize and parse") {
  Detection d;
  d.class_id = 2;
  d.score = 0.73;
  d.box.x = 1.0;
  d.box.y = -2.0;
  d.box.z = 0.8;
  d.box.w = 2.0;
  d.box.l = 4.5;
  d.box.h = 1.6;
  d.box.yaw = -0.3;
  d.box.vx = 0.5;
  d.box.vy = 0.0;
  const std::string text = detections_to_string({d});
  auto back = detections_from_string(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].class_id == 2);
  CHECK(back[0].score == d.score);
  CHECK(back[0].box.yaw == d.box.yaw);
  CHECK(detections_to_string(back) == text);
}

TEST_CASE("gradients flow through cross_attend + fuse + detection loss") {
  const int C = 3, cells = 4, dk = 4;
  FusionParams p0 = make_params(C, cells, dk, true, 20);
  HeadConfig hc;
  hc.channels = C;
  hc.n_classes = 2;
  hc.hidden = 8;
  hc.grid_h = hc.grid_w = cells;
  Rng hr(21);
  HeadParams h0 = HeadParams::init(hc, hr);

  bev::BevGrid fl = random_bev(C, cells, 22, 0.5);
  bev::BevGrid fc = random_bev(C, cells, 23, 0.5);
  scene::Box3D b;
  b.x = 2.0;
  b.y = 2.0;
  b.w = 2.0;
  b.l = 4.0;
  b.h = 1.5;
  b.class_id = 1;
  HeadTargets targets = encode_targets({b}, fl.cfg, 2);

  std::vector<Tensor> leaves;
  p0.for_each([&](const char*, Tensor& t) { leaves.push_back(t); });
  h0.for_each([&](const char*, Tensor& t) { leaves.push_back(t); });
  leaves.push_back(Tensor::scalar(0.3));   // c_lidar logits stand-in
  leaves.push_back(Tensor::scalar(-0.2));  // c_camera

  auto f = [&](const std::vector<Tensor>& ls, ad::Tape* tp) {
    FusionParams p = p0;
    HeadParams h = h0;
    std::size_t i = 0;
    p.for_each([&](const char*, Tensor& t) { t = ls[i++]; });
    h.for_each([&](const char*, Tensor& t) { t = ls[i++]; });
    Tensor c_l = ad::sigmoid(ls[i++], tp);
    Tensor c_c = ad::sigmoid(ls[i++], tp);
    bev::BevGrid fused = baseline_fusions(fl, fc, Mode::cw_mca, p, c_l, c_c, tp);
    HeadOut out = head_forward(fused, h, tp);
    return train::detection_loss(out, targets, tp);
  };
  auto rep = ad::grad_check(f, leaves);
  CHECK(rep.max_rel_err < 1e-4);
}
