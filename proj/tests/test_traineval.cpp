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
#include <cstdio>

#include "oracles.hpp"
#include "relifusion/checkpoint.hpp"
#include "relifusion/losses.hpp"
#include "relifusion/metrics.hpp"
#include "relifusion/optimizer.hpp"
#include "relifusion/train.hpp"

using namespace relifusion;
using namespace relifusion::train;
using ad::Tensor;

TEST_CASE("detection loss corners") {
  bev::GridConfig cfg = bev::GridConfig::square(4, 8.0, {-0.5, 0.5});
  scene::Box3D b;
  b.x = 1.0;
  b.y = 1.0;
  b.w = 1.0;
  b.l = 2.0;
  b.h = 1.5;
  b.class_id = 0;
  fusion::HeadTargets t = fusion::encode_targets({b}, cfg, 2);

  // near-perfect predictions
  fusion::HeadOut perfect;
  perfect.heat_logits = Tensor::full({16, 2}, -40.0);
  const int cell = cfg.cell_index(b.x, b.y);
  perfect.heat_logits.at(cell, 0) = 40.0;
  perfect.reg = t.reg;
  CHECK(detection_loss(perfect, t).item() < 1e-6);

  // no ground truth, near-zero probabilities
  fusion::HeadTargets empty = fusion::encode_targets({}, cfg, 2);
  fusion::HeadOut quiet;
  quiet.heat_logits = Tensor::full({16, 2}, -12.0);
  quiet.reg = Tensor::zeros({16, 9});
  CHECK(detection_loss(quiet, empty).item() < 1e-3);

  // single-cell hand case: focal + L1 evaluated by hand
  bev::GridConfig one = bev::GridConfig::square(1, 2.0, {-0.5, 0.5});
  scene::Box3D hb;
  hb.x = 0.2;
  hb.y = -0.1;
  hb.w = 1.0;
  hb.l = 1.0;
  hb.h = 1.0;
  hb.class_id = 0;
  fusion::HeadTargets ht = fusion::encode_targets({hb}, one, 1);
  fusion::HeadOut hout;
  hout.heat_logits = Tensor({1, 1}, {0.4});
  hout.reg = Tensor::zeros({1, 9});
  const double p = 1.0 / (1.0 + std::exp(-0.4));
  double expected = -0.25 * (1 - p) * (1 - p) * std::log(p);
  for (int r = 0; r < 9; ++r) expected += std::fabs(0.0 - ht.reg.at(0, r));
  CHECK(detection_loss(hout, ht).item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("temporal loss corners and hand case") {
  Rng rng(3);
  Tensor s = Tensor::randn({6, 4}, rng, 1.0);
  CHECK(temporal_loss({s, s}).item() == 0.0);
  CHECK(temporal_loss({s}).item() == 0.0);
  CHECK(temporal_loss({}).item() == 0.0);

  Tensor s2 = s;
  for (int i = 0; i < s2.size(); ++i) s2.v[static_cast<std::size_t>(i)] += 0.1 * (i % 3);
  double hand = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    const double d = s2.v[static_cast<std::size_t>(i)] - s.v[static_cast<std::size_t>(i)];
    hand += d * d;
  }
  hand /= s.size();
  CHECK(temporal_loss({s, s2}).item() == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("confidence loss corners") {
  // score 0.5 against target 0.5: ln 2 per term
  std::vector<Tensor> scores = {Tensor::scalar(0.5)};
  CHECK(confidence_loss(scores, {0.5}).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // score near target at the endpoints approaches zero loss
  CHECK(confidence_loss({Tensor::scalar(1.0 - 1e-12)}, {1.0}).item() < 1e-9);
  CHECK(confidence_loss({Tensor::scalar(1e-12)}, {0.0}).item() < 1e-9);

  // batch mean equals the mean of singleton losses
  std::vector<Tensor> batch = {Tensor::scalar(0.3), Tensor::scalar(0.8), Tensor::scalar(0.6)};
  std::vector<double> targets = {1.0, 0.25, 0.5};
  double singles = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    singles += confidence_loss({batch[i]}, {targets[i]}).item();
  }
  CHECK(confidence_loss(batch, targets).item() == doctest::Approx(singles / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(confidence_loss({}, {}), ArgumentError);
  CHECK_THROWS_AS(confidence_loss({Tensor::scalar(0.5)}, {1.5}), ArgumentError);
}

TEST_CASE("total loss weighting") {
  auto s = [](double v) { return Tensor::scalar(v); };
  LossBreakdown bd;
  CHECK(total_loss(s(0), s(0), s(0), s(0), nullptr, &bd).item() == 0.0);
  CHECK(total_loss(s(1), s(1), s(1), s(1), nullptr, &bd).item() ==
        doctest::Approx(1.35).epsilon(1e-15));
  CHECK(bd.l_total == total_loss(s(1), s(1), s(1), s(1)).item());
  CHECK(total_loss(s(2), s(0), s(0), s(0)).item() == 2.0);

  Tensor bad = s(1);
  bad.v[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(total_loss(bad, s(0), s(0), s(0)), NumericError);
}

TEST_CASE("bev_iou hand cases and properties") {
  scene::Box3D a, b;
  a.w = b.w = 2.0;
  a.l = b.l = 4.0;
  a.yaw = b.yaw = 0.4;
  CHECK(bev_iou(a, b) == doctest::Approx(1.0).epsilon(1e-12));

  b.x = 100.0;
  CHECK(bev_iou(a, b) == 0.0);

  scene::Box3D u1, u2;
  u1.w = u1.l = u2.w = u2.l = 1.0;
  u1.yaw = u2.yaw = 0.0;
  u2.x = 0.5;
  CHECK(bev_iou(u1, u2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  scene::Box3D degenerate = u1;
  degenerate.w = 0.0;
  CHECK_THROWS_AS(bev_iou(u1, degenerate), ArgumentError);

  // symmetry + rigid invariance + oracle agreement over random pairs
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    scene::Box3D p, q;
    p.x = rng.uniform(-3, 3);
    p.y = rng.uniform(-3, 3);
    p.w = rng.uniform(0.5, 3.0);
    p.l = rng.uniform(0.5, 5.0);
    p.yaw = rng.uniform(-3.14, 3.14);
    q.x = rng.uniform(-3, 3);
    q.y = rng.uniform(-3, 3);
    q.w = rng.uniform(0.5, 3.0);
    q.l = rng.uniform(0.5, 5.0);
    q.yaw = rng.uniform(-3.14, 3.14);

    const double iou = bev_iou(p, q);
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0 + 1e-12);
    CHECK(bev_iou(q, p) == doctest::Approx(iou).epsilon(1e-12));

    const double oracle = test_oracles::rect_iou_oracle(p.x, p.y, p.w, p.l, p.yaw,
                                                        q.x, q.y, q.w, q.l, q.yaw);
    CHECK(std::fabs(iou - oracle) < 1e-9);

    // common rigid transform
    const double phi = rng.uniform(-3.14, 3.14), tx = rng.uniform(-5, 5), ty = rng.uniform(-5, 5);
    auto moved = [&](scene::Box3D v) {
      const double c = std::cos(phi), s = std::sin(phi);
      const double nx = c * v.x - s * v.y + tx;
      const double ny = s * v.x + c * v.y + ty;
      v.x = nx;
      v.y = ny;
      v.yaw += phi;
      return v;
    };
    CHECK(bev_iou(moved(p), moved(q)) == doctest::Approx(iou).epsilon(1e-9));
  }
}

namespace {
fusion::Detection det(double x, double y, double score, double w = 2.0, double l = 4.0) {
  fusion::Detection d;
  d.box.x = x;
  d.box.y = y;
  d.box.w = w;
  d.box.l = l;
  d.box.h = 1.5;
  d.score = score;
  return d;
}

scene::Box3D gt_box(double x, double y, double w = 2.0, double l = 4.0) {
  scene::Box3D b;
  b.x = x;
  b.y = y;
  b.w = w;
  b.l = l;
  b.h = 1.5;
  return b;
}
}  // namespace

TEST_CASE("average precision corners and oracle") {
  // all gt matched, no false positives
  std::vector<fusion::Detection> dets = {det(0, 0, 0.9), det(10, 0, 0.8)};
  std::vector<scene::Box3D> gt = {gt_box(0, 0), gt_box(10, 0)};
  CHECK(average_precision(dets, gt, 0.5) == 1.0);

  // zero detections, nonzero gt
  CHECK(average_precision({}, gt, 0.5) == 0.0);

  // 3-detection / 2-gt hand case: [TP, FP, TP] by score order
  std::vector<fusion::Detection> mixed = {det(0, 0, 0.9), det(50, 50, 0.8), det(10, 0, 0.7)};
  const double got = average_precision(mixed, gt, 0.5);
  // ranked PR: (1/1, r=.5), (1/2, r=.5), (2/3, r=1) -> AP = .5*1 + .5*(2/3)
  CHECK(got == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0).epsilon(1e-12));
  CHECK(got == doctest::Approx(test_oracles::ap_oracle(mixed, gt, 0.5)).epsilon(1e-12));

  // exhaustive oracle over random small cases (<= 6 detections, <= 4 gt)
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<scene::Box3D> g;
    const int n_gt = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n_gt; ++i) g.push_back(gt_box(rng.uniform(-10, 10), rng.uniform(-10, 10)));
    std::vector<fusion::Detection> d;
    const int n_det = static_cast<int>(rng.below(7));
    for (int i = 0; i < n_det; ++i) {
      if (rng.uniform01() < 0.6 && !g.empty()) {
        const auto& base = g[static_cast<std::size_t>(rng.below(g.size()))];
        d.push_back(det(base.x + rng.uniform(-0.5, 0.5), base.y + rng.uniform(-0.5, 0.5),
                        rng.uniform01()));
      } else {
        d.push_back(det(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform01()));
      }
    }
    const double impl = average_precision(d, g, 0.5);
    const double oracle = test_oracles::ap_oracle(d, g, 0.5);
    CHECK(impl == doctest::Approx(oracle).epsilon(1e-9));
  }

  // equal scores: deterministic tie-break by detection index
  std::vector<fusion::Detection> tie1 = {det(0, 0, 0.5), det(50, 50, 0.5)};
  std::vector<fusion::Detection> tie2 = {det(50, 50, 0.5), det(0, 0, 0.5)};
  const double ap1 = average_precision(tie1, {gt_box(0, 0)}, 0.5);
  const double ap2 = average_precision(tie2, {gt_box(0, 0)}, 0.5);
  CHECK(ap1 == 1.0);
  CHECK(ap2 == 0.5);  // the far box ranks first and costs precision
}

TEST_CASE("evaluate_detections pools per class across scenes") {
  std::vector<std::vector<fusion::Detection>> dets(2);
  std::vector<std::vector<scene::Box3D>> gts(2);
  auto g0 = gt_box(0, 0);
  g0.class_id = 0;
  auto g1 = gt_box(5, 5);
  g1.class_id = 1;
  gts[0] = {g0};
  gts[1] = {g1};
  auto d0 = det(0, 0, 0.9);
  d0.class_id = 0;
  auto d1 = det(5, 5, 0.8);
  d1.class_id = 1;
  dets[0] = {d0};
  dets[1] = {d1};
  EvalReport r = evaluate_detections(dets, gts, 3, 0.5);
  CHECK(r.class_ids.size() == 2);  // class 2 has no gt
  CHECK(r.map == 1.0);
  CHECK(r.mate < 1e-12);

  // a detection in the wrong scene cannot match the other scene's gt
  std::vector<std::vector<fusion::Detection>> wrong(2);
  wrong[0] = {d1};
  wrong[1] = {};
  EvalReport r2 = evaluate_detections(wrong, gts, 3, 0.5);
  CHECK(r2.map == 0.0);
}

TEST_CASE("AdamW minimizes a quadratic, SGD flag works") {
  for (bool sgd : {false, true}) {
    OptimizerConfig cfg;
    cfg.lr = sgd ? 0.05 : 0.1;
    cfg.weight_decay = 0.0;
    cfg.plain_sgd = sgd;
    AdamW opt(cfg);
    Tensor x({2}, {3.0, -2.0});
    for (int it = 0; it < 200; ++it) {
      std::vector<std::vector<double>> grads = {{2.0 * x.v[0], 2.0 * x.v[1]}};
      std::vector<Tensor*> params = {&x};
      opt.step(params, grads);
    }
    CHECK(std::fabs(x.v[0]) < 1e-2);
    CHECK(std::fabs(x.v[1]) < 1e-2);
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng(9);
  Tensor a = Tensor::randn({3, 4}, rng, 2.0);
  Tensor b = Tensor::randn({7}, rng, 0.5);
  const std::string path = "/tmp/relifusion_test.rfck";
  save_checkpoint(path, {{"module/a", &a}, {"module/b", &b}});
  auto blocks = load_checkpoint(path);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks.at("module/a").shape == a.shape);
  CHECK(blocks.at("module/a").v == a.v);
  CHECK(blocks.at("module/b").v == b.v);

  // save(load(f)) produces identical bytes
  const std::string path2 = "/tmp/relifusion_test2.rfck";
  const Tensor& ra = blocks.at("module/a");
  const Tensor& rb = blocks.at("module/b");
  save_checkpoint(path2, {{"module/a", &ra}, {"module/b", &rb}});
  std::FILE* f1 = std::fopen(path.c_str(), "rb");
  std::FILE* f2 = std::fopen(path2.c_str(), "rb");
  REQUIRE(f1);
  REQUIRE(f2);
  int c1, c2;
  do {
    c1 = std::fgetc(f1);
    c2 = std::fgetc(f2);
    CHECK(c1 == c2);
  } while (c1 != EOF);
  std::fclose(f1);
  std::fclose(f2);

  CHECK_THROWS_AS(load_checkpoint("/tmp/relifusion_missing.rfck"), IoError);
}

TEST_CASE("median helper") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), ArgumentError);
}

TEST_CASE("report formatting is stable") {
  ScenarioRow row;
  row.spec = corrupt::standard_scenarios().entries[0];
  row.report.class_ids = {0, 1};
  row.report.per_class_ap = {0.5, 0.25};
  row.report.map = 0.375;
  row.report.mate = 0.8;
  row.report.n_gt = 10;
  const std::string csv = sweep_csv({row});
  CHECK(csv.find("scenario,class,AP,mAP,mATE") == 0);
  CHECK(csv.find("clean,0,0.500000,0.375000,0.800000") != std::string::npos);
  CHECK(csv.find("clean,all") != std::string::npos);
  CHECK(sweep_csv({row}) == csv);

  EpochRow er;
  er.stage = 3;
  er.epoch = 0;
  er.loss = {1.0, 2.0, 3.0, 4.0, 1.0 + 0.2 + 0.6 + 0.2};
  const std::string cc = curves_csv({er});
  CHECK(cc.find("lambda_det=1") != std::string::npos);
  CHECK(cc.find("lambda_conf=0.05") != std::string::npos);
  CHECK(cc.find("stage,epoch,") != std::string::npos);
}
