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

#include "relifusion/bev.hpp"
#include "relifusion/grad_check.hpp"
#include "relifusion/scene.hpp"

using namespace relifusion;
using namespace relifusion::bev;
using namespace relifusion::scene;

TEST_CASE("voxelize corners") {
  GridConfig cfg = GridConfig::desk_default();

  PointCloud empty;
  BevGrid g = voxelize(empty, cfg);
  for (double e : g.features.v) CHECK(e == 0.0);

  // one point at the window center lands in the center cell only
  PointCloud one;
  one.push(0.0, 0.0, 0.25, 0.5, -1);
  BevGrid g1 = voxelize(one, cfg);
  int nonzero = 0;
  for (double e : g1.features.v) nonzero += (e != 0.0);
  CHECK(nonzero == 2);  // one count channel + the intensity channel
  const int ci = cfg.h / 2, cj = cfg.w / 2;
  CHECK(g1.features.at(1, ci, cj) == doctest::Approx(std::log1p(1.0)));
  CHECK(g1.features.at(cfg.z_bins(), ci, cj) == 0.5);

  // nuScenes-scale cell size passes validation
  GridConfig fine;
  fine.dx = 0.075;
  fine.dy = 0.075;
  fine.z_edges = {-2.0, -1.8, -1.6};  // 0.2 m bins
  CHECK_NOTHROW(fine.validate());

  GridConfig bad;
  bad.dx = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("voxelize is permutation invariant (property)") {
  auto boxes = generate_scene(3, 3, 20.0, 3);
  auto cloud = sample_lidar(boxes, 300, 0.02, 8);
  GridConfig cfg = GridConfig::square(16, 24.0, {-0.5, 0.5, 1.5, 3.0});
  BevGrid a = voxelize(cloud, cfg);

  // shuffle point order
  Rng rng(5);
  std::vector<std::size_t> idx(cloud.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  PointCloud shuffled;
  for (std::size_t i : idx) {
    shuffled.push(cloud.xs[i], cloud.ys[i], cloud.zs[i], cloud.intensity[i],
                  cloud.box_tag[i]);
  }
  BevGrid b = voxelize(shuffled, cfg);
  for (int i = 0; i < a.features.size(); ++i) {
    CHECK(a.features.v[static_cast<std::size_t>(i)] ==
          doctest::Approx(b.features.v[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

namespace {
ViewGeometry tight_geom() {
  ViewGeometry g;
  g.height = 4;
  g.width = 6;
  g.r_min = 1.0;
  g.r_max = 8.0;  // rays stay far inside the 24 m window
  return g;
}
}  // namespace

TEST_CASE("lift_splat corners and conservation") {
  ViewGeometry geom = tight_geom();
  GridConfig cfg = GridConfig::square(16, 24.0, {-0.5, 0.5, 1.5, 3.0});
  const int C = 3, B = 5;

  std::vector<ad::Tensor> zero_views(6, ad::Tensor::zeros({C, geom.height, geom.width}));
  ad::Tensor logits = ad::Tensor::zeros({geom.width, B});
  BevGrid g0 = lift_splat(zero_views, geom, logits, cfg);
  for (double e : g0.features.v) CHECK(e == 0.0);

  // single nonzero column, uniform depth: mass spread across the ray's cells,
  // total conserved
  auto views = zero_views;
  const int col = 2;
  double lifted = 0.0;
  for (int c = 0; c < C; ++c) {
    for (int i = 0; i < geom.height; ++i) {
      views[0].at(c, i, col) = 0.5 + 0.1 * c;
      lifted += 0.5 + 0.1 * c;
    }
  }
  BevGrid g1 = lift_splat(views, geom, logits, cfg);
  double total = 0.0;
  for (double e : g1.features.v) total += e;
  CHECK(std::fabs(total - lifted) < 1e-9);

  // one-hot depth bin: all mass in the single ray-marched cell
  ad::Tensor onehot = ad::Tensor::full({geom.width, B}, -200.0);
  const int bin = 3;
  for (int w = 0; w < geom.width; ++w) onehot.at(w, bin) = 200.0;
  BevGrid g2 = lift_splat(views, geom, onehot, cfg);
  const int cell = splat_target_cell(geom, cfg, 0, col, bin, B);
  REQUIRE(cell >= 0);
  for (int c = 0; c < C; ++c) {
    const int HW = cfg.h * cfg.w;
    for (int e = 0; e < HW; ++e) {
      const double v = g2.features.v[static_cast<std::size_t>(c) * HW + e];
      if (e == cell) {
        CHECK(v == doctest::Approx((0.5 + 0.1 * c) * geom.height).epsilon(1e-9));
      } else {
        CHECK(std::fabs(v) < 1e-12);
      }
    }
  }

  // geometry/grid mismatch
  std::vector<ad::Tensor> bad(6, ad::Tensor::zeros({C, geom.height + 1, geom.width}));
  CHECK_THROWS_AS(lift_splat(bad, geom, logits, cfg), ConfigError);
}

TEST_CASE("lift_splat differentiable through the depth distribution") {
  ViewGeometry geom = tight_geom();
  GridConfig cfg = GridConfig::square(16, 24.0, {-0.5, 0.5, 1.5, 3.0});
  auto boxes = generate_scene(6, 2, 14.0, 3);
  auto views = render_views(boxes, geom, 3, 17, 0.05);

  ad::Tensor logits0 = ad::Tensor::randn({geom.width, 5}, *(new Rng(3)), 0.5);
  auto f = [&](const std::vector<ad::Tensor>& leaves, ad::Tape* tp) {
    BevGrid g = lift_splat(views, geom, leaves[0], cfg, tp);
    // weighted sum so every cell contributes differently
    ad::Tensor wgt = ad::Tensor::zeros(g.features.shape);
    for (int i = 0; i < wgt.size(); ++i) wgt.v[static_cast<std::size_t>(i)] = 0.01 * (i % 13) - 0.05;
    return ad::sum(ad::mul(g.features, wgt, tp), tp);
  };
  auto rep = ad::grad_check(f, {logits0});
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("bev csv dump writes one file per channel") {
  GridConfig cfg = GridConfig::square(4, 8.0, {-0.5, 0.5});
  PointCloud pc;
  pc.push(1.0, 1.0, 0.0, 0.7, -1);
  BevGrid g = voxelize(pc, cfg);
  dump_bev_csv(g, "/tmp/relifusion_bev_test");
  std::FILE* f = std::fopen("/tmp/relifusion_bev_test_c0.csv", "r");
  REQUIRE(f);
  std::fclose(f);
  f = std::fopen("/tmp/relifusion_bev_test_c1.csv", "r");
  REQUIRE(f);
  std::fclose(f);
}
