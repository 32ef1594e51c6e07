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

#include "relifusion/geometry.hpp"
#include "relifusion/scene.hpp"
#include "relifusion/scene_io.hpp"

using namespace relifusion;
using namespace relifusion::scene;

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;

bool boxes_equal(const std::vector<Box3D>& a, const std::vector<Box3D>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].x != b[i].x || a[i].y != b[i].y || a[i].z != b[i].z ||
        a[i].w != b[i].w || a[i].l != b[i].l || a[i].h != b[i].h ||
        a[i].yaw != b[i].yaw || a[i].class_id != b[i].class_id ||
        a[i].vx != b[i].vx || a[i].vy != b[i].vy)
      return false;
  }
  return true;
}
}  // namespace

TEST_CASE("generate_scene corners") {
  CHECK(generate_scene(1, 0, 40.0, 3).empty());

  auto a = generate_scene(123, 4, 40.0, 3);
  auto b = generate_scene(123, 4, 40.0, 3);
  CHECK(boxes_equal(a, b));

  CHECK_THROWS_AS(generate_scene(1, -1, 40.0, 3), ArgumentError);
  CHECK_THROWS_AS(generate_scene(1, 1, -1.0, 3), ArgumentError);
  // far more trucks than a tiny window can hold
  CHECK_THROWS_AS(generate_scene(1, 60, 9.0, 3), CapacityError);
}

TEST_CASE("generate_scene boxes are pairwise disjoint (polygon oracle)") {
  auto boxes = generate_scene(7, 5, 40.0, 3);
  REQUIRE(boxes.size() == 5);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box3D& bi = boxes[i];
    CHECK(bi.w > 0.0);
    CHECK(bi.l > 0.0);
    CHECK(bi.yaw >= -kPi);
    CHECK(bi.yaw < kPi);
    CHECK(std::fabs(bi.x) <= 20.0);
    CHECK(std::fabs(bi.y) <= 20.0);
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      const Box3D& bj = boxes[j];
      // independent overlap oracle: candidate-vertex collection + hull area
      const double iou = geom::rect_iou(bi.x, bi.y, bi.w, bi.l, bi.yaw, bj.x,
                                        bj.y, bj.w, bj.l, bj.yaw);
      CHECK(iou < 0.01);
    }
  }
}

TEST_CASE("sample_lidar corners") {
  auto boxes = generate_scene(5, 3, 30.0, 3);

  CHECK(sample_lidar(boxes, 0, 0.0, 9).size() == 0);

  auto c1 = sample_lidar(boxes, 400, 0.02, 31);
  auto c2 = sample_lidar(boxes, 400, 0.02, 31);
  CHECK(c1.size() == 400);
  CHECK(c1.xs == c2.xs);
  CHECK(c1.ys == c2.ys);
  CHECK(c1.zs == c2.zs);
  CHECK(c1.intensity == c2.intensity);
  CHECK(c1.box_tag == c2.box_tag);
}

TEST_CASE("sample_lidar zero noise puts surface points on the boundary") {
  auto boxes = generate_scene(5, 2, 30.0, 3);
  auto cloud = sample_lidar(boxes, 300, 0.0, 77);
  int on_box = 0;
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    if (cloud.box_tag[p] < 0) continue;
    const Box3D& b = boxes[static_cast<std::size_t>(cloud.box_tag[p])];
    // local frame distance to the box surface
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    const double dx = cloud.xs[p] - b.x, dy = cloud.ys[p] - b.y;
    const double lx = std::fabs(c * dx + s * dy);
    const double ly = std::fabs(-s * dx + c * dy);
    const double lz = std::fabs(cloud.zs[p] - b.z);
    const double sx = b.l / 2, sy = b.w / 2, sz = b.h / 2;
    const double face_gap = std::min({sx - lx, sy - ly, sz - lz});
    CHECK(face_gap >= -1e-9);
    CHECK(face_gap <= 1e-9);
    ++on_box;
  }
  CHECK(on_box > 100);
}

TEST_CASE("tagged points satisfy yaw-aware containment (property)") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    auto boxes = generate_scene(seed, 4, 30.0, 3);
    auto cloud = sample_lidar(boxes, 500, 0.05, seed * 11 + 1);
    for (std::size_t p = 0; p < cloud.size(); ++p) {
      if (cloud.box_tag[p] < 0) continue;
      const Box3D& b = boxes[static_cast<std::size_t>(cloud.box_tag[p])];
      CHECK(geom::point_in_rect(cloud.xs[p], cloud.ys[p], b.x, b.y, b.w, b.l, b.yaw));
      CHECK(std::fabs(cloud.zs[p] - b.z) <= b.h / 2 + 1e-9);
    }
  }
}

TEST_CASE("view sectors partition the circle") {
  ViewGeometry geom;
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double theta = rng.uniform(-kPi, kPi);
    const int k = geom.view_of_azimuth(theta);
    CHECK(k >= 0);
    CHECK(k < 6);
    // azimuth is inside exactly that sector
    const double local = geom::wrap_angle(theta - geom.sector_center(k));
    CHECK(local >= -geom.sector_half() - 1e-12);
    CHECK(local < geom.sector_half() + 1e-12);
  }
  // front view is index 0; sector centers advance counter-clockwise
  CHECK(geom.view_of_azimuth(0.0) == 0);
  CHECK(geom.view_of_azimuth(kPi / 3) == 1);
  CHECK(geom.view_of_azimuth(-kPi / 3) == 5);
}

TEST_CASE("render_views corners") {
  ViewGeometry geom;
  // no boxes: background only, reproducible
  auto v1 = render_views({}, geom, 5, 3, 0.05);
  auto v2 = render_views({}, geom, 5, 3, 0.05);
  REQUIRE(v1.size() == 6);
  for (int k = 0; k < 6; ++k) {
    CHECK(v1[static_cast<std::size_t>(k)].v == v2[static_cast<std::size_t>(k)].v);
    for (double e : v1[static_cast<std::size_t>(k)].v) CHECK(std::fabs(e) < 0.4);
  }

  // one box centered in sector 2 imprints only view 2
  Box3D b;
  const double az = geom.sector_center(2);
  b.x = 8.0 * std::cos(az);
  b.y = 8.0 * std::sin(az);
  b.w = 2.0;
  b.l = 4.5;
  b.h = 1.6;
  b.z = 0.8;
  auto clean = render_views({}, geom, 5, 3, 0.0);
  auto with_box = render_views({b}, geom, 5, 3, 0.0);
  for (int k = 0; k < 6; ++k) {
    double diff = 0.0;
    for (int i = 0; i < with_box[static_cast<std::size_t>(k)].size(); ++i) {
      diff += std::fabs(with_box[static_cast<std::size_t>(k)].v[static_cast<std::size_t>(i)] -
                        clean[static_cast<std::size_t>(k)].v[static_cast<std::size_t>(i)]);
    }
    if (k == 2) {
      CHECK(diff > 0.0);
    } else {
      CHECK(diff == 0.0);
    }
  }
}

TEST_CASE("imprint column matches the pinhole azimuth mapping") {
  ViewGeometry geom;
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = static_cast<int>(rng.below(6));
    const double local = rng.uniform(-0.42, 0.42);  // stay inside the sector
    const double theta = geom::wrap_angle(geom.sector_center(k) + local);
    const double r = rng.uniform(4.0, 12.0);
    Box3D b;
    b.x = r * std::cos(theta);
    b.y = r * std::sin(theta);
    b.w = 1.0;
    b.l = 1.0;
    b.h = 1.5;
    const Footprint fp = view_footprint(b, geom);
    REQUIRE(fp.view == k);
    // pinhole oracle: col = (tan(local)/tan(pi/6) + 1)/2 * W
    const double col_oracle =
        (std::tan(local) / std::tan(kPi / 6.0) + 1.0) / 2.0 * geom.width;
    CHECK(col_oracle >= fp.col0 - 1e-9);
    CHECK(col_oracle <= fp.col1 + 1e-9);
    const double center_col = (fp.col0 + fp.col1) / 2.0;
    CHECK(std::fabs(center_col - col_oracle) <= 1.6);
  }
}

TEST_CASE("simulate_sequence kinematics") {
  SceneConfig cfg;
  cfg.T = 3;
  cfg.dt = 0.5;

  // T=1 equals direct generation
  Sequence one = simulate_sequence(44, 1, 3, cfg);
  REQUIRE(one.frames.size() == 1);
  CHECK(one.frames[0].gt_boxes.size() == 3);

  Sequence seq = simulate_sequence(44, 3, 3, cfg);
  REQUIRE(seq.frames.size() == 3);
  CHECK(boxes_equal(one.frames[0].gt_boxes, seq.frames[0].gt_boxes));

  // velocity (1, 0), dt 0.5: centers advance by 0.5 per step
  Sequence hand = seq;
  for (int t = 0; t < 3; ++t) {
    for (std::size_t i = 0; i < seq.frames[0].gt_boxes.size(); ++i) {
      const Box3D& b0 = seq.frames[0].gt_boxes[i];
      const Box3D& bt = seq.frames[static_cast<std::size_t>(t)].gt_boxes[i];
      CHECK(bt.x == doctest::Approx(b0.x + b0.vx * 0.5 * t).epsilon(1e-12));
      CHECK(bt.y == doctest::Approx(b0.y + b0.vy * 0.5 * t).epsilon(1e-12));
    }
  }
  (void)hand;

  // zero velocities: identical gt across frames
  SceneConfig still = cfg;
  still.static_objects = true;
  Sequence s2 = simulate_sequence(45, 3, 2, still);
  for (std::size_t i = 0; i < s2.frames[0].gt_boxes.size(); ++i) {
    const Box3D& b0 = s2.frames[0].gt_boxes[i];
    CHECK(b0.vx == 0.0);
    CHECK(s2.frames[2].gt_boxes[i].x == b0.x);
    CHECK(s2.frames[2].gt_boxes[i].y == b0.y);
  }

  CHECK_THROWS_AS(simulate_sequence(1, 0, 2, cfg), ArgumentError);
}

TEST_CASE("box text serialization round-trips bit-exactly") {
  auto boxes = generate_scene(99, 4, 30.0, 3);
  const std::string text = boxes_to_string(boxes);
  auto back = boxes_from_string(text);
  CHECK(boxes_equal(boxes, back));
  CHECK(boxes_to_string(back) == text);
}

TEST_CASE("point cloud binary serialization round-trips") {
  auto boxes = generate_scene(13, 3, 30.0, 3);
  auto cloud = sample_lidar(boxes, 200, 0.01, 5);
  const std::string path = "/tmp/relifusion_test_cloud.rfpc";
  save_cloud(path, cloud);
  PointCloud back = load_cloud(path);
  REQUIRE(back.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(static_cast<float>(cloud.xs[i]) == static_cast<float>(back.xs[i]));
    CHECK(static_cast<float>(cloud.intensity[i]) == static_cast<float>(back.intensity[i]));
  }
  // file-level bit-exactness: save(load(f)) == f
  const std::string path2 = "/tmp/relifusion_test_cloud2.rfpc";
  save_cloud(path2, back);
  std::FILE* f1 = std::fopen(path.c_str(), "rb");
  std::FILE* f2 = std::fopen(path2.c_str(), "rb");
  REQUIRE(f1);
  REQUIRE(f2);
  int c1, c2;
  do {
    c1 = std::fgetc(f1);
    c2 = std::fgetc(f2);
    CHECK(c1 == c2);
  } while (c1 != EOF && c2 != EOF);
  std::fclose(f1);
  std::fclose(f2);

  CHECK_THROWS_AS(load_cloud("/tmp/relifusion_does_not_exist.rfpc"), IoError);
}

TEST_CASE("rect_iou hand cases") {
  // identical, disjoint, unit squares offset by 0.5
  CHECK(geom::rect_iou(0, 0, 2, 4, 0.3, 0, 0, 2, 4, 0.3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(geom::rect_iou(0, 0, 1, 1, 0, 5, 5, 1, 1, 0) == 0.0);
  CHECK(geom::rect_iou(0, 0, 1, 1, 0, 0.5, 0, 1, 1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK_THROWS_AS(geom::rect_iou(0, 0, 0, 1, 0, 0, 0, 1, 1, 0), ArgumentError);
}
