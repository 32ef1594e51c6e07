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

#ifndef RELIFUSION_SCENE_HPP
#define RELIFUSION_SCENE_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "relifusion/tensor.hpp"

namespace relifusion::scene {

struct Box3D {
  double x = 0.0, y = 0.0, z = 0.0;   // center, meters
  double w = 1.0, l = 1.0, h = 1.0;   // size, meters (w lateral, l heading)
  double yaw = 0.0;                   // radians in [-pi, pi)
  int class_id = 0;
  double vx = 0.0, vy = 0.0;          // m/s

  double range() const;
  double azimuth() const;
};

// Columnar point cloud; box_tag holds the index of the containing box
// (-1 for ground/background points). Tags are internal bookkeeping for the
// corruption protocols and are not serialized.
struct PointCloud {
  std::vector<double> xs, ys, zs, intensity;
  std::vector<int> box_tag;

  std::size_t size() const { return xs.size(); }
  void push(double x, double y, double z, double inten, int tag);
};

// Six fixed 60-degree azimuth sectors; view 0 faces forward (azimuth 0).
// Columns follow a pinhole tan() mapping inside each sector; rows encode
// range linearly between r_min and r_max.
struct ViewGeometry {
  int n_views = 6;
  int height = 8;
  int width = 12;
  double r_min = 1.0;
  double r_max = 16.0;

  double sector_half() const { return 3.1415926535897932384626433832795 / n_views; }
  double sector_center(int k) const;
  int view_of_azimuth(double theta) const;
  // continuous column in [0, width) for an azimuth inside view k
  double column_of_azimuth(int k, double theta) const;
  double azimuth_of_column(int k, double col_center) const;
  double row_of_range(double r) const;
  double range_of_row(double row_center) const;
};

struct Footprint {
  int view = -1;
  int row0 = 0, row1 = 0;  // half-open
  int col0 = 0, col1 = 0;
  bool empty() const { return view < 0 || row0 >= row1 || col0 >= col1; }
};

// Image-plane cells a box imprints on (single view, the one containing the
// box center). Shared by the renderer and the occlusion corruption so both
// agree on what "the object's pixels" are.
Footprint view_footprint(const Box3D& box, const ViewGeometry& geom);

struct Frame {
  int t = 0;
  PointCloud cloud;
  std::vector<ad::Tensor> views;  // 6 x [C, H_v, W_v]
  std::vector<Box3D> gt_boxes;
};

struct Sequence {
  std::vector<Frame> frames;
  // per-step planar ego transform (dx, dy, dyaw); identity in this generator
  std::vector<std::array<double, 3>> ego_motion;
};

struct SceneConfig {
  double extent = 24.0;
  int n_classes = 3;
  int n_points = 512;
  double noise_sigma = 0.02;
  int view_channels = 5;
  double view_noise = 0.05;
  ViewGeometry geom;
  int T = 2;
  double dt = 0.5;
  int objects_min = 2;
  int objects_max = 4;
  bool static_objects = false;  // zero all velocities (fixture aid)
};

// Non-overlapping boxes (pairwise BEV IoU < 0.01), deterministic in seed.
// Throws CapacityError when the extent cannot host n_objects.
std::vector<Box3D> generate_scene(std::uint64_t seed, int n_objects,
                                  double extent_m, int class_count);

// Surface + ground sampling with Gaussian jitter; exactly n_points points.
// Points are tagged with their containing box after jitter, so every tag
// satisfies the yaw-aware containment test.
PointCloud sample_lidar(const std::vector<Box3D>& boxes, int n_points,
                        double noise_sigma_m, std::uint64_t seed,
                        double ground_radius = 12.0);

// Recomputes tags for a cloud loaded from disk.
void tag_points(PointCloud& cloud, const std::vector<Box3D>& boxes);

// Six synthetic feature maps: class-coded imprints over a low-amplitude
// noise background.
std::vector<ad::Tensor> render_views(const std::vector<Box3D>& boxes,
                                     const ViewGeometry& geom, int channels,
                                     std::uint64_t seed,
                                     double noise_amp = 0.05);

// Constant-velocity sequence: every object advances by velocity * dt per
// step; each frame gets its own cloud/views draw.
Sequence simulate_sequence(const SceneConfig& cfg, std::uint64_t seed);
Sequence simulate_sequence(std::uint64_t seed, int T, int n_objects,
                           const SceneConfig& cfg);

}  // namespace relifusion::scene

#endif  // RELIFUSION_SCENE_HPP
