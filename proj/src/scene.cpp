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

#include "relifusion/scene.hpp"

#include <algorithm>
#include <cmath>

#include "relifusion/errors.hpp"
#include "relifusion/geometry.hpp"

namespace relifusion::scene {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;

struct ClassSpec {
  double w_lo, w_hi, l_lo, l_hi, h_lo, h_hi, v_max;
};

// car / truck / compact archetypes; class ids beyond 2 reuse them with a
// deterministic size multiplier.
const ClassSpec kClasses[3] = {
    {1.9, 2.2, 4.4, 5.0, 1.5, 1.8, 1.6},
    {2.5, 2.9, 7.0, 8.5, 2.6, 3.2, 1.2},
    {1.6, 1.8, 3.2, 3.6, 1.4, 1.6, 1.4},
};
}  // namespace

double Box3D::range() const { return std::hypot(x, y); }
double Box3D::azimuth() const { return std::atan2(y, x); }

void PointCloud::push(double x, double y, double z, double inten, int tag) {
  xs.push_back(x);
  ys.push_back(y);
  zs.push_back(z);
  intensity.push_back(inten);
  box_tag.push_back(tag);
}

double ViewGeometry::sector_center(int k) const {
  return geom::wrap_angle(k * 2.0 * sector_half());
}

int ViewGeometry::view_of_azimuth(double theta) const {
  const double sector = 2.0 * sector_half();
  double shifted = geom::wrap_angle(theta) + sector_half();
  if (shifted < 0.0) shifted += 2.0 * kPi;
  int k = static_cast<int>(std::floor(shifted / sector));
  return k % n_views;
}

double ViewGeometry::column_of_azimuth(int k, double theta) const {
  const double local = geom::wrap_angle(theta - sector_center(k));
  const double u = std::tan(local) / std::tan(sector_half());  // [-1, 1)
  return (u + 1.0) / 2.0 * width;
}

double ViewGeometry::azimuth_of_column(int k, double col_center) const {
  const double u = col_center / width * 2.0 - 1.0;
  return geom::wrap_angle(sector_center(k) + std::atan(u * std::tan(sector_half())));
}

double ViewGeometry::row_of_range(double r) const {
  return (r - r_min) / (r_max - r_min) * height;
}

double ViewGeometry::range_of_row(double row_center) const {
  return r_min + row_center / height * (r_max - r_min);
}

Footprint view_footprint(const Box3D& box, const ViewGeometry& geom) {
  Footprint fp;
  const double r = box.range();
  if (r < 1e-6 || r < geom.r_min || r > geom.r_max) return fp;
  const double theta = box.azimuth();
  fp.view = geom.view_of_azimuth(theta);

  const double radius = 0.5 * std::hypot(box.w, box.l);
  const double dphi = std::atan2(radius, r);
  const double c0 = geom.column_of_azimuth(fp.view, geom::wrap_angle(theta - dphi));
  const double c1 = geom.column_of_azimuth(fp.view, geom::wrap_angle(theta + dphi));
  const double r0 = geom.row_of_range(std::max(r - radius, geom.r_min));
  const double r1 = geom.row_of_range(std::min(r + radius, geom.r_max));

  fp.col0 = std::max(0, static_cast<int>(std::floor(std::min(c0, c1))));
  fp.col1 = std::min(geom.width, static_cast<int>(std::ceil(std::max(c0, c1))));
  fp.row0 = std::max(0, static_cast<int>(std::floor(std::min(r0, r1))));
  fp.row1 = std::min(geom.height, static_cast<int>(std::ceil(std::max(r0, r1))));
  // a box glued to the sensor collapses; make sure a valid footprint spans
  // at least one cell
  if (fp.col0 >= fp.col1 || fp.row0 >= fp.row1) fp.view = -1;
  return fp;
}

std::vector<Box3D> generate_scene(std::uint64_t seed, int n_objects,
                                  double extent_m, int class_count) {
  if (n_objects < 0) throw ArgumentError("generate_scene: n_objects < 0");
  if (extent_m <= 0.0) throw ArgumentError("generate_scene: extent must be > 0");
  if (class_count < 1) throw ArgumentError("generate_scene: class_count < 1");

  Rng rng(seed);
  std::vector<Box3D> boxes;
  boxes.reserve(static_cast<std::size_t>(n_objects));
  const int max_tries = 200 * std::max(1, n_objects);
  int tries = 0;
  while (static_cast<int>(boxes.size()) < n_objects) {
    if (++tries > max_tries) {
      throw CapacityError("generate_scene: cannot place " +
                          std::to_string(n_objects) + " boxes in extent " +
                          std::to_string(extent_m));
    }
    Box3D b;
    b.class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(class_count)));
    const ClassSpec& spec = kClasses[b.class_id % 3];
    const double size_mul = 1.0 + 0.1 * (b.class_id / 3);
    b.w = rng.uniform(spec.w_lo, spec.w_hi) * size_mul;
    b.l = rng.uniform(spec.l_lo, spec.l_hi) * size_mul;
    b.h = rng.uniform(spec.h_lo, spec.h_hi) * size_mul;
    const double margin = std::hypot(b.w, b.l) / 2.0;
    const double half = extent_m / 2.0 - margin;
    if (half <= 0.0) continue;
    b.x = rng.uniform(-half, half);
    b.y = rng.uniform(-half, half);
    b.z = b.h / 2.0;
    b.yaw = geom::wrap_angle(rng.uniform(-kPi, kPi));
    const double speed = rng.uniform(0.0, spec.v_max);
    b.vx = speed * std::cos(b.yaw);
    b.vy = speed * std::sin(b.yaw);
    // keep a clear patch around the sensor so footprints stay valid
    if (b.range() < 2.5) continue;

    bool ok = true;
    for (const Box3D& other : boxes) {
      if (geom::rect_iou(b.x, b.y, b.w, b.l, b.yaw, other.x, other.y, other.w,
                         other.l, other.yaw) >= 0.01) {
        ok = false;
        break;
      }
    }
    if (ok) boxes.push_back(b);
  }
  return boxes;
}

namespace {

// Faces of a box a lidar return can land on: four sides plus the top.
struct Face {
  int box;
  int face;  // 0..3 sides, 4 top
  double area;
};

void sample_on_face(const Box3D& b, int face, Rng& rng, double& x, double& y,
                    double& z) {
  const double hl = b.l / 2.0, hw = b.w / 2.0;
  double lx = 0.0, ly = 0.0, lz = 0.0;
  switch (face) {
    case 0: lx = hl; ly = rng.uniform(-hw, hw); lz = rng.uniform(-b.h / 2, b.h / 2); break;
    case 1: lx = -hl; ly = rng.uniform(-hw, hw); lz = rng.uniform(-b.h / 2, b.h / 2); break;
    case 2: ly = hw; lx = rng.uniform(-hl, hl); lz = rng.uniform(-b.h / 2, b.h / 2); break;
    case 3: ly = -hw; lx = rng.uniform(-hl, hl); lz = rng.uniform(-b.h / 2, b.h / 2); break;
    default: lz = b.h / 2; lx = rng.uniform(-hl, hl); ly = rng.uniform(-hw, hw); break;
  }
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  x = b.x + c * lx - s * ly;
  y = b.y + s * lx + c * ly;
  z = b.z + lz;
}

int containing_box(const std::vector<Box3D>& boxes, double x, double y, double z) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const Box3D& b = boxes[i];
    if (std::fabs(z - b.z) <= b.h / 2.0 + 1e-9 &&
        geom::point_in_rect(x, y, b.x, b.y, b.w, b.l, b.yaw)) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

}  // namespace

void tag_points(PointCloud& cloud, const std::vector<Box3D>& boxes) {
  cloud.box_tag.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cloud.box_tag[i] = containing_box(boxes, cloud.xs[i], cloud.ys[i], cloud.zs[i]);
  }
}

PointCloud sample_lidar(const std::vector<Box3D>& boxes, int n_points,
                        double noise_sigma_m, std::uint64_t seed,
                        double ground_radius) {
  if (n_points < 0) throw ArgumentError("sample_lidar: n_points < 0");
  Rng rng(seed);
  PointCloud cloud;

  const int n_ground = boxes.empty()
                           ? n_points
                           : static_cast<int>(std::floor(0.3 * n_points));
  int n_obj = n_points - n_ground;

  // ground disc
  for (int i = 0; i < n_ground; ++i) {
    const double r = ground_radius * std::sqrt(rng.uniform01());
    const double th = rng.uniform(-kPi, kPi);
    double x = r * std::cos(th), y = r * std::sin(th), z = 0.0;
    if (noise_sigma_m > 0.0) {
      x += rng.normal(0.0, noise_sigma_m);
      y += rng.normal(0.0, noise_sigma_m);
      z += rng.normal(0.0, noise_sigma_m);
    }
    const double inten = std::clamp(0.08 + rng.normal(0.0, 0.02), 0.0, 1.0);
    cloud.push(x, y, z, inten, -1);
  }

  if (!boxes.empty() && n_obj > 0) {
    // budget per box proportional to surface area, largest remainder rounding
    std::vector<double> area(boxes.size());
    double total = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const Box3D& b = boxes[i];
      area[i] = 2.0 * (b.l + b.w) * b.h + b.l * b.w;
      total += area[i];
    }
    std::vector<int> budget(boxes.size(), 0);
    std::vector<std::pair<double, std::size_t>> rem;
    int assigned = 0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const double exact = n_obj * area[i] / total;
      budget[i] = static_cast<int>(std::floor(exact));
      assigned += budget[i];
      rem.push_back({exact - budget[i], i});
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (int i = 0; i < n_obj - assigned; ++i) budget[rem[static_cast<std::size_t>(i)].second]++;

    for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
      const Box3D& b = boxes[bi];
      // faces weighted by area
      double face_area[5] = {b.w * b.h, b.w * b.h, b.l * b.h, b.l * b.h, b.l * b.w};
      double face_total = 0.0;
      for (double fa : face_area) face_total += fa;
      const double base_inten = 0.25 + 0.22 * (b.class_id % 3);
      for (int p = 0; p < budget[bi]; ++p) {
        double pick = rng.uniform(0.0, face_total);
        int face = 0;
        for (; face < 4; ++face) {
          if (pick < face_area[face]) break;
          pick -= face_area[face];
        }
        double x, y, z;
        sample_on_face(b, face, rng, x, y, z);
        if (noise_sigma_m > 0.0) {
          x += rng.normal(0.0, noise_sigma_m);
          y += rng.normal(0.0, noise_sigma_m);
          z += rng.normal(0.0, noise_sigma_m);
        }
        const double inten = std::clamp(base_inten + rng.normal(0.0, 0.02), 0.0, 1.0);
        cloud.push(x, y, z, inten, containing_box(boxes, x, y, z));
      }
    }
  }
  return cloud;
}

std::vector<ad::Tensor> render_views(const std::vector<Box3D>& boxes,
                                     const ViewGeometry& geom, int channels,
                                     std::uint64_t seed, double noise_amp) {
  if (channels < 1) throw ArgumentError("render_views: channels < 1");
  Rng rng(seed);
  std::vector<ad::Tensor> views;
  views.reserve(static_cast<std::size_t>(geom.n_views));
  for (int k = 0; k < geom.n_views; ++k) {
    ad::Tensor v = ad::Tensor::zeros({channels, geom.height, geom.width});
    for (double& e : v.v) e = rng.normal(0.0, noise_amp);
    views.push_back(std::move(v));
  }

  for (const Box3D& b : boxes) {
    const Footprint fp = view_footprint(b, geom);
    if (fp.empty()) continue;
    const double atten = 1.0 / (1.0 + 0.05 * b.range());
    for (int c = 0; c < channels; ++c) {
      const double amp =
          atten * (1.0 + 0.5 * std::cos(kPi * c * (b.class_id + 1) / channels));
      for (int i = fp.row0; i < fp.row1; ++i)
        for (int j = fp.col0; j < fp.col1; ++j)
          views[static_cast<std::size_t>(fp.view)].at(c, i, j) += amp;
    }
  }
  return views;
}

Sequence simulate_sequence(const SceneConfig& cfg, std::uint64_t seed) {
  if (cfg.T < 1) throw ArgumentError("simulate_sequence: T < 1");
  Rng pick(derive_seed(seed, "objects"));
  const int n_objects =
      cfg.objects_min +
      static_cast<int>(pick.below(static_cast<std::uint64_t>(cfg.objects_max - cfg.objects_min + 1)));
  return simulate_sequence(seed, cfg.T, n_objects, cfg);
}

Sequence simulate_sequence(std::uint64_t seed, int T, int n_objects,
                           const SceneConfig& cfg) {
  if (T < 1) throw ArgumentError("simulate_sequence: T < 1");
  std::vector<Box3D> boxes =
      generate_scene(derive_seed(seed, "scene"), n_objects, cfg.extent, cfg.n_classes);
  if (cfg.static_objects) {
    for (Box3D& b : boxes) {
      b.vx = 0.0;
      b.vy = 0.0;
    }
  }

  Sequence seq;
  seq.frames.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    Frame f;
    f.t = t;
    f.gt_boxes = boxes;
    for (Box3D& b : f.gt_boxes) {
      b.x += b.vx * cfg.dt * t;
      b.y += b.vy * cfg.dt * t;
    }
    f.cloud = sample_lidar(f.gt_boxes, cfg.n_points, cfg.noise_sigma,
                           derive_seed(seed, "lidar/t=" + std::to_string(t)),
                           cfg.extent / 2.0);
    f.views = render_views(f.gt_boxes, cfg.geom, cfg.view_channels,
                           derive_seed(seed, "views/t=" + std::to_string(t)),
                           cfg.view_noise);
    seq.frames.push_back(std::move(f));
    seq.ego_motion.push_back({0.0, 0.0, 0.0});
  }
  return seq;
}

}  // namespace relifusion::scene
