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

#ifndef RELIFUSION_CORRUPTION_HPP
#define RELIFUSION_CORRUPTION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "relifusion/scene.hpp"

namespace relifusion::corrupt {

enum class Kind {
  none,
  limited_fov,
  object_drop,
  camera_missing_front,
  camera_preserve_front_only,
  object_occlusion,
};

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

// One malfunction scenario: kind + parameters + seed. severity() derives the
// fraction of signal removed, which supervises the confidence loss.
struct CorruptionSpec {
  std::string name = "clean";
  Kind kind = Kind::none;
  double theta_min = 0.0;  // limited_fov
  double theta_max = 0.0;
  double rate = 0.0;  // object_drop / object_occlusion
  std::uint64_t seed = 0;

  double severity() const;
  bool affects_lidar() const;
  bool affects_camera() const;
};

// Keeps points whose azimuth lies in [theta_min, theta_max]; a degenerate
// interval (theta_min == theta_max) reads as total loss and empties the
// cloud. Order preserved.
scene::PointCloud limit_fov(const scene::PointCloud& cloud, double theta_min,
                            double theta_max);

// Removes exactly floor(rate * n_box) interior points per box via a seeded
// shuffle; points outside every box are untouched. bernoulli=true switches
// to an independent per-point coin instead of the exact count.
scene::PointCloud drop_object_points(const scene::PointCloud& cloud,
                                     const std::vector<scene::Box3D>& boxes,
                                     double rate, std::uint64_t seed,
                                     bool bernoulli = false);

enum class CameraFailure { missing_front, preserve_front_only };

// Zeroes the front view (index 0), or everything but the front view.
std::vector<ad::Tensor> camera_failure(const std::vector<ad::Tensor>& views,
                                       CameraFailure mode);

// Zeroes exactly floor(rate * n_cells) cells of each projected box footprint
// (all channels), per view, via a seeded shuffle.
std::vector<ad::Tensor> occlude_objects(const std::vector<ad::Tensor>& views,
                                        const std::vector<scene::Box3D>& boxes,
                                        const scene::ViewGeometry& geom,
                                        double rate, std::uint64_t seed);

// Applies the spec to one frame; seed overrides spec.seed when >= 0 so sweeps
// can decorrelate scenes.
scene::Frame apply(const CorruptionSpec& spec, const scene::Frame& frame,
                   const scene::ViewGeometry& geom, std::int64_t seed_override = -1);
scene::Sequence apply(const CorruptionSpec& spec, const scene::Sequence& seq,
                      const scene::ViewGeometry& geom, std::uint64_t seed_base);

struct ScenarioTable {
  std::vector<CorruptionSpec> entries;
};

// clean + the seven benchmark scenarios with their standard parameters.
ScenarioTable standard_scenarios();

// Human-editable text: one entry per line of key=value tokens.
std::string scenario_table_to_string(const ScenarioTable& table);
ScenarioTable scenario_table_from_string(const std::string& text);
void save_scenarios(const std::string& path, const ScenarioTable& table);
ScenarioTable load_scenarios(const std::string& path);

}  // namespace relifusion::corrupt

#endif  // RELIFUSION_CORRUPTION_HPP
