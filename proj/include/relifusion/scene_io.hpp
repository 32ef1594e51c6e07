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

#ifndef RELIFUSION_SCENE_IO_HPP
#define RELIFUSION_SCENE_IO_HPP

#include <string>
#include <vector>

#include "relifusion/scene.hpp"

namespace relifusion::scene {

// Line-oriented text: "class x y z w l h yaw vx vy" per box, printed with
// enough digits to round-trip doubles exactly.
void save_boxes(const std::string& path, const std::vector<Box3D>& boxes);
std::vector<Box3D> load_boxes(const std::string& path);

std::string boxes_to_string(const std::vector<Box3D>& boxes);
std::vector<Box3D> boxes_from_string(const std::string& text);

// Little-endian binary: magic "RFPC", u32 count, then N x 4 float32
// (x, y, z, intensity).
void save_cloud(const std::string& path, const PointCloud& cloud);
PointCloud load_cloud(const std::string& path);

}  // namespace relifusion::scene

#endif  // RELIFUSION_SCENE_IO_HPP
