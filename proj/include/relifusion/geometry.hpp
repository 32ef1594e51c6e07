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

#ifndef RELIFUSION_GEOMETRY_HPP
#define RELIFUSION_GEOMETRY_HPP

#include <array>
#include <vector>

namespace relifusion::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

using Polygon = std::vector<Vec2>;

// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

// Counter-clockwise ground-plane corners of a rotated rectangle. w spans the
// local y (lateral) axis, l the local x (heading) axis.
std::array<Vec2, 4> rect_corners(double cx, double cy, double w, double l, double yaw);

double polygon_area(const Polygon& p);

// Sutherland-Hodgman clip of a polygon against a convex clip polygon (CCW).
Polygon convex_clip(const Polygon& subject, const Polygon& clip);

// Intersection-over-union of two rotated rectangles in the ground plane.
// Throws ArgumentError on zero-area boxes.
double rect_iou(double ax, double ay, double aw, double al, double ayaw,
                double bx, double by, double bw, double bl, double byaw);

// Yaw-aware containment in the ground plane, boundary inclusive.
bool point_in_rect(double px, double py, double cx, double cy, double w,
                   double l, double yaw, double eps = 1e-9);

}  // namespace relifusion::geom

#endif  // RELIFUSION_GEOMETRY_HPP
