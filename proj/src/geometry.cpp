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

#include "relifusion/geometry.hpp"

#include <cmath>

#include "relifusion/errors.hpp"

namespace relifusion::geom {

double wrap_angle(double a) {
  const double two_pi = 6.283185307179586476925286766559;
  double r = std::fmod(a + 3.1415926535897932384626433832795, two_pi);
  if (r < 0.0) r += two_pi;
  return r - 3.1415926535897932384626433832795;
}

std::array<Vec2, 4> rect_corners(double cx, double cy, double w, double l, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double hl = l / 2.0, hw = w / 2.0;
  // local (x, y) corners, CCW
  const double lx[4] = {hl, -hl, -hl, hl};
  const double ly[4] = {hw, hw, -hw, -hw};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[static_cast<std::size_t>(i)] = {cx + c * lx[i] - s * ly[i],
                                        cy + s * lx[i] + c * ly[i]};
  }
  return out;
}

double polygon_area(const Polygon& p) {
  if (p.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % p.size()];
    acc += a.x * b.y - b.x * a.y;
  }
  return std::fabs(acc) / 2.0;
}

namespace {
double cross_side(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

Vec2 line_intersect(const Vec2& a, const Vec2& b, const Vec2& p, const Vec2& q) {
  const double a1 = b.y - a.y, b1 = a.x - b.x, c1 = a1 * a.x + b1 * a.y;
  const double a2 = q.y - p.y, b2 = p.x - q.x, c2 = a2 * p.x + b2 * p.y;
  const double det = a1 * b2 - a2 * b1;
  return {(b2 * c1 - b1 * c2) / det, (a1 * c2 - a2 * c1) / det};
}
}  // namespace

Polygon convex_clip(const Polygon& subject, const Polygon& clip) {
  // points within eps of a clip edge count as inside, so coincident edges
  // (identical boxes) never trigger intersections of near-parallel lines
  const double eps = 1e-9;
  Polygon out = subject;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2& ca = clip[e];
    const Vec2& cb = clip[(e + 1) % clip.size()];
    Polygon in;
    in.swap(out);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2& cur = in[i];
      const Vec2& prev = in[(i + in.size() - 1) % in.size()];
      const bool cur_in = cross_side(ca, cb, cur) >= -eps;
      const bool prev_in = cross_side(ca, cb, prev) >= -eps;
      if (cur_in) {
        if (!prev_in) out.push_back(line_intersect(ca, cb, prev, cur));
        out.push_back(cur);
      } else if (prev_in) {
        out.push_back(line_intersect(ca, cb, prev, cur));
      }
    }
  }
  return out;
}

double rect_iou(double ax, double ay, double aw, double al, double ayaw,
                double bx, double by, double bw, double bl, double byaw) {
  const double area_a = aw * al, area_b = bw * bl;
  if (area_a <= 0.0 || area_b <= 0.0) {
    throw ArgumentError("rect_iou: zero-area box");
  }
  const auto ca = rect_corners(ax, ay, aw, al, ayaw);
  const auto cb = rect_corners(bx, by, bw, bl, byaw);
  const Polygon pa(ca.begin(), ca.end());
  const Polygon pb(cb.begin(), cb.end());
  const double inter = polygon_area(convex_clip(pa, pb));
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool point_in_rect(double px, double py, double cx, double cy, double w,
                   double l, double yaw, double eps) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double dx = px - cx, dy = py - cy;
  const double local_x = c * dx + s * dy;
  const double local_y = -s * dx + c * dy;
  return std::fabs(local_x) <= l / 2.0 + eps && std::fabs(local_y) <= w / 2.0 + eps;
}

}  // namespace relifusion::geom
