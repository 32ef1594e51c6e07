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

#ifndef RELIFUSION_BEV_HPP
#define RELIFUSION_BEV_HPP

#include <string>
#include <vector>

#include "relifusion/scene.hpp"
#include "relifusion/tensor.hpp"

namespace relifusion::bev {

// Metric ground-plane grid. Cell (i, j) covers
//   x in [x0 + j*dx, x0 + (j+1)*dx), y in [y0 + i*dy, y0 + (i+1)*dy).
struct GridConfig {
  int h = 32;
  int w = 32;
  double x0 = -12.0;
  double y0 = -12.0;
  double dx = 0.75;
  double dy = 0.75;
  std::vector<double> z_edges = {-0.5, 0.0, 0.5, 1.5, 3.5};

  int z_bins() const { return static_cast<int>(z_edges.size()) - 1; }
  int channels() const { return z_bins() + 1; }  // counts per bin + intensity
  void validate() const;
  // -1 when (x, y) falls outside the window
  int cell_index(double x, double y) const;
  double cell_center_x(int j) const { return x0 + (j + 0.5) * dx; }
  double cell_center_y(int i) const { return y0 + (i + 0.5) * dy; }

  static GridConfig desk_default() { return GridConfig{}; }
  // square window of extent meters with the given cell count per side
  static GridConfig square(int cells, double extent, std::vector<double> z_edges);
};

struct BevGrid {
  ad::Tensor features;  // [C, H, W]
  GridConfig cfg;
};

// Per-cell channels: log1p point count per z bin, then mean intensity.
// Points outside the window or the z range are dropped. Output is constant
// (no gradient path into raw points).
BevGrid voxelize(const scene::PointCloud& cloud, const GridConfig& cfg);

// Simplified lift-splat: each view column's (row-summed) feature vector is
// spread along its ray over softmax(depth_logits[col]) and accumulated into
// BEV cells. Differentiable w.r.t. depth_logits (and anything upstream of
// them); bins that leave the window drop their mass.
BevGrid lift_splat(const std::vector<ad::Tensor>& views,
                   const scene::ViewGeometry& geom,
                   const ad::Tensor& depth_logits,  // [W_v, depth_bins]
                   const GridConfig& cfg, ad::Tape* tape = nullptr);

// Ray target cell for (view, column, bin); exposed for tests.
int splat_target_cell(const scene::ViewGeometry& geom, const GridConfig& cfg,
                      int view, int col, int bin, int depth_bins);

// One CSV per channel: "<prefix>_c<channel>.csv", H lines of W values.
void dump_bev_csv(const BevGrid& grid, const std::string& prefix);

}  // namespace relifusion::bev

#endif  // RELIFUSION_BEV_HPP
