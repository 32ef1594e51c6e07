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

#include "relifusion/bev.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "relifusion/errors.hpp"

namespace relifusion::bev {

void GridConfig::validate() const {
  if (h < 1 || w < 1) throw ConfigError("grid: h and w must be >= 1");
  if (dx <= 0.0 || dy <= 0.0) throw ConfigError("grid: cell sizes must be > 0");
  if (z_edges.size() < 2) throw ConfigError("grid: need at least one z bin");
  for (std::size_t i = 1; i < z_edges.size(); ++i) {
    if (!(z_edges[i] > z_edges[i - 1])) {
      throw ConfigError("grid: z_edges must be strictly increasing");
    }
  }
}

int GridConfig::cell_index(double x, double y) const {
  const int j = static_cast<int>(std::floor((x - x0) / dx));
  const int i = static_cast<int>(std::floor((y - y0) / dy));
  if (i < 0 || i >= h || j < 0 || j >= w) return -1;
  return i * w + j;
}

GridConfig GridConfig::square(int cells, double extent, std::vector<double> edges) {
  GridConfig cfg;
  cfg.h = cfg.w = cells;
  cfg.x0 = cfg.y0 = -extent / 2.0;
  cfg.dx = cfg.dy = extent / cells;
  cfg.z_edges = std::move(edges);
  cfg.validate();
  return cfg;
}

BevGrid voxelize(const scene::PointCloud& cloud, const GridConfig& cfg) {
  cfg.validate();
  const int C = cfg.channels(), H = cfg.h, W = cfg.w;
  const int nbins = cfg.z_bins();
  ad::Tensor feat = ad::Tensor::zeros({C, H, W});
  std::vector<double> inten_sum(static_cast<std::size_t>(H) * W, 0.0);
  std::vector<int> count(static_cast<std::size_t>(H) * W, 0);

  for (std::size_t p = 0; p < cloud.size(); ++p) {
    const int cell = cfg.cell_index(cloud.xs[p], cloud.ys[p]);
    if (cell < 0) continue;
    const double z = cloud.zs[p];
    int bin = -1;
    for (int b = 0; b < nbins; ++b) {
      if (z >= cfg.z_edges[static_cast<std::size_t>(b)] &&
          z < cfg.z_edges[static_cast<std::size_t>(b) + 1]) {
        bin = b;
        break;
      }
    }
    if (bin < 0) continue;
    feat.v[static_cast<std::size_t>(bin) * H * W + cell] += 1.0;
    inten_sum[static_cast<std::size_t>(cell)] += cloud.intensity[p];
    count[static_cast<std::size_t>(cell)] += 1;
  }

  for (int b = 0; b < nbins; ++b) {
    for (int cell = 0; cell < H * W; ++cell) {
      double& e = feat.v[static_cast<std::size_t>(b) * H * W + cell];
      e = std::log1p(e);
    }
  }
  for (int cell = 0; cell < H * W; ++cell) {
    if (count[static_cast<std::size_t>(cell)] > 0) {
      feat.v[static_cast<std::size_t>(nbins) * H * W + cell] =
          inten_sum[static_cast<std::size_t>(cell)] / count[static_cast<std::size_t>(cell)];
    }
  }
  return BevGrid{std::move(feat), cfg};
}

int splat_target_cell(const scene::ViewGeometry& geom, const GridConfig& cfg,
                      int view, int col, int bin, int depth_bins) {
  const double theta = geom.azimuth_of_column(view, col + 0.5);
  const double r = geom.r_min + (bin + 0.5) * (geom.r_max - geom.r_min) / depth_bins;
  return cfg.cell_index(r * std::cos(theta), r * std::sin(theta));
}

BevGrid lift_splat(const std::vector<ad::Tensor>& views,
                   const scene::ViewGeometry& geom,
                   const ad::Tensor& depth_logits, const GridConfig& cfg,
                   ad::Tape* tape) {
  cfg.validate();
  if (static_cast<int>(views.size()) != geom.n_views) {
    throw ConfigError("lift_splat: expected " + std::to_string(geom.n_views) +
                      " views, got " + std::to_string(views.size()));
  }
  for (const ad::Tensor& v : views) {
    if (v.rank() != 3 || v.shape[1] != geom.height || v.shape[2] != geom.width ||
        v.shape != views[0].shape) {
      throw ConfigError("lift_splat: view shape " + v.shape_str() +
                        " does not match geometry " + std::to_string(geom.height) +
                        "x" + std::to_string(geom.width));
    }
  }
  if (depth_logits.rank() != 2 || depth_logits.shape[0] != geom.width ||
      depth_logits.shape[1] < 1) {
    throw ConfigError("lift_splat: depth logits must be [view_width x bins], got " +
                      depth_logits.shape_str());
  }
  const int C = views[0].shape[0];
  const int Wv = geom.width, B = depth_logits.shape[1];
  const int HW = cfg.h * cfg.w;

  // row-summed column features per view (constant)
  std::vector<std::vector<double>> col_feat(views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    if (views[k].traced()) {
      throw ArgumentError("lift_splat: views are expected to be constants");
    }
    col_feat[k].assign(static_cast<std::size_t>(C) * Wv, 0.0);
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < geom.height; ++i)
        for (int w = 0; w < Wv; ++w)
          col_feat[k][static_cast<std::size_t>(c) * Wv + w] += views[k].at(c, i, w);
  }

  // ray targets per (view, col, bin)
  std::vector<int> target(static_cast<std::size_t>(geom.n_views) * Wv * B, -1);
  for (int k = 0; k < geom.n_views; ++k)
    for (int w = 0; w < Wv; ++w)
      for (int b = 0; b < B; ++b)
        target[(static_cast<std::size_t>(k) * Wv + w) * B + b] =
            splat_target_cell(geom, cfg, k, w, b, B);

  ad::Tensor dist = ad::softmax_rows(depth_logits, tape);

  ad::Tensor out = ad::Tensor::zeros({C, cfg.h, cfg.w});
  for (int k = 0; k < geom.n_views; ++k) {
    for (int w = 0; w < Wv; ++w) {
      for (int b = 0; b < B; ++b) {
        const int cell = target[(static_cast<std::size_t>(k) * Wv + w) * B + b];
        if (cell < 0) continue;
        const double mass = dist.at(w, b);
        for (int c = 0; c < C; ++c) {
          out.v[static_cast<std::size_t>(c) * HW + cell] +=
              mass * col_feat[static_cast<std::size_t>(k)][static_cast<std::size_t>(c) * Wv + w];
        }
      }
    }
  }
  ad::check_finite("lift_splat", out);

  if (tape && dist.traced()) {
    const int p = dist.node;
    const int n_views = geom.n_views;
    out.node = tape->record(C * HW, [=](const std::vector<double>& g, ad::Tape& t) {
      auto& gd = t.grad_buf(p, Wv * B);
      for (int k = 0; k < n_views; ++k) {
        for (int w = 0; w < Wv; ++w) {
          for (int b = 0; b < B; ++b) {
            const int cell = target[(static_cast<std::size_t>(k) * Wv + w) * B + b];
            if (cell < 0) continue;
            double acc = 0.0;
            for (int c = 0; c < C; ++c) {
              acc += col_feat[static_cast<std::size_t>(k)][static_cast<std::size_t>(c) * Wv + w] *
                     g[static_cast<std::size_t>(c) * HW + cell];
            }
            gd[static_cast<std::size_t>(w) * B + b] += acc;
          }
        }
      }
    });
  }
  return BevGrid{std::move(out), cfg};
}

void dump_bev_csv(const BevGrid& grid, const std::string& prefix) {
  const int C = grid.features.shape[0];
  for (int c = 0; c < C; ++c) {
    const std::string path = prefix + "_c" + std::to_string(c) + ".csv";
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    for (int i = 0; i < grid.cfg.h; ++i) {
      for (int j = 0; j < grid.cfg.w; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", grid.features.at(c, i, j));
        f << buf << (j + 1 < grid.cfg.w ? "," : "");
      }
      f << '\n';
    }
  }
}

}  // namespace relifusion::bev
