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

#include "relifusion/corruption.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "relifusion/errors.hpp"

namespace relifusion::corrupt {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::none: return "none";
    case Kind::limited_fov: return "limited_fov";
    case Kind::object_drop: return "object_drop";
    case Kind::camera_missing_front: return "camera_missing_front";
    case Kind::camera_preserve_front_only: return "camera_preserve_front_only";
    case Kind::object_occlusion: return "object_occlusion";
  }
  return "?";
}

Kind kind_from_name(const std::string& name) {
  for (Kind k : {Kind::none, Kind::limited_fov, Kind::object_drop,
                 Kind::camera_missing_front, Kind::camera_preserve_front_only,
                 Kind::object_occlusion}) {
    if (name == kind_name(k)) return k;
  }
  throw ConfigError("unknown corruption kind: " + name);
}

double CorruptionSpec::severity() const {
  switch (kind) {
    case Kind::none:
      return 0.0;
    case Kind::limited_fov: {
      const double kept = (theta_max - theta_min) / kTwoPi;
      return std::clamp(1.0 - kept, 0.0, 1.0);
    }
    case Kind::object_drop:
    case Kind::object_occlusion:
      return rate;
    case Kind::camera_missing_front:
      return 1.0 / 6.0;
    case Kind::camera_preserve_front_only:
      return 5.0 / 6.0;
  }
  return 0.0;
}

bool CorruptionSpec::affects_lidar() const {
  return kind == Kind::limited_fov || kind == Kind::object_drop;
}

bool CorruptionSpec::affects_camera() const {
  return kind == Kind::camera_missing_front ||
         kind == Kind::camera_preserve_front_only ||
         kind == Kind::object_occlusion;
}

scene::PointCloud limit_fov(const scene::PointCloud& cloud, double theta_min,
                            double theta_max) {
  if (theta_min > theta_max) throw ArgumentError("limit_fov: theta_min > theta_max");
  if (theta_min < -kPi - 1e-12 || theta_max > kPi + 1e-12) {
    throw ArgumentError("limit_fov: angles must lie in [-pi, pi]");
  }
  scene::PointCloud out;
  // degenerate interval reads as total loss
  if (theta_min == theta_max) return out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double az = std::atan2(cloud.ys[i], cloud.xs[i]);
    if (az >= theta_min && az <= theta_max) {
      out.push(cloud.xs[i], cloud.ys[i], cloud.zs[i], cloud.intensity[i],
               cloud.box_tag[i]);
    }
  }
  return out;
}

scene::PointCloud drop_object_points(const scene::PointCloud& cloud,
                                     const std::vector<scene::Box3D>& boxes,
                                     double rate, std::uint64_t seed,
                                     bool bernoulli) {
  if (rate < 0.0 || rate > 1.0) throw ArgumentError("drop_object_points: rate outside [0,1]");
  std::vector<bool> drop(cloud.size(), false);
  Rng rng(seed);
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    std::vector<std::size_t> inside;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (cloud.box_tag[i] == static_cast<int>(b)) inside.push_back(i);
    }
    if (bernoulli) {
      for (std::size_t i : inside) {
        if (rng.uniform01() < rate) drop[i] = true;
      }
    } else {
      const std::size_t n_drop =
          static_cast<std::size_t>(std::floor(rate * static_cast<double>(inside.size())));
      rng.shuffle(inside);
      for (std::size_t i = 0; i < n_drop; ++i) drop[inside[i]] = true;
    }
  }
  scene::PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!drop[i]) {
      out.push(cloud.xs[i], cloud.ys[i], cloud.zs[i], cloud.intensity[i],
               cloud.box_tag[i]);
    }
  }
  return out;
}

std::vector<ad::Tensor> camera_failure(const std::vector<ad::Tensor>& views,
                                       CameraFailure mode) {
  std::vector<ad::Tensor> out = views;
  for (std::size_t k = 0; k < out.size(); ++k) {
    const bool zero_it = (mode == CameraFailure::missing_front) ? (k == 0) : (k != 0);
    if (zero_it) out[k] = ad::Tensor::zeros(out[k].shape);
  }
  return out;
}

std::vector<ad::Tensor> occlude_objects(const std::vector<ad::Tensor>& views,
                                        const std::vector<scene::Box3D>& boxes,
                                        const scene::ViewGeometry& geom,
                                        double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw ArgumentError("occlude_objects: rate outside [0,1]");
  std::vector<ad::Tensor> out = views;
  Rng rng(seed);
  for (const scene::Box3D& b : boxes) {
    const scene::Footprint fp = scene::view_footprint(b, geom);
    if (fp.empty()) continue;
    std::vector<std::pair<int, int>> cells;
    for (int i = fp.row0; i < fp.row1; ++i)
      for (int j = fp.col0; j < fp.col1; ++j) cells.push_back({i, j});
    const std::size_t n_zero =
        static_cast<std::size_t>(std::floor(rate * static_cast<double>(cells.size())));
    rng.shuffle(cells);
    ad::Tensor& view = out[static_cast<std::size_t>(fp.view)];
    for (std::size_t c = 0; c < n_zero; ++c) {
      for (int ch = 0; ch < view.shape[0]; ++ch) {
        view.at(ch, cells[c].first, cells[c].second) = 0.0;
      }
    }
  }
  return out;
}

scene::Frame apply(const CorruptionSpec& spec, const scene::Frame& frame,
                   const scene::ViewGeometry& geom, std::int64_t seed_override) {
  const std::uint64_t seed =
      seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : spec.seed;
  scene::Frame out = frame;
  switch (spec.kind) {
    case Kind::none:
      break;
    case Kind::limited_fov:
      out.cloud = limit_fov(frame.cloud, spec.theta_min, spec.theta_max);
      break;
    case Kind::object_drop:
      out.cloud = drop_object_points(frame.cloud, frame.gt_boxes, spec.rate, seed);
      break;
    case Kind::camera_missing_front:
      out.views = camera_failure(frame.views, CameraFailure::missing_front);
      break;
    case Kind::camera_preserve_front_only:
      out.views = camera_failure(frame.views, CameraFailure::preserve_front_only);
      break;
    case Kind::object_occlusion:
      out.views = occlude_objects(frame.views, frame.gt_boxes, geom, spec.rate, seed);
      break;
  }
  return out;
}

scene::Sequence apply(const CorruptionSpec& spec, const scene::Sequence& seq,
                      const scene::ViewGeometry& geom, std::uint64_t seed_base) {
  scene::Sequence out = seq;
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    const std::uint64_t seed =
        derive_seed(seed_base, "corrupt/t=" + std::to_string(t));
    out.frames[t] = apply(spec, seq.frames[t], geom, static_cast<std::int64_t>(seed));
  }
  return out;
}

ScenarioTable standard_scenarios() {
  ScenarioTable t;
  CorruptionSpec clean;
  clean.name = "clean";
  t.entries.push_back(clean);

  CorruptionSpec fov_half;
  fov_half.name = "fov_half";
  fov_half.kind = Kind::limited_fov;
  fov_half.theta_min = -kPi / 2.0;
  fov_half.theta_max = kPi / 2.0;
  t.entries.push_back(fov_half);

  CorruptionSpec fov_third = fov_half;
  fov_third.name = "fov_third";
  fov_third.theta_min = -kPi / 3.0;
  fov_third.theta_max = kPi / 3.0;
  t.entries.push_back(fov_third);

  CorruptionSpec fov_zero = fov_half;
  fov_zero.name = "fov_zero";
  fov_zero.theta_min = 0.0;
  fov_zero.theta_max = 0.0;
  t.entries.push_back(fov_zero);

  CorruptionSpec drop;
  drop.name = "drop_half";
  drop.kind = Kind::object_drop;
  drop.rate = 0.5;
  drop.seed = 11;
  t.entries.push_back(drop);

  CorruptionSpec missing;
  missing.name = "missing_front";
  missing.kind = Kind::camera_missing_front;
  t.entries.push_back(missing);

  CorruptionSpec preserve;
  preserve.name = "preserve_front";
  preserve.kind = Kind::camera_preserve_front_only;
  t.entries.push_back(preserve);

  CorruptionSpec occl;
  occl.name = "occlusion_half";
  occl.kind = Kind::object_occlusion;
  occl.rate = 0.5;
  occl.seed = 12;
  t.entries.push_back(occl);
  return t;
}

std::string scenario_table_to_string(const ScenarioTable& table) {
  std::ostringstream os;
  os << "# name kind [theta_min theta_max | rate] seed\n";
  for (const CorruptionSpec& s : table.entries) {
    os << "name=" << s.name << " kind=" << kind_name(s.kind);
    if (s.kind == Kind::limited_fov) {
      char buf[80];
      std::snprintf(buf, sizeof(buf), " theta_min=%.17g theta_max=%.17g",
                    s.theta_min, s.theta_max);
      os << buf;
    }
    if (s.kind == Kind::object_drop || s.kind == Kind::object_occlusion) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), " rate=%.17g", s.rate);
      os << buf;
    }
    os << " seed=" << s.seed << "\n";
  }
  return os.str();
}

ScenarioTable scenario_table_from_string(const std::string& text) {
  ScenarioTable table;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    CorruptionSpec spec;
    bool have_name = false, have_kind = false;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("scenario line " + std::to_string(lineno) +
                          ": expected key=value, got '" + tok + "'");
      }
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "name") {
        spec.name = val;
        have_name = true;
      } else if (key == "kind") {
        spec.kind = kind_from_name(val);
        have_kind = true;
      } else if (key == "theta_min") {
        spec.theta_min = std::stod(val);
      } else if (key == "theta_max") {
        spec.theta_max = std::stod(val);
      } else if (key == "rate") {
        spec.rate = std::stod(val);
      } else if (key == "seed") {
        spec.seed = std::stoull(val);
      } else {
        throw ConfigError("scenario line " + std::to_string(lineno) +
                          ": unknown key '" + key + "'");
      }
    }
    if (!have_name || !have_kind) {
      throw ConfigError("scenario line " + std::to_string(lineno) +
                        ": name and kind are required");
    }
    for (const CorruptionSpec& prev : table.entries) {
      if (prev.name == spec.name) {
        throw ConfigError("duplicate scenario name: " + spec.name);
      }
    }
    table.entries.push_back(spec);
  }
  return table;
}

void save_scenarios(const std::string& path, const ScenarioTable& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f << scenario_table_to_string(table);
}

ScenarioTable load_scenarios(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return scenario_table_from_string(ss.str());
}

}  // namespace relifusion::corrupt
