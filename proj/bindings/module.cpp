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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "relifusion/cli.hpp"
#include "relifusion/corruption.hpp"
#include "relifusion/metrics.hpp"
#include "relifusion/reliability.hpp"
#include "relifusion/scene.hpp"

namespace py = pybind11;
using namespace relifusion;

namespace {

ad::Tensor tensor_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<int> shape;
  for (py::ssize_t d = 0; d < a.ndim(); ++d) shape.push_back(static_cast<int>(a.shape(d)));
  std::vector<double> values(a.data(), a.data() + a.size());
  return ad::Tensor(std::move(shape), std::move(values));
}

py::array_t<double> array_from(const ad::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<double> out(shape);
  std::copy(t.v.begin(), t.v.end(), out.mutable_data());
  return out;
}

std::vector<scene::Box3D> boxes_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 10) {
    throw ArgumentError("boxes: expected an [N x 10] array of "
                        "(class, x, y, z, w, l, h, yaw, vx, vy)");
  }
  std::vector<scene::Box3D> boxes;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const double* r = a.data() + i * 10;
    scene::Box3D b;
    b.class_id = static_cast<int>(r[0]);
    b.x = r[1];
    b.y = r[2];
    b.z = r[3];
    b.w = r[4];
    b.l = r[5];
    b.h = r[6];
    b.yaw = r[7];
    b.vx = r[8];
    b.vy = r[9];
    boxes.push_back(b);
  }
  return boxes;
}

py::array_t<double> boxes_to(const std::vector<scene::Box3D>& boxes) {
  py::array_t<double> out({static_cast<py::ssize_t>(boxes.size()), static_cast<py::ssize_t>(10)});
  double* p = out.mutable_data();
  for (const scene::Box3D& b : boxes) {
    *p++ = b.class_id;
    *p++ = b.x;
    *p++ = b.y;
    *p++ = b.z;
    *p++ = b.w;
    *p++ = b.l;
    *p++ = b.h;
    *p++ = b.yaw;
    *p++ = b.vx;
    *p++ = b.vy;
  }
  return out;
}

scene::PointCloud cloud_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 4) {
    throw ArgumentError("points: expected an [N x 4] array of (x, y, z, intensity)");
  }
  scene::PointCloud c;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    const double* r = a.data() + i * 4;
    c.push(r[0], r[1], r[2], r[3], -1);
  }
  return c;
}

py::array_t<double> cloud_to(const scene::PointCloud& c) {
  py::array_t<double> out({static_cast<py::ssize_t>(c.size()), static_cast<py::ssize_t>(4)});
  double* p = out.mutable_data();
  for (std::size_t i = 0; i < c.size(); ++i) {
    *p++ = c.xs[i];
    *p++ = c.ys[i];
    *p++ = c.zs[i];
    *p++ = c.intensity[i];
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Confidence-weighted lidar-camera BEV fusion: core operations";

  py::register_exception<Error>(m, "RelifusionError");

  // tensor ops
  m.def("softmax_rows", [](py::array_t<double, py::array::c_style | py::array::forcecast> x) {
    return array_from(ad::softmax_rows(tensor_from(x)));
  });
  m.def("sigmoid", [](py::array_t<double, py::array::c_style | py::array::forcecast> x) {
    return array_from(ad::sigmoid(tensor_from(x)));
  });
  m.def("gelu", [](py::array_t<double, py::array::c_style | py::array::forcecast> x) {
    return array_from(ad::gelu(tensor_from(x)));
  });
  m.def("layer_norm",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
           py::array_t<double, py::array::c_style | py::array::forcecast> gain,
           py::array_t<double, py::array::c_style | py::array::forcecast> bias, double eps) {
          return array_from(ad::layer_norm(tensor_from(x), tensor_from(gain), tensor_from(bias), eps));
        },
        py::arg("x"), py::arg("gain"), py::arg("bias"), py::arg("eps") = 1e-5);
  m.def("cosine_sim",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> u,
           py::array_t<double, py::array::c_style | py::array::forcecast> v) {
          return ad::cosine_sim(tensor_from(u), tensor_from(v)).item();
        });

  // scene synthesis
  m.def("generate_scene",
        [](std::uint64_t seed, int n_objects, double extent, int classes) {
          return boxes_to(scene::generate_scene(seed, n_objects, extent, classes));
        },
        py::arg("seed"), py::arg("n_objects"), py::arg("extent") = 20.0, py::arg("classes") = 3);
  m.def("sample_lidar",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> boxes, int n_points,
           double noise_sigma, std::uint64_t seed) {
          return cloud_to(scene::sample_lidar(boxes_from(boxes), n_points, noise_sigma, seed));
        },
        py::arg("boxes"), py::arg("n_points"), py::arg("noise_sigma") = 0.02, py::arg("seed") = 0);

  // BEV encoding
  m.def("voxelize",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> points, int cells,
           double extent, std::vector<double> z_edges) {
          bev::GridConfig cfg = bev::GridConfig::square(cells, extent, std::move(z_edges));
          return array_from(bev::voxelize(cloud_from(points), cfg).features);
        },
        py::arg("points"), py::arg("cells") = 16, py::arg("extent") = 20.0,
        py::arg("z_edges") = std::vector<double>{-0.5, 0.5, 1.5, 2.5, 3.5});

  // corruption protocols
  m.def("limit_fov",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> points, double theta_min,
           double theta_max) {
          return cloud_to(corrupt::limit_fov(cloud_from(points), theta_min, theta_max));
        });
  m.def("drop_object_points",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> points,
           py::array_t<double, py::array::c_style | py::array::forcecast> boxes, double rate,
           std::uint64_t seed) {
          scene::PointCloud c = cloud_from(points);
          auto bs = boxes_from(boxes);
          scene::tag_points(c, bs);
          return cloud_to(corrupt::drop_object_points(c, bs, rate, seed));
        },
        py::arg("points"), py::arg("boxes"), py::arg("rate") = 0.5, py::arg("seed") = 0);
  m.def("standard_scenarios", []() {
    py::list out;
    for (const corrupt::CorruptionSpec& s : corrupt::standard_scenarios().entries) {
      py::dict d;
      d["name"] = s.name;
      d["kind"] = corrupt::kind_name(s.kind);
      d["theta_min"] = s.theta_min;
      d["theta_max"] = s.theta_max;
      d["rate"] = s.rate;
      d["seed"] = s.seed;
      d["severity"] = s.severity();
      out.append(d);
    }
    return out;
  });

  // metrics
  m.def("bev_iou",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> a,
           py::array_t<double, py::array::c_style | py::array::forcecast> b) {
          auto ba = boxes_from(a), bb = boxes_from(b);
          if (ba.size() != 1 || bb.size() != 1) throw ArgumentError("bev_iou: pass a single box each");
          return train::bev_iou(ba[0], bb[0]);
        });
  m.def("average_precision",
        [](std::vector<double> scores,
           py::array_t<double, py::array::c_style | py::array::forcecast> det_boxes,
           py::array_t<double, py::array::c_style | py::array::forcecast> gt_boxes,
           double iou_threshold) {
          auto dets = boxes_from(det_boxes);
          if (dets.size() != scores.size()) throw ArgumentError("average_precision: score/box count mismatch");
          std::vector<fusion::Detection> ds;
          for (std::size_t i = 0; i < dets.size(); ++i) {
            fusion::Detection d;
            d.box = dets[i];
            d.class_id = dets[i].class_id;
            d.score = scores[i];
            ds.push_back(d);
          }
          return train::average_precision(ds, boxes_from(gt_boxes), iou_threshold);
        },
        py::arg("scores"), py::arg("detections"), py::arg("ground_truth"),
        py::arg("iou_threshold") = 0.5);

  // reliability
  m.def("contrastive_loss",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> z_lidar,
           py::array_t<double, py::array::c_style | py::array::forcecast> z_camera, double tau) {
          return rel::contrastive_loss(tensor_from(z_lidar), tensor_from(z_camera), tau).item();
        },
        py::arg("z_lidar"), py::arg("z_camera"), py::arg("tau") = 0.07);

  m.def("loss_weights", []() { return py::make_tuple(1.0, 0.1, 0.2, 0.05); });

  // release-gate checks (gradient oracles + closed-form corners)
  m.def("selftest", []() {
    py::list out;
    for (const cli::SelftestCase& c : cli::run_selftest()) {
      py::dict d;
      d["name"] = c.name;
      d["max_err"] = c.max_err;
      d["tol"] = c.tol;
      d["pass"] = c.pass;
      out.append(d);
    }
    return out;
  });
}
