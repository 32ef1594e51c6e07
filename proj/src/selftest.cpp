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

#include <cmath>
#include <ostream>

#include "relifusion/cli.hpp"
#include "relifusion/losses.hpp"
#include "relifusion/pipeline.hpp"
#include "relifusion/reliability.hpp"
#include "relifusion/train.hpp"

namespace relifusion::cli {

using ad::Tensor;

SelftestCase gradient_case(const std::string& name, const ad::ScalarFn& fn,
                           const std::vector<Tensor>& point, double tol,
                           double step) {
  SelftestCase c;
  c.name = name;
  c.tol = tol;
  c.max_err = ad::grad_check(fn, point, step).max_rel_err;
  c.pass = c.max_err < tol;
  return c;
}

namespace {

SelftestCase value_case(const std::string& name, double err, double tol) {
  SelftestCase c;
  c.name = name;
  c.max_err = std::fabs(err);
  c.tol = tol;
  c.pass = c.max_err <= tol;
  return c;
}

void primitive_cases(std::vector<SelftestCase>& out) {
  Rng rng(20260809);
  const Tensor a = Tensor::randn({3, 4}, rng, 1.0);
  const Tensor b = Tensor::randn({3, 4}, rng, 1.0);
  const Tensor m = Tensor::randn({4, 3}, rng, 1.0);
  const Tensor vec = Tensor::randn({4}, rng, 1.0);
  const Tensor vec2 = Tensor::randn({4}, rng, 1.0);

  auto weigh = [](const Tensor& t, ad::Tape* tp) {
    Tensor w = Tensor::zeros(t.shape);
    for (int i = 0; i < w.size(); ++i) w.v[static_cast<std::size_t>(i)] = 0.3 + 0.1 * i;
    return ad::sum(ad::mul(t, w, tp), tp);
  };

  struct Item {
    const char* name;
    ad::ScalarFn fn;
    std::vector<Tensor> point;
    double tol;
  };
  const Tensor pos_input = ad::add_scalar(ad::mul(a, a), 0.5);
  std::vector<Item> items = {
      {"grad/matmul", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::matmul(l[0], l[1], tp), tp); }, {a, m}, 1e-6},
      {"grad/add", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::add(l[0], l[1], tp), tp); }, {a, b}, 1e-8},
      {"grad/sub", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::sub(l[0], l[1], tp), tp); }, {a, b}, 1e-8},
      {"grad/mul", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::mul(l[0], l[1], tp), tp); }, {a, b}, 1e-6},
      {"grad/scale", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::scale(l[0], l[1], tp), tp); }, {a, Tensor::scalar(0.7)}, 1e-6},
      {"grad/transpose", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::transpose(l[0], tp), tp); }, {a}, 1e-8},
      {"grad/reshape", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::reshape(l[0], {4, 3}, tp), tp); }, {a}, 1e-8},
      {"grad/concat_rows", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::concat_rows({l[0], l[1]}, tp), tp); }, {a, b}, 1e-8},
      {"grad/concat_cols", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::concat_cols(l[0], l[1], tp), tp); }, {a, b}, 1e-8},
      {"grad/slice_rows", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::slice_rows(l[0], 1, 3, tp), tp); }, {a}, 1e-8},
      {"grad/slice_cols", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::slice_cols(l[0], 1, 3, tp), tp); }, {a}, 1e-8},
      {"grad/add_rowvec", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::add_rowvec(l[0], l[1], tp), tp); }, {a, vec}, 1e-8},
      {"grad/dot", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return ad::dot(l[0], l[1], tp); }, {vec, vec2}, 1e-7},
      {"grad/sum", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return ad::sum(l[0], tp); }, {a}, 1e-8},
      {"grad/mean", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return ad::mean(l[0], tp); }, {a}, 1e-8},
      {"grad/row_sum", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::row_sum(l[0], tp), tp); }, {a}, 1e-8},
      {"grad/row_mean", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::row_mean(l[0], tp), tp); }, {a}, 1e-8},
      {"grad/softmax_rows", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::softmax_rows(l[0], tp), tp); }, {a}, 1e-6},
      {"grad/logsumexp_rows", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::logsumexp_rows(l[0], tp), tp); }, {a}, 1e-6},
      {"grad/layer_norm", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::layer_norm(l[0], l[1], l[2], 1e-5, tp), tp); }, {vec, vec2, Tensor::randn({4}, rng, 1.0)}, 1e-5},
      {"grad/gelu", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::gelu(l[0], tp), tp); }, {a}, 1e-6},
      {"grad/sigmoid", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::sigmoid(l[0], tp), tp); }, {a}, 1e-6},
      {"grad/exp", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::exp_(l[0], tp), tp); }, {a}, 1e-6},
      {"grad/log", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::log_(l[0], tp), tp); }, {pos_input}, 1e-6},
      {"grad/abs", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::abs_(l[0], tp), tp); }, {a}, 1e-6},
      {"grad/l2_normalize", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::l2_normalize(l[0], tp), tp); }, {vec}, 1e-6},
      {"grad/cosine_sim", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return ad::cosine_sim(l[0], l[1], tp); }, {vec, vec2}, 1e-6},
      {"grad/neighborhood3x3", [&](const std::vector<Tensor>& l, ad::Tape* tp) { return weigh(ad::neighborhood3x3(l[0], tp), tp); }, {Tensor::randn({2, 3, 3}, rng, 1.0)}, 1e-8},
      {"grad/mlp_forward", [&](const std::vector<Tensor>& l, ad::Tape* tp) {
         std::vector<ad::LinearLayer> net = {{l[1], l[2]}, {l[3], l[4]}};
         return weigh(ad::mlp_forward(l[0], net, tp), tp);
       },
       {vec, Tensor::randn({4, 6}, rng, 0.5), Tensor::randn({6}, rng, 0.5),
        Tensor::randn({6, 3}, rng, 0.5), Tensor::randn({3}, rng, 0.5)}, 1e-6},
  };
  for (Item& it : items) out.push_back(gradient_case(it.name, it.fn, it.point, it.tol));

  // lift_splat through the depth distribution
  {
    scene::ViewGeometry geom;
    geom.height = 3;
    geom.width = 5;
    geom.r_min = 1.0;
    geom.r_max = 8.0;
    bev::GridConfig grid = bev::GridConfig::square(12, 24.0, {-0.5, 0.5, 1.5});
    auto boxes = scene::generate_scene(5, 2, 14.0, 3);
    auto views = scene::render_views(boxes, geom, 3, 7, 0.05);
    Tensor logits = Tensor::randn({5, 4}, rng, 0.5);
    auto fn = [views, geom, grid](const std::vector<Tensor>& l, ad::Tape* tp) {
      bev::BevGrid g = bev::lift_splat(views, geom, l[0], grid, tp);
      Tensor w = Tensor::zeros(g.features.shape);
      for (int i = 0; i < w.size(); ++i) w.v[static_cast<std::size_t>(i)] = 0.01 * (i % 7) - 0.02;
      return ad::sum(ad::mul(g.features, w, tp), tp);
    };
    out.push_back(gradient_case("grad/lift_splat", fn, {logits}, 1e-6));
  }
}

void corner_cases(std::vector<SelftestCase>& out) {
  // contrastive corners
  {
    Tensor z1 = Tensor::zeros({1, 3});
    z1.at(0, 0) = 1.0;
    out.push_back(value_case("corner/contrastive_k1",
                             rel::contrastive_loss(z1, z1, 0.07).item(), 1e-9));
    Tensor z4 = Tensor::zeros({4, 3});
    for (int i = 0; i < 4; ++i) z4.at(i, 0) = 1.0;
    out.push_back(value_case(
        "corner/contrastive_uniform_ln4",
        rel::contrastive_loss(z4, z4, 0.07).item() - std::log(4.0), 1e-9));
  }
  out.push_back(value_case("corner/sigmoid_zero",
                           ad::sigmoid(Tensor::scalar(0.0)).item() - 0.5, 1e-15));
  {
    auto s = [](double v) { return Tensor::scalar(v); };
    out.push_back(value_case(
        "corner/total_loss_lambda",
        train::total_loss(s(1), s(1), s(1), s(1)).item() - 1.35, 1e-12));
  }
  {
    Rng rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int c = 2 + static_cast<int>(rng.below(7));
      const double mag = (trial % 4 == 0) ? 1e3 : 1.0;
      Tensor row = Tensor::randn({c}, rng, mag);
      Tensor s = ad::softmax_rows(row);
      double acc = 0.0;
      for (double v : s.v) acc += v;
      worst = std::max(worst, std::fabs(acc - 1.0));
    }
    out.push_back(value_case("corner/softmax_row_sums_1000", worst, 1e-9));
  }
  {
    // fusion confidence algebra, exact
    fusion::FusionConfig fc;
    fc.channels = 3;
    fc.d_k = 4;
    fc.grid_h = fc.grid_w = 3;
    Rng rng(11);
    fusion::FusionParams p = fusion::FusionParams::init(fc, rng);
    bev::GridConfig gc = bev::GridConfig::square(3, 24.0, {-0.5, 0.5});
    bev::BevGrid fl{Tensor::randn({3, 3, 3}, rng, 1.0), gc};
    bev::BevGrid fcam{Tensor::randn({3, 3, 3}, rng, 1.0), gc};
    const Tensor zero = Tensor::scalar(0.0);
    const Tensor cl = Tensor::scalar(0.7);
    bev::BevGrid l2c =
        fusion::cross_attend(fcam, fl, cl, p, fusion::Direction::lidar_to_camera);
    bev::BevGrid fused =
        fusion::baseline_fusions(fl, fcam, fusion::Mode::cw_mca, p, cl, zero);
    double worst = 0.0;
    for (int i = 0; i < fused.features.size(); ++i) {
      worst = std::max(worst, std::fabs(fused.features.v[static_cast<std::size_t>(i)] -
                                        l2c.features.v[static_cast<std::size_t>(i)]));
    }
    out.push_back(value_case("corner/fusion_conf_zero_algebra", worst, 0.0));
  }
}

}  // namespace

// The tiny-pipeline fixture used by the release gate: full multi-task loss
// through every module at grid 8x8, d=8, T=2, batch 2.
static SelftestCase pipeline_case() {
  pipeline::ModelConfig mc;
  mc.grid = bev::GridConfig::square(8, 24.0, {-0.5, 0.5, 1.5, 3.0});
  mc.view_geom.height = 4;
  mc.view_geom.width = 6;
  mc.view_geom.r_min = 1.0;
  mc.view_geom.r_max = 10.0;
  mc.stfa.d = 8;
  mc.stfa.T = 2;
  mc.rel.hidden = 16;
  mc.rel.embed_dim = 8;
  mc.fus.d_k = 8;
  mc.head.hidden = 8;
  mc.depth_bins = 4;
  mc.n_classes = 2;
  mc.finalize();

  scene::SceneConfig sc;
  sc.extent = 24.0;
  sc.n_classes = 2;
  sc.n_points = 200;
  sc.view_channels = mc.channels();
  sc.geom = mc.view_geom;
  sc.T = 2;
  sc.dt = 1.0;
  sc.view_noise = 0.15;
  std::vector<scene::Sequence> scenes;
  scenes.push_back(scene::simulate_sequence(101, 2, 2, sc));
  scenes.push_back(scene::simulate_sequence(102, 2, 3, sc));

  pipeline::Model m0 = pipeline::Model::init(mc, 5);
  // condition the check point: every nonzero gradient component must sit
  // above the finite-difference noise floor of a 1e-5 central step, which
  // needs distinct timesteps and a live temporal-attention -> modulation path
  for (double& v : m0.stfa_p.p_t.v) v *= 25.0;
  for (double& v : m0.stfa_p.wq_t.v) v *= 3.0;
  for (double& v : m0.stfa_p.wk_t.v) v *= 3.0;
  {
    Rng mod_rng(99);
    m0.w_mod = Tensor::randn(m0.w_mod.shape, mod_rng, 0.3);
  }
  std::vector<Tensor> leaves;
  m0.for_each_param([&](const char*, Tensor& t) { leaves.push_back(t); });

  auto fn = [m0, scenes](const std::vector<Tensor>& ls, ad::Tape* tp) {
    pipeline::Model m = m0;
    std::size_t i = 0;
    m.for_each_param([&](const char*, Tensor& t) { t = ls[i++]; });
    Tensor l_det = Tensor::scalar(0.0);
    Tensor l_temp = Tensor::scalar(0.0);
    std::vector<Tensor> zl_rows, zc_rows, scores;
    std::vector<double> targets;
    for (const scene::Sequence& seq : scenes) {
      pipeline::PipelineOut out = pipeline::run_pipeline(m, seq, tp);
      fusion::HeadTargets ht = fusion::encode_targets(seq.frames.back().gt_boxes,
                                                      m.cfg.grid, m.cfg.n_classes);
      l_det = ad::add(l_det, train::detection_loss(out.head, ht, tp), tp);
      l_temp = ad::add(l_temp, train::temporal_loss(out.s_cache, tp), tp);
      zl_rows.push_back(ad::reshape(out.z_lidar, {1, m.cfg.rel.embed_dim}, tp));
      zc_rows.push_back(ad::reshape(out.z_camera, {1, m.cfg.rel.embed_dim}, tp));
      scores.push_back(out.c_lidar);
      targets.push_back(1.0);
      scores.push_back(out.c_camera);
      targets.push_back(1.0);
    }
    l_det = ad::mul_scalar(l_det, 0.5, tp);
    l_temp = ad::mul_scalar(l_temp, 0.5, tp);
    Tensor l_con = rel::contrastive_loss(ad::concat_rows(zl_rows, tp),
                                         ad::concat_rows(zc_rows, tp),
                                         m.cfg.rel.tau, tp);
    Tensor l_conf = train::confidence_loss(scores, targets, tp);
    return train::total_loss(l_det, l_con, l_temp, l_conf, tp);
  };
  return gradient_case("grad/pipeline_eq16", fn, leaves, 1e-4);
}

std::vector<SelftestCase> run_selftest() {
  std::vector<SelftestCase> cases;
  primitive_cases(cases);
  corner_cases(cases);
  cases.push_back(pipeline_case());
  return cases;
}

bool selftest_report(std::ostream& os, const std::vector<SelftestCase>& cases) {
  bool all = true;
  for (const SelftestCase& c : cases) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-34s max_err %.3e  tol %.1e  %s\n",
                  c.name.c_str(), c.max_err, c.tol, c.pass ? "PASS" : "FAIL");
    os << buf;
    all = all && c.pass;
  }
  return all;
}

}  // namespace relifusion::cli
