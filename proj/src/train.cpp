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

#include "relifusion/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "relifusion/optimizer.hpp"

namespace relifusion::train {

using ad::Tensor;
using pipeline::Model;
using pipeline::RunOpts;
using scene::Sequence;

std::vector<Sequence> build_dataset(const scene::SceneConfig& cfg, int n,
                                    std::uint64_t seed, const std::string& tag) {
  std::vector<Sequence> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(scene::simulate_sequence(
        cfg, derive_seed(seed, tag + "/scene=" + std::to_string(i))));
  }
  return out;
}

namespace {

// Stage 2 runs as two sub-phases: the lidar stream trains fusion + head with
// the camera branch zeroed, then the camera stream trains its feature
// extraction (depth logits) against the frozen head with the lidar branch
// zeroed. Training the shared head in both phases would let the second phase
// overwrite the first. STFA and the modulation keep their stage-1 weights;
// the pooled camera embedding is insensitive to depth redistribution (splat
// conserves mass), so the stage-1 confidence calibration survives stage 2.
bool stage_trains(int stage, bool camera_phase, const std::string& name) {
  const bool is_rel = name.rfind("rel/", 0) == 0;
  const bool is_fusion = name.rfind("fusion/", 0) == 0;
  const bool is_head = name.rfind("head/", 0) == 0;
  switch (stage) {
    case 1:
      return !is_fusion && !is_head;  // stfa + camera branch + reliability
    case 2:
      if (camera_phase) return name == "cam/depth_logits";
      return is_fusion || is_head;
    default:
      return true;
  }
}

Tensor stack_rows(const std::vector<Tensor>& vecs, ad::Tape* tape) {
  std::vector<Tensor> rows;
  rows.reserve(vecs.size());
  for (const Tensor& v : vecs) rows.push_back(ad::reshape(v, {1, v.size()}, tape));
  return rows.size() == 1 ? rows[0] : ad::concat_rows(rows, tape);
}

std::vector<corrupt::CorruptionSpec> corruption_menu() {
  std::vector<corrupt::CorruptionSpec> menu;
  for (const corrupt::CorruptionSpec& s : corrupt::standard_scenarios().entries) {
    if (s.kind != corrupt::Kind::none) menu.push_back(s);
  }
  return menu;
}

struct CorruptPass {
  Tensor z;
  Tensor conf;
  double severity = 0.0;
  bool lidar = false;
};

// Embedding + confidence of the corrupted modality of one scene.
CorruptPass corrupted_embedding(const Model& bound, const Sequence& seq,
                                const corrupt::CorruptionSpec& spec,
                                std::uint64_t seed, ad::Tape* tape) {
  CorruptPass out;
  out.severity = spec.severity();
  out.lidar = spec.affects_lidar();
  if (out.lidar) {
    scene::Frame corrupted = corrupt::apply(spec, seq.frames.back(),
                                            bound.cfg.view_geom,
                                            static_cast<std::int64_t>(seed));
    bev::BevGrid grid = bev::voxelize(corrupted.cloud, bound.cfg.grid);
    out.z = rel::embed_modality(grid, rel::Modality::lidar, bound.rel_p, tape);
    out.conf = rel::confidence(out.z, rel::Modality::lidar, bound.rel_p, tape);
  } else {
    std::vector<std::vector<Tensor>> steps;
    steps.reserve(seq.frames.size());
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      scene::Frame corrupted = corrupt::apply(
          spec, seq.frames[t], bound.cfg.view_geom,
          static_cast<std::int64_t>(derive_seed(seed, "t=" + std::to_string(t))));
      steps.push_back(corrupted.views);
    }
    bev::BevGrid cam = pipeline::camera_branch(bound, steps, tape, nullptr);
    out.z = rel::embed_modality(cam, rel::Modality::camera, bound.rel_p, tape);
    out.conf = rel::confidence(out.z, rel::Modality::camera, bound.rel_p, tape);
  }
  return out;
}

struct StepContext {
  const TrainSetup& setup;
  const std::vector<Sequence>& data;
  const std::vector<corrupt::CorruptionSpec>& menu;
  int stage;
  int epoch;
  int step;
  bool zero_camera = false;
  bool zero_lidar = false;
};

Tensor batch_loss(const Model& bound, const std::vector<int>& batch,
                  const StepContext& ctx, ad::Tape* tape, LossBreakdown* bd) {
  const int K = static_cast<int>(batch.size());
  const bool rel_on = bound.cfg.reliability_on;
  const double inv_k = 1.0 / K;
  const std::string step_tag = "s" + std::to_string(ctx.stage) +
                               "/e" + std::to_string(ctx.epoch) +
                               "/b" + std::to_string(ctx.step);

  Tensor l_det = Tensor::scalar(0.0);
  Tensor l_con = Tensor::scalar(0.0);
  Tensor l_temp = Tensor::scalar(0.0);
  Tensor l_conf = Tensor::scalar(0.0);

  if (ctx.stage == 1) {
    rel::CorruptionSampler sampler;
    sampler.rate = 1.0;
    sampler.menu = ctx.menu;
    const rel::PairSet pairs = rel::make_pairs(
        K, sampler, derive_seed(ctx.setup.seed, "pairs/" + step_tag));

    std::vector<Tensor> zl_rows, zc_rows, extra_rows;
    std::vector<Tensor> scores;
    std::vector<double> targets;
    for (int k = 0; k < K; ++k) {
      const Sequence& seq = ctx.data[static_cast<std::size_t>(batch[static_cast<std::size_t>(k)])];
      RunOpts opts;
      opts.need_head = false;
      opts.need_embeddings = rel_on;
      pipeline::PipelineOut out = pipeline::run_pipeline(bound, seq, tape, opts);
      l_temp = ad::add(l_temp, temporal_loss(out.s_cache, tape), tape);
      if (rel_on) {
        zl_rows.push_back(out.z_lidar);
        zc_rows.push_back(out.z_camera);
        scores.push_back(out.c_lidar);
        targets.push_back(1.0);
        scores.push_back(out.c_camera);
        targets.push_back(1.0);
      }
    }
    if (rel_on) {
      for (const rel::PairSet::Negative& n : pairs.negatives) {
        if (n.corrupted_modality < 0) continue;  // in-batch cross-scene pair
        const Sequence& seq = ctx.data[static_cast<std::size_t>(batch[static_cast<std::size_t>(n.i)])];
        CorruptPass cp = corrupted_embedding(
            bound, seq, n.spec,
            derive_seed(ctx.setup.seed, "corrupt/" + step_tag + "/i" + std::to_string(n.i)),
            tape);
        extra_rows.push_back(cp.z);
        scores.push_back(cp.conf);
        targets.push_back(1.0 - cp.severity);
      }
      Tensor zl = stack_rows(zl_rows, tape);
      Tensor zc = stack_rows(zc_rows, tape);
      if (extra_rows.empty()) {
        l_con = rel::contrastive_loss(zl, zc, bound.cfg.rel.tau, tape, nullptr,
                                      nullptr, bound.cfg.rel.symmetric);
      } else {
        Tensor extras = stack_rows(extra_rows, tape);
        l_con = rel::contrastive_loss(zl, zc, bound.cfg.rel.tau, tape, &extras,
                                      &extras, bound.cfg.rel.symmetric);
      }
      l_conf = confidence_loss(scores, targets, tape);
    }
    l_temp = ad::mul_scalar(l_temp, inv_k, tape);
  } else if (ctx.stage == 2) {
    RunOpts opts;
    opts.zero_camera = ctx.zero_camera;
    opts.zero_lidar = ctx.zero_lidar;
    opts.need_embeddings = false;
    for (int k = 0; k < K; ++k) {
      const Sequence& seq = ctx.data[static_cast<std::size_t>(batch[static_cast<std::size_t>(k)])];
      pipeline::PipelineOut out = pipeline::run_pipeline(bound, seq, tape, opts);
      fusion::HeadTargets targets = fusion::encode_targets(
          seq.frames.back().gt_boxes, bound.cfg.grid, bound.cfg.n_classes);
      l_det = ad::add(l_det, detection_loss(out.head, targets, tape), tape);
    }
    l_det = ad::mul_scalar(l_det, inv_k, tape);
  } else {
    Rng brng(derive_seed(ctx.setup.seed, "aug/" + step_tag));
    std::vector<Tensor> zl_rows, zc_rows, extra_rows;
    std::vector<Tensor> scores;
    std::vector<double> targets;
    for (int k = 0; k < K; ++k) {
      const Sequence& seq = ctx.data[static_cast<std::size_t>(batch[static_cast<std::size_t>(k)])];
      const bool corrupted = !ctx.menu.empty() && brng.uniform01() < ctx.setup.corrupt_rate;
      corrupt::CorruptionSpec spec;
      Sequence seq_used = seq;
      if (corrupted) {
        spec = ctx.menu[static_cast<std::size_t>(brng.below(ctx.menu.size()))];
        seq_used = corrupt::apply(spec, seq, bound.cfg.view_geom,
                                  derive_seed(ctx.setup.seed, "aug-apply/" + step_tag +
                                                                  "/k" + std::to_string(k)));
      }
      RunOpts opts;
      opts.need_embeddings = rel_on;
      pipeline::PipelineOut out = pipeline::run_pipeline(bound, seq_used, tape, opts);
      fusion::HeadTargets dtargets = fusion::encode_targets(
          seq.frames.back().gt_boxes, bound.cfg.grid, bound.cfg.n_classes);
      l_det = ad::add(l_det, detection_loss(out.head, dtargets, tape), tape);
      l_temp = ad::add(l_temp, temporal_loss(out.s_cache, tape), tape);
      if (rel_on) {
        const double sev = spec.severity();
        scores.push_back(out.c_lidar);
        targets.push_back(spec.affects_lidar() ? 1.0 - sev : 1.0);
        scores.push_back(out.c_camera);
        targets.push_back(spec.affects_camera() ? 1.0 - sev : 1.0);
        if (!corrupted) {
          zl_rows.push_back(out.z_lidar);
          zc_rows.push_back(out.z_camera);
        } else {
          extra_rows.push_back(spec.affects_lidar() ? out.z_lidar : out.z_camera);
        }
      }
    }
    l_det = ad::mul_scalar(l_det, inv_k, tape);
    l_temp = ad::mul_scalar(l_temp, inv_k, tape);
    if (rel_on && !zl_rows.empty()) {
      Tensor zl = stack_rows(zl_rows, tape);
      Tensor zc = stack_rows(zc_rows, tape);
      if (extra_rows.empty()) {
        l_con = rel::contrastive_loss(zl, zc, bound.cfg.rel.tau, tape, nullptr,
                                      nullptr, bound.cfg.rel.symmetric);
      } else {
        Tensor extras = stack_rows(extra_rows, tape);
        l_con = rel::contrastive_loss(zl, zc, bound.cfg.rel.tau, tape, &extras,
                                      &extras, bound.cfg.rel.symmetric);
      }
    }
    if (rel_on && !scores.empty()) l_conf = confidence_loss(scores, targets, tape);
  }
  return total_loss(l_det, l_con, l_temp, l_conf, tape, bd);
}

void run_phase(Model& model, int stage, bool camera_phase, int epoch_begin,
               int epoch_end, const std::vector<Sequence>& data,
               const TrainSetup& setup, std::vector<EpochRow>& curves) {
  const StageConfig& sc =
      stage == 1 ? setup.stage1 : (stage == 2 ? setup.stage2 : setup.stage3);
  if (epoch_end <= epoch_begin) return;

  std::vector<std::string> names;
  std::vector<Tensor*> masters;
  model.for_each_param([&](const char* n, Tensor& t) {
    names.push_back(n);
    masters.push_back(&t);
  });
  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (stage_trains(stage, camera_phase, names[i])) trainable.push_back(i);
  }
  std::vector<Tensor*> opt_params;
  for (std::size_t i : trainable) opt_params.push_back(masters[i]);

  OptimizerConfig ocfg;
  ocfg.lr = sc.lr;
  ocfg.weight_decay = sc.weight_decay;
  ocfg.plain_sgd = setup.use_sgd;
  AdamW opt(ocfg);

  const auto menu = corruption_menu();

  for (int epoch = epoch_begin; epoch < epoch_end; ++epoch) {
    Rng erng(derive_seed(setup.seed,
                         "order/s" + std::to_string(stage) + "/e" + std::to_string(epoch)));
    std::vector<int> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    erng.shuffle(order);

    LossBreakdown epoch_avg;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(sc.batch_size)) {
      std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(
                                 order.size(), start + static_cast<std::size_t>(sc.batch_size))));
      StepContext ctx{setup, data, menu, stage, epoch, steps,
                      stage == 2 && !camera_phase, stage == 2 && camera_phase};
      LossBreakdown bd;
      try {
        ad::Tape tape;
        Model bound = model.bind(tape);
        Tensor total = batch_loss(bound, batch, ctx, &tape, &bd);
        // the breakdown identity is part of the contract; check it every step
        const double recomputed = kLambdaDet * bd.l_det + kLambdaContrast * bd.l_contrast +
                                  kLambdaTemp * bd.l_temp + kLambdaConf * bd.l_conf;
        if (std::fabs(recomputed - bd.l_total) > 1e-12 * std::max(1.0, std::fabs(bd.l_total))) {
          throw NumericError("loss breakdown identity violated");
        }
        tape.backward(total);
        std::vector<Tensor*> bound_ptrs;
        bound.for_each_param([&](const char*, Tensor& t) { bound_ptrs.push_back(&t); });
        std::vector<std::vector<double>> grads;
        grads.reserve(trainable.size());
        for (std::size_t i : trainable) grads.push_back(tape.grad(*bound_ptrs[i]));
        opt.step(opt_params, grads);
      } catch (const NumericError& e) {
        throw TrainError("training diverged at stage " + std::to_string(stage) +
                         " epoch " + std::to_string(epoch) + ": " + e.what());
      }
      epoch_avg.l_det += bd.l_det;
      epoch_avg.l_contrast += bd.l_contrast;
      epoch_avg.l_temp += bd.l_temp;
      epoch_avg.l_conf += bd.l_conf;
      epoch_avg.l_total += bd.l_total;
      ++steps;
    }
    if (steps > 0) {
      epoch_avg.l_det /= steps;
      epoch_avg.l_contrast /= steps;
      epoch_avg.l_temp /= steps;
      epoch_avg.l_conf /= steps;
      epoch_avg.l_total /= steps;
    }
    curves.push_back({stage, epoch, epoch_avg});
  }
}

void train_stage(Model& model, int stage, const std::vector<Sequence>& data,
                 const TrainSetup& setup, std::vector<EpochRow>& curves) {
  const StageConfig& sc =
      stage == 1 ? setup.stage1 : (stage == 2 ? setup.stage2 : setup.stage3);
  if (sc.epochs <= 0) return;
  if (sc.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (stage == 2) {
    const int half = (sc.epochs + 1) / 2;
    run_phase(model, 2, false, 0, half, data, setup, curves);
    run_phase(model, 2, true, half, sc.epochs, data, setup, curves);
  } else {
    run_phase(model, stage, false, 0, sc.epochs, data, setup, curves);
  }
}

}  // namespace

TrainResult train(const TrainSetup& setup, const std::vector<int>& stages,
                  const Model* warm_start) {
  TrainResult result;
  if (warm_start != nullptr) {
    result.model = *warm_start;
  } else {
    result.model = Model::init(setup.model, derive_seed(setup.seed, "init"));
  }
  scene::SceneConfig scfg = setup.scene;
  scfg.T = setup.model.stfa.T;
  const std::vector<Sequence> data =
      build_dataset(scfg, setup.train_scenes, setup.seed, "train");
  for (int stage : stages) {
    if (stage < 1 || stage > 3) throw ConfigError("train: stage must be 1..3");
    train_stage(result.model, stage, data, setup, result.curves);
  }
  return result;
}

EvalReport evaluate_model(const Model& m, const std::vector<Sequence>& test,
                          const corrupt::CorruptionSpec* spec, const EvalOpts& opts) {
  std::vector<std::vector<fusion::Detection>> dets(test.size());
  std::vector<std::vector<scene::Box3D>> gts(test.size());
  auto work = [&](std::size_t i) {
    const Sequence* s = &test[i];
    Sequence corrupted;
    if (spec != nullptr && spec->kind != corrupt::Kind::none) {
      corrupted = corrupt::apply(*spec, test[i], m.cfg.view_geom,
                                 derive_seed(spec->seed, "eval/scene=" + std::to_string(i)));
      s = &corrupted;
    }
    dets[i] = pipeline::infer_detections(m, *s, opts.score_threshold, opts.nms_iou);
    gts[i] = test[i].frames.back().gt_boxes;
  };
  const int threads = std::max(1, opts.threads);
  if (threads == 1 || test.size() < 2) {
    for (std::size_t i = 0; i < test.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t n = test.size();
    const std::size_t per = (n + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      const std::size_t lo = static_cast<std::size_t>(t) * per;
      const std::size_t hi = std::min(n, lo + per);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi]() {
        for (std::size_t i = lo; i < hi; ++i) work(i);
      });
    }
    for (std::thread& th : pool) th.join();
  }
  return evaluate_detections(dets, gts, m.cfg.n_classes, opts.match_iou);
}

std::vector<ScenarioRow> robustness_sweep(const Model& m,
                                          const corrupt::ScenarioTable& table,
                                          const std::vector<Sequence>& test,
                                          const EvalOpts& opts) {
  std::vector<ScenarioRow> rows;
  rows.reserve(table.entries.size());
  for (const corrupt::CorruptionSpec& spec : table.entries) {
    rows.push_back({spec, evaluate_model(m, test, &spec, opts)});
  }
  return rows;
}

std::vector<AblationConfig> module_ablation_rows(const pipeline::ModelConfig& base) {
  std::vector<AblationConfig> rows;
  pipeline::ModelConfig none = base;
  none.stfa.mode = stfa::Mode::off;
  none.fusion_mode = fusion::Mode::add;
  none.reliability_on = false;
  rows.push_back({"base", none});

  pipeline::ModelConfig with_stfa = none;
  with_stfa.stfa.mode = stfa::Mode::full;
  rows.push_back({"+stfa", with_stfa});

  pipeline::ModelConfig with_mca = with_stfa;
  with_mca.fusion_mode = fusion::Mode::mca;
  rows.push_back({"+cwmca", with_mca});

  pipeline::ModelConfig full = with_mca;
  full.fusion_mode = fusion::Mode::cw_mca;
  full.reliability_on = true;
  rows.push_back({"+reliability", full});
  return rows;
}

std::vector<AblationConfig> fusion_ablation_rows(const pipeline::ModelConfig& base) {
  std::vector<AblationConfig> rows;
  for (fusion::Mode mode : {fusion::Mode::add, fusion::Mode::cross_image,
                            fusion::Mode::cross_lidar, fusion::Mode::mca,
                            fusion::Mode::cw_mca}) {
    pipeline::ModelConfig cfg = base;
    cfg.fusion_mode = mode;
    cfg.reliability_on = mode == fusion::Mode::cw_mca;
    rows.push_back({fusion::mode_name(mode), cfg});
  }
  return rows;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw ArgumentError("median: empty");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<AblationRow> ablation_sweep(const TrainSetup& base,
                                        const std::vector<AblationConfig>& configs,
                                        const std::vector<std::uint64_t>& seeds,
                                        const corrupt::ScenarioTable& scenarios,
                                        int test_scenes, const EvalOpts& opts) {
  std::vector<AblationRow> rows;
  for (const AblationConfig& cfgrow : configs) {
    AblationRow row;
    row.name = cfgrow.name;
    row.map_per_scenario_seed.assign(scenarios.entries.size(), {});
    for (std::uint64_t seed : seeds) {
      TrainSetup setup = base;
      setup.model = cfgrow.model;
      setup.seed = seed;
      TrainResult tr = train(setup);
      scene::SceneConfig scfg = setup.scene;
      scfg.T = setup.model.stfa.T;
      const auto test = build_dataset(scfg, test_scenes, seed, "test");
      const auto sweep = robustness_sweep(tr.model, scenarios, test, opts);
      for (std::size_t s = 0; s < sweep.size(); ++s) {
        row.map_per_scenario_seed[s].push_back(sweep[s].report.map);
      }
    }
    for (const auto& maps : row.map_per_scenario_seed) {
      row.median_map.push_back(median(maps));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace

std::string sweep_csv(const std::vector<ScenarioRow>& rows) {
  std::ostringstream os;
  os << "scenario,class,AP,mAP,mATE\n";
  for (const ScenarioRow& r : rows) {
    for (std::size_t c = 0; c < r.report.class_ids.size(); ++c) {
      os << r.spec.name << "," << r.report.class_ids[c] << ","
         << fmt(r.report.per_class_ap[c]) << "," << fmt(r.report.map) << ","
         << fmt(r.report.mate) << "\n";
    }
    os << r.spec.name << ",all," << fmt(r.report.map) << "," << fmt(r.report.map)
       << "," << fmt(r.report.mate) << "\n";
  }
  return os.str();
}

std::string sweep_pretty(const std::vector<ScenarioRow>& rows) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %8s %8s %6s\n", "scenario", "mAP", "mATE", "#gt");
  os << buf;
  os << std::string(42, '-') << "\n";
  for (const ScenarioRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-16s %8.4f %8.4f %6d\n", r.spec.name.c_str(),
                  r.report.map, r.report.mate, r.report.n_gt);
    os << buf;
  }
  return os.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows,
                         const corrupt::ScenarioTable& scenarios) {
  std::ostringstream os;
  os << "config";
  for (const auto& s : scenarios.entries) os << "," << s.name;
  os << "\n";
  for (const AblationRow& r : rows) {
    os << r.name;
    for (double m : r.median_map) os << "," << fmt(m);
    os << "\n";
  }
  return os.str();
}

std::string curves_csv(const std::vector<EpochRow>& curves) {
  std::ostringstream os;
  os << "# lambda_det=" << kLambdaDet << " lambda_contrast=" << kLambdaContrast
     << " lambda_temp=" << kLambdaTemp << " lambda_conf=" << kLambdaConf << "\n";
  os << "stage,epoch,l_det,l_contrast,l_temp,l_conf,l_total\n";
  for (const EpochRow& r : curves) {
    os << r.stage << "," << r.epoch << "," << fmt(r.loss.l_det) << ","
       << fmt(r.loss.l_contrast) << "," << fmt(r.loss.l_temp) << ","
       << fmt(r.loss.l_conf) << "," << fmt(r.loss.l_total) << "\n";
  }
  return os.str();
}

}  // namespace relifusion::train
