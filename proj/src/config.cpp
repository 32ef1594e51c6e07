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

#include "relifusion/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "relifusion/errors.hpp"

namespace relifusion::cli {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad seed value for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError("config: bad boolean value for " + key + ": '" + v + "'");
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
      {"out_dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"dataset.train_scenes", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train_scenes = to_int(k, v); }},
      {"dataset.test_scenes", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.test_scenes = to_int(k, v); }},
      {"dataset.objects_min", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.objects_min = to_int(k, v); }},
      {"dataset.objects_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.objects_max = to_int(k, v); }},
      {"dataset.T", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.T = to_int(k, v); }},
      {"dataset.points", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.points = to_int(k, v); }},
      {"dataset.noise_sigma", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.noise_sigma = to_double(k, v); }},
      {"dataset.extent", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.extent = to_double(k, v); }},
      {"dataset.classes", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.classes = to_int(k, v); }},
      {"dataset.view_noise", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.view_noise = to_double(k, v); }},
      {"dataset.static_objects", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.static_objects = to_bool(k, v); }},
      {"grid.cells", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.grid_cells = to_int(k, v); }},
      {"grid.zbins", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.zbins = to_int(k, v); }},
      {"grid.z_min", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.z_min = to_double(k, v); }},
      {"grid.z_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.z_max = to_double(k, v); }},
      {"view.h", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.view_h = to_int(k, v); }},
      {"view.w", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.view_w = to_int(k, v); }},
      {"view.r_min", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.r_min = to_double(k, v); }},
      {"view.r_max", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.r_max = to_double(k, v); }},
      {"model.d", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.d = to_int(k, v); }},
      {"model.d_k", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.d_k = to_int(k, v); }},
      {"model.embed_hidden", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.embed_hidden = to_int(k, v); }},
      {"model.embed_dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.embed_dim = to_int(k, v); }},
      {"model.tau", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.tau = to_double(k, v); }},
      {"model.depth_bins", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.depth_bins = to_int(k, v); }},
      {"model.head_hidden", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.head_hidden = to_int(k, v); }},
      {"model.stfa", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.stfa_mode = v; }},
      {"model.fusion", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.fusion_mode = v; }},
      {"model.reliability", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.reliability = to_bool(k, v); }},
      {"model.exclude_self", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.exclude_self = to_bool(k, v); }},
      {"model.temporal_pool", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.temporal_pool = v; }},
      {"model.symmetric_contrastive", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.symmetric_contrastive = to_bool(k, v); }},
      {"model.positional", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.positional = to_bool(k, v); }},
      {"model.beta_init", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.beta_init = to_double(k, v); }},
      {"train.stage1.epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage1.epochs = to_int(k, v); }},
      {"train.stage1.batch", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage1.batch_size = to_int(k, v); }},
      {"train.stage1.lr", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage1.lr = to_double(k, v); }},
      {"train.stage1.wd", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage1.weight_decay = to_double(k, v); }},
      {"train.stage2.epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage2.epochs = to_int(k, v); }},
      {"train.stage2.batch", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage2.batch_size = to_int(k, v); }},
      {"train.stage2.lr", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage2.lr = to_double(k, v); }},
      {"train.stage2.wd", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage2.weight_decay = to_double(k, v); }},
      {"train.stage3.epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage3.epochs = to_int(k, v); }},
      {"train.stage3.batch", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage3.batch_size = to_int(k, v); }},
      {"train.stage3.lr", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage3.lr = to_double(k, v); }},
      {"train.stage3.wd", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.stage3.weight_decay = to_double(k, v); }},
      {"train.corrupt_rate", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.corrupt_rate = to_double(k, v); }},
      {"train.sgd", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.use_sgd = to_bool(k, v); }},
      {"eval.score_threshold", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.score_threshold = to_double(k, v); }},
      {"eval.nms_iou", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.nms_iou = to_double(k, v); }},
      {"eval.match_iou", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.match_iou = to_double(k, v); }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second(*this, key, value);
}

void ExperimentConfig::validate() const {
  if (train_scenes < 0 || test_scenes < 0) throw ConfigError("config: scene counts must be >= 0");
  if (objects_min < 0 || objects_max < objects_min) throw ConfigError("config: bad object count range");
  if (T < 1) throw ConfigError("config: dataset.T must be >= 1");
  if (points < 0) throw ConfigError("config: dataset.points must be >= 0");
  if (extent <= 0) throw ConfigError("config: dataset.extent must be > 0");
  if (classes < 1) throw ConfigError("config: dataset.classes must be >= 1");
  if (grid_cells < 1) throw ConfigError("config: grid.cells must be >= 1");
  if (zbins < 1) throw ConfigError("config: grid.zbins must be >= 1");
  if (z_max <= z_min) throw ConfigError("config: grid z range is empty");
  if (view_h < 1 || view_w < 1) throw ConfigError("config: view dims must be >= 1");
  if (r_max <= r_min) throw ConfigError("config: view range is empty");
  if (d < 1 || d_k < 1) throw ConfigError("config: model dims must be >= 1");
  if (embed_dim < 1 || embed_hidden < 1) throw ConfigError("config: embedding dims must be >= 1");
  if (tau <= 0) throw ConfigError("config: model.tau must be > 0");
  if (depth_bins < 1) throw ConfigError("config: model.depth_bins must be >= 1");
  for (const train::StageConfig* s : {&stage1, &stage2, &stage3}) {
    if (s->epochs < 0) throw ConfigError("config: epochs must be >= 0");
    if (s->batch_size < 1) throw ConfigError("config: batch must be >= 1");
    if (s->lr <= 0) throw ConfigError("config: lr must be > 0");
  }
  if (corrupt_rate < 0 || corrupt_rate > 1) throw ConfigError("config: train.corrupt_rate in [0,1]");
  if (stfa_mode != "full" && stfa_mode != "spatial" && stfa_mode != "temporal" && stfa_mode != "off") {
    throw ConfigError("config: model.stfa must be full|spatial|temporal|off");
  }
  if (temporal_pool != "mean" && temporal_pool != "concat") {
    throw ConfigError("config: model.temporal_pool must be mean|concat");
  }
  fusion::mode_from_name(fusion_mode);
}

scene::SceneConfig ExperimentConfig::scene_config() const {
  scene::SceneConfig sc;
  sc.extent = extent;
  sc.n_classes = classes;
  sc.n_points = points;
  sc.noise_sigma = noise_sigma;
  sc.view_channels = zbins + 1;
  sc.view_noise = view_noise;
  sc.geom.height = view_h;
  sc.geom.width = view_w;
  sc.geom.r_min = r_min;
  sc.geom.r_max = r_max;
  sc.T = T;
  sc.objects_min = objects_min;
  sc.objects_max = objects_max;
  sc.static_objects = static_objects;
  return sc;
}

pipeline::ModelConfig ExperimentConfig::model_config() const {
  validate();
  pipeline::ModelConfig mc;
  std::vector<double> edges;
  for (int i = 0; i <= zbins; ++i) {
    edges.push_back(z_min + (z_max - z_min) * i / zbins);
  }
  mc.grid = bev::GridConfig::square(grid_cells, extent, edges);
  mc.view_geom.height = view_h;
  mc.view_geom.width = view_w;
  mc.view_geom.r_min = r_min;
  mc.view_geom.r_max = r_max;
  mc.stfa.d = d;
  mc.stfa.T = T;
  mc.stfa.exclude_self = exclude_self;
  mc.stfa.pool = temporal_pool == "concat" ? stfa::TemporalPool::concat
                                           : stfa::TemporalPool::mean;
  mc.stfa.mode = stfa_mode == "off"       ? stfa::Mode::off
                 : stfa_mode == "spatial" ? stfa::Mode::spatial
                 : stfa_mode == "temporal" ? stfa::Mode::temporal
                                           : stfa::Mode::full;
  mc.rel.hidden = embed_hidden;
  mc.rel.embed_dim = embed_dim;
  mc.rel.tau = tau;
  mc.rel.symmetric = symmetric_contrastive;
  mc.fus.d_k = d_k;
  mc.fus.positional = positional;
  mc.fus.beta_init = beta_init;
  mc.head.hidden = head_hidden;
  mc.depth_bins = depth_bins;
  mc.n_classes = classes;
  mc.fusion_mode = fusion::mode_from_name(fusion_mode);
  mc.reliability_on = reliability;
  mc.finalize();
  return mc;
}

train::TrainSetup ExperimentConfig::train_setup() const {
  train::TrainSetup ts;
  ts.model = model_config();
  ts.scene = scene_config();
  ts.train_scenes = train_scenes;
  ts.seed = seed;
  ts.stage1 = stage1;
  ts.stage2 = stage2;
  ts.stage3 = stage3;
  ts.corrupt_rate = corrupt_rate;
  ts.use_sgd = use_sgd;
  return ts;
}

train::EvalOpts ExperimentConfig::eval_opts(int threads) const {
  train::EvalOpts eo;
  eo.score_threshold = score_threshold;
  eo.nms_iou = nms_iou;
  eo.match_iou = match_iou;
  eo.threads = threads;
  return eo;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b2 = s.find_first_not_of(" \t");
      if (b2 == std::string::npos) return std::string();
      const auto e2 = s.find_last_not_of(" \t");
      return s.substr(b2, e2 - b2 + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    }
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_string(const ExperimentConfig& c) {
  std::ostringstream os;
  char buf[96];
  auto kvd = [&](const char* k, double v) {
    std::snprintf(buf, sizeof(buf), "%s = %.17g\n", k, v);
    os << buf;
  };
  auto kvi = [&](const char* k, long long v) { os << k << " = " << v << "\n"; };
  auto kvs = [&](const char* k, const std::string& v) { os << k << " = " << v << "\n"; };
  auto kvb = [&](const char* k, bool v) { os << k << " = " << (v ? "true" : "false") << "\n"; };
  kvi("seed", static_cast<long long>(c.seed));
  kvs("out_dir", c.out_dir);
  kvi("dataset.train_scenes", c.train_scenes);
  kvi("dataset.test_scenes", c.test_scenes);
  kvi("dataset.objects_min", c.objects_min);
  kvi("dataset.objects_max", c.objects_max);
  kvi("dataset.T", c.T);
  kvi("dataset.points", c.points);
  kvd("dataset.noise_sigma", c.noise_sigma);
  kvd("dataset.extent", c.extent);
  kvi("dataset.classes", c.classes);
  kvd("dataset.view_noise", c.view_noise);
  kvb("dataset.static_objects", c.static_objects);
  kvi("grid.cells", c.grid_cells);
  kvi("grid.zbins", c.zbins);
  kvd("grid.z_min", c.z_min);
  kvd("grid.z_max", c.z_max);
  kvi("view.h", c.view_h);
  kvi("view.w", c.view_w);
  kvd("view.r_min", c.r_min);
  kvd("view.r_max", c.r_max);
  kvi("model.d", c.d);
  kvi("model.d_k", c.d_k);
  kvi("model.embed_hidden", c.embed_hidden);
  kvi("model.embed_dim", c.embed_dim);
  kvd("model.tau", c.tau);
  kvi("model.depth_bins", c.depth_bins);
  kvi("model.head_hidden", c.head_hidden);
  kvs("model.stfa", c.stfa_mode);
  kvs("model.fusion", c.fusion_mode);
  kvb("model.reliability", c.reliability);
  kvb("model.exclude_self", c.exclude_self);
  kvs("model.temporal_pool", c.temporal_pool);
  kvb("model.symmetric_contrastive", c.symmetric_contrastive);
  kvb("model.positional", c.positional);
  kvd("model.beta_init", c.beta_init);
  kvi("train.stage1.epochs", c.stage1.epochs);
  kvi("train.stage1.batch", c.stage1.batch_size);
  kvd("train.stage1.lr", c.stage1.lr);
  kvd("train.stage1.wd", c.stage1.weight_decay);
  kvi("train.stage2.epochs", c.stage2.epochs);
  kvi("train.stage2.batch", c.stage2.batch_size);
  kvd("train.stage2.lr", c.stage2.lr);
  kvd("train.stage2.wd", c.stage2.weight_decay);
  kvi("train.stage3.epochs", c.stage3.epochs);
  kvi("train.stage3.batch", c.stage3.batch_size);
  kvd("train.stage3.lr", c.stage3.lr);
  kvd("train.stage3.wd", c.stage3.weight_decay);
  kvd("train.corrupt_rate", c.corrupt_rate);
  kvb("train.sgd", c.use_sgd);
  kvd("eval.score_threshold", c.score_threshold);
  kvd("eval.nms_iou", c.nms_iou);
  kvd("eval.match_iou", c.match_iou);
  return os.str();
}

}  // namespace relifusion::cli
