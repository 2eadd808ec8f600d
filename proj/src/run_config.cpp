/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 dwinr contributors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "dwinr/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dwinr::config {

namespace {

// Reads keys from one mapping and rejects any it did not consume.
class Section {
 public:
  Section(const YAML::Node& node, std::string name, std::string origin)
      : node_(node), name_(std::move(name)), origin_(std::move(origin)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail("must be a mapping");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || node_.IsNull()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail("bad value for '" + key + "'");
    }
  }

  void angle_deg(const std::string& key, double& radians) {
    double deg = rad_to_deg(radians);
    get(key, deg);
    radians = deg_to_rad(deg);
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    return node_ && node_.IsMap() ? node_[key] : YAML::Node();
  }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin_ + ": " + (name_.empty() ? std::string("top level") : name_) + ": " + msg);
  }

 private:
  YAML::Node node_;
  std::string name_;
  std::string origin_;
  std::set<std::string> seen_;
};

const char* phantom_name(PhantomKind k) {
  switch (k) {
    case PhantomKind::Mixed: return "mixed";
    case PhantomKind::Cyst: return "cyst";
    case PhantomKind::Points: return "points";
  }
  return "mixed";
}

}  // namespace

void RunConfig::validate() const {
  try {
    geometry.validate();
    sequence().validate();
    training.validate();
    simulation.pulse.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  if (grid.width < 1 || grid.height < 1 || !(grid.depth > 0.0) || !(grid.sector_angle > 0.0))
    throw ConfigError("invalid configuration: grid needs positive size, depth and sector angle");
  if (simulation.phantom == PhantomKind::Points && simulation.points.empty())
    throw ConfigError("invalid configuration: points phantom needs at least one point");
  if (!(simulation.duration >= 0.0)) throw ConfigError("invalid configuration: duration must be >= 0");
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  RunConfig cfg;
  Section top(root, "", origin);

  Section g(top.child("geometry"), "geometry", origin);
  g.get("num_elements", cfg.geometry.num_elements);
  g.get("pitch", cfg.geometry.pitch);
  g.get("center_frequency", cfg.geometry.center_frequency);
  g.get("sampling_frequency", cfg.geometry.sampling_frequency);
  g.get("demod_frequency", cfg.geometry.demod_frequency);
  g.get("speed_of_sound", cfg.geometry.speed_of_sound);
  g.get("t0", cfg.geometry.t0);
  g.finish();

  Section s(top.child("sequence"), "sequence", origin);
  s.get("num_transmits", cfg.num_transmits);
  s.angle_deg("sector_angle_deg", cfg.sector_angle);
  s.get("virtual_source_distance", cfg.virtual_source_distance);
  s.finish();

  cfg.grid.sector_angle = cfg.sector_angle;
  Section gr(top.child("grid"), "grid", origin);
  gr.get("width", cfg.grid.width);
  gr.get("height", cfg.grid.height);
  gr.get("depth", cfg.grid.depth);
  gr.finish();

  auto& sim = cfg.simulation;
  sim.mixed.sector_angle = cfg.sector_angle;
  sim.mixed.depth = cfg.grid.depth;
  Section si(top.child("simulation"), "simulation", origin);
  si.get("frames", sim.frames);
  si.get("seed", sim.seed);
  std::string kind = phantom_name(sim.phantom);
  si.get("phantom", kind);
  if (kind == "mixed") sim.phantom = PhantomKind::Mixed;
  else if (kind == "cyst") sim.phantom = PhantomKind::Cyst;
  else if (kind == "points") sim.phantom = PhantomKind::Points;
  else si.fail("phantom must be mixed, cyst or points");
  si.get("fractional_bandwidth", sim.pulse.fractional_bandwidth);
  si.get("noise_std", sim.pulse.noise_std);
  si.get("density", sim.mixed.density);
  si.get("z_min", sim.mixed.z_min);
  si.get("max_cysts", sim.mixed.max_cysts);
  si.get("min_cyst_radius", sim.mixed.min_cyst_radius);
  si.get("max_cyst_radius", sim.mixed.max_cyst_radius);
  si.get("max_points", sim.mixed.max_points);
  si.get("point_amplitude", sim.mixed.point_amplitude);
  si.get("cyst_radius", sim.cyst_radius);
  si.get("duration", sim.duration);
  std::vector<std::vector<double>> pts;
  si.get("points", pts);
  for (const auto& p : pts) {
    if (p.size() != 2) si.fail("each point needs [x, z]");
    sim.points.push_back({p[0], p[1]});
  }
  si.finish();

  auto& t = cfg.training;
  Section tr(top.child("training"), "training", origin);
  tr.get("beta", t.beta);
  tr.get("learning_rate", t.learning_rate);
  tr.get("batch_size", t.batch_size);
  tr.get("epochs", t.epochs);
  tr.get("adam_beta1", t.adam_beta1);
  tr.get("adam_beta2", t.adam_beta2);
  tr.get("adam_epsilon", t.adam_epsilon);
  tr.get("seed", t.seed);
  tr.get("dynamic_range", t.dynamic_range);
  std::vector<double> split(t.split.begin(), t.split.end());
  tr.get("split", split);
  if (split.size() != 3) tr.fail("split needs three ratios");
  std::copy(split.begin(), split.end(), t.split.begin());
  tr.get("input_transmits", t.input_transmits);
  tr.get("embedding_length", t.embedding_length);
  tr.get("hidden", t.arch.hidden);
  tr.get("num_layers", t.arch.num_layers);
  tr.get("skip_layer", t.arch.skip_layer);
  tr.get("ssim_window", t.ssim.window);
  tr.get("ssim_sigma", t.ssim.sigma);
  tr.finish();
  t.arch.input_features = 3 * t.embedding_length;
  t.arch.outputs = cfg.geometry.num_elements;

  Section pa(top.child("paths"), "paths", origin);
  pa.get("dataset", cfg.paths.dataset);
  pa.get("checkpoint", cfg.paths.checkpoint);
  pa.get("output_dir", cfg.paths.output_dir);
  pa.finish();

  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& path) {
  if (path) return load_config(*path);
  if (const char* env = std::getenv("DWINR_CONFIG"); env && *env) return load_config(env);
  return RunConfig{};
}

std::string dump_config(const RunConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  const auto& g = cfg.geometry;
  out << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "num_elements" << YAML::Value << g.num_elements;
  out << YAML::Key << "pitch" << YAML::Value << g.pitch;
  out << YAML::Key << "center_frequency" << YAML::Value << g.center_frequency;
  out << YAML::Key << "sampling_frequency" << YAML::Value << g.sampling_frequency;
  out << YAML::Key << "demod_frequency" << YAML::Value << g.demod_frequency;
  out << YAML::Key << "speed_of_sound" << YAML::Value << g.speed_of_sound;
  out << YAML::Key << "t0" << YAML::Value << g.t0;
  out << YAML::EndMap;

  out << YAML::Key << "sequence" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "num_transmits" << YAML::Value << cfg.num_transmits;
  out << YAML::Key << "sector_angle_deg" << YAML::Value << rad_to_deg(cfg.sector_angle);
  out << YAML::Key << "virtual_source_distance" << YAML::Value << cfg.virtual_source_distance;
  out << YAML::EndMap;

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "width" << YAML::Value << cfg.grid.width;
  out << YAML::Key << "height" << YAML::Value << cfg.grid.height;
  out << YAML::Key << "depth" << YAML::Value << cfg.grid.depth;
  out << YAML::EndMap;

  const auto& s = cfg.simulation;
  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "frames" << YAML::Value << s.frames;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "phantom" << YAML::Value << phantom_name(s.phantom);
  out << YAML::Key << "fractional_bandwidth" << YAML::Value << s.pulse.fractional_bandwidth;
  out << YAML::Key << "noise_std" << YAML::Value << s.pulse.noise_std;
  out << YAML::Key << "density" << YAML::Value << s.mixed.density;
  out << YAML::Key << "z_min" << YAML::Value << s.mixed.z_min;
  out << YAML::Key << "max_cysts" << YAML::Value << s.mixed.max_cysts;
  out << YAML::Key << "min_cyst_radius" << YAML::Value << s.mixed.min_cyst_radius;
  out << YAML::Key << "max_cyst_radius" << YAML::Value << s.mixed.max_cyst_radius;
  out << YAML::Key << "max_points" << YAML::Value << s.mixed.max_points;
  out << YAML::Key << "point_amplitude" << YAML::Value << s.mixed.point_amplitude;
  out << YAML::Key << "cyst_radius" << YAML::Value << s.cyst_radius;
  out << YAML::Key << "duration" << YAML::Value << s.duration;
  if (!s.points.empty()) {
    out << YAML::Key << "points" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : s.points) out << YAML::Flow << std::vector<double>{p.x, p.z};
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;

  const auto& t = cfg.training;
  out << YAML::Key << "training" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "beta" << YAML::Value << t.beta;
  out << YAML::Key << "learning_rate" << YAML::Value << t.learning_rate;
  out << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  out << YAML::Key << "epochs" << YAML::Value << t.epochs;
  out << YAML::Key << "adam_beta1" << YAML::Value << t.adam_beta1;
  out << YAML::Key << "adam_beta2" << YAML::Value << t.adam_beta2;
  out << YAML::Key << "adam_epsilon" << YAML::Value << t.adam_epsilon;
  out << YAML::Key << "seed" << YAML::Value << t.seed;
  out << YAML::Key << "dynamic_range" << YAML::Value << t.dynamic_range;
  out << YAML::Key << "split" << YAML::Value << YAML::Flow
      << std::vector<double>(t.split.begin(), t.split.end());
  out << YAML::Key << "input_transmits" << YAML::Value << t.input_transmits;
  out << YAML::Key << "embedding_length" << YAML::Value << t.embedding_length;
  out << YAML::Key << "hidden" << YAML::Value << t.arch.hidden;
  out << YAML::Key << "num_layers" << YAML::Value << t.arch.num_layers;
  out << YAML::Key << "skip_layer" << YAML::Value << t.arch.skip_layer;
  out << YAML::Key << "ssim_window" << YAML::Value << t.ssim.window;
  out << YAML::Key << "ssim_sigma" << YAML::Value << t.ssim.sigma;
  out << YAML::EndMap;

  out << YAML::Key << "paths" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dataset" << YAML::Value << cfg.paths.dataset;
  out << YAML::Key << "checkpoint" << YAML::Value << cfg.paths.checkpoint;
  out << YAML::Key << "output_dir" << YAML::Value << cfg.paths.output_dir;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace dwinr::config
