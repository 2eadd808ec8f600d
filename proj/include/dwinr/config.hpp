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


#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwinr/core.hpp"
#include "dwinr/io.hpp"
#include "dwinr/simulator.hpp"
#include "dwinr/trainer.hpp"

namespace dwinr::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PhantomKind { Mixed, Cyst, Points };

struct SimulationConfig {
  std::size_t frames{200};
  std::uint64_t seed{0};
  PhantomKind phantom{PhantomKind::Mixed};
  sim::PulseModel pulse;
  sim::MixedPhantomOptions mixed;
  std::vector<Vec2> points;        // PhantomKind::Points
  double cyst_radius{0.004};       // PhantomKind::Cyst, centred at a random in-sector position
  double duration{0.0};            // [s]; 0 = default_duration
};

struct Paths {
  std::string dataset{"dataset.udw"};
  std::string checkpoint{"model.inrw"};
  std::string output_dir{"out"};
};

/**
 * Whole-run configuration, read from a YAML file with the sections geometry,
 * sequence, grid, simulation, training and paths. Unknown keys are errors;
 * missing keys keep the defaults below.
 */
struct RunConfig {
  ArrayGeometry geometry;
  std::size_t num_transmits{26};
  double sector_angle{deg_to_rad(60.0)};
  double virtual_source_distance{0.015};
  io::GridDefaults grid;
  SimulationConfig simulation;
  train::TrainConfig training;
  Paths paths;

  Sequence sequence() const { return make_sequence(sector_angle, num_transmits, virtual_source_distance); }
  void validate() const;
};

RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_config(const std::filesystem::path& path);

/// Explicit path if given, else $DWINR_CONFIG if set, else built-in defaults.
RunConfig resolve_config(const std::optional<std::filesystem::path>& path);

/// YAML text of `cfg` (every key, round-trips through parse_config).
std::string dump_config(const RunConfig& cfg);

}  // namespace dwinr::config
