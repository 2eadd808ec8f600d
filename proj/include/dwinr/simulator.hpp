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
#include <vector>

#include "dwinr/core.hpp"

namespace dwinr::sim {

struct Scatterer {
  Vec2 position;
  cdouble amplitude{1.0, 0.0};
};

struct Phantom {
  std::vector<Scatterer> scatterers;

  std::size_t size() const { return scatterers.size(); }
  /// Deepest scatterer range from the array origin; 0 for an empty phantom.
  double max_range() const;
  void append(const Phantom& other);
};

/// Gaussian-envelope transmit pulse plus additive channel noise.
struct PulseModel {
  double fractional_bandwidth{0.6};
  double noise_std{0.0};  // circular complex Gaussian, E|n|^2 = noise_std^2

  void validate() const;
  /// Envelope standard deviation in seconds: 1 / (2 pi f_c (bw / 2.355)).
  double envelope_sigma(double center_frequency) const;
};

struct Region {
  double x_min{0.0}, x_max{0.0};
  double z_min{0.0}, z_max{0.0};

  double area() const { return (x_max - x_min) * (z_max - z_min); }
};

/// Unit-amplitude scatterers. Throws std::invalid_argument for positions with z <= 0.
Phantom make_point_phantom(const std::vector<Vec2>& positions);

/**
 * Speckle background with one anechoic disk. round(density * area) positions are drawn
 * uniformly in the region with circular complex Gaussian amplitudes (E|a|^2 = 1); those
 * inside the cyst are then dropped.
 */
Phantom make_cyst_phantom(const Region& region, double density, const Vec2& cyst_center, double cyst_radius,
                          std::uint64_t seed);

/// Randomized training phantom: speckle inside the imaging sector, a few anechoic cysts and bright points.
struct MixedPhantomOptions {
  double sector_angle{deg_to_rad(60.0)};
  double z_min{0.004};
  double depth{0.045};
  double density{2.0e6};  // scatterers / m^2
  std::size_t max_cysts{3};
  double min_cyst_radius{0.002};
  double max_cyst_radius{0.006};
  std::size_t max_points{4};
  double point_amplitude{12.0};
};

Phantom make_mixed_phantom(const MixedPhantomOptions& options, std::uint64_t seed);

/// Recording length covering every echo from `depth`: (2 depth + aperture / 2) / c + 6 sigma.
double default_duration(const ArrayGeometry& geom, const PulseModel& pulse, double depth);

/// Samples per channel for a recording of `duration` seconds: ceil(duration f_s).
std::size_t sample_count(double duration, const ArrayGeometry& geom);

/**
 * Direct baseband synthesis:
 *   s_{m,n}(t) = sum_s a_s g(t - tau) exp(-i 2 pi f_c tau) + noise,
 * with tau the round-trip time of flight from das::tof and g a unit-peak Gaussian.
 * Throws std::invalid_argument when `duration` truncates the deepest echo.
 */
IQFrame simulate_frame(const Phantom& phantom, const ArrayGeometry& geom, const Sequence& seq,
                       const PulseModel& pulse, double duration, std::uint64_t seed, unsigned threads = 1);

}  // namespace dwinr::sim
