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

#include "dwinr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "dwinr/beamformer.hpp"
#include "dwinr/parallel.hpp"

namespace dwinr::sim {

namespace {

// Envelope support beyond which the Gaussian is dropped (exp(-12.5) ~ 4e-6).
constexpr double kEnvelopeCutoff = 5.0;

cdouble circular_gaussian(std::mt19937_64& rng, double std_dev) {
  std::normal_distribution<double> normal(0.0, std_dev / std::sqrt(2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

}  // namespace

double Phantom::max_range() const {
  double r = 0.0;
  for (const auto& s : scatterers) r = std::max(r, std::hypot(s.position.x, s.position.z));
  return r;
}

void Phantom::append(const Phantom& other) {
  scatterers.insert(scatterers.end(), other.scatterers.begin(), other.scatterers.end());
}

void PulseModel::validate() const {
  if (!(fractional_bandwidth > 0.0 && fractional_bandwidth < 2.0))
    throw std::invalid_argument("pulse model: fractional bandwidth must be in (0, 2)");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("pulse model: noise std must be >= 0");
}

double PulseModel::envelope_sigma(double center_frequency) const {
  return 1.0 / (2.0 * std::numbers::pi * center_frequency * fractional_bandwidth / 2.355);
}

Phantom make_point_phantom(const std::vector<Vec2>& positions) {
  Phantom phantom;
  phantom.scatterers.reserve(positions.size());
  for (const auto& p : positions) {
    if (!(p.z > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.z)) {
      throw std::invalid_argument("make_point_phantom: scatterer at z=" + std::to_string(p.z) +
                                  " is not in front of the array");
    }
    phantom.scatterers.push_back({p, {1.0, 0.0}});
  }
  return phantom;
}

Phantom make_cyst_phantom(const Region& region, double density, const Vec2& cyst_center, double cyst_radius,
                          std::uint64_t seed) {
  if (!(density > 0.0)) throw std::invalid_argument("make_cyst_phantom: density must be positive");
  if (!(cyst_radius > 0.0)) throw std::invalid_argument("make_cyst_phantom: cyst radius must be positive");
  if (!(region.x_max > region.x_min) || !(region.z_max > region.z_min) || region.z_min < 0.0)
    throw std::invalid_argument("make_cyst_phantom: invalid region");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
  std::uniform_real_distribution<double> uz(region.z_min, region.z_max);
  const auto count = static_cast<std::size_t>(std::llround(density * region.area()));

  Phantom phantom;
  phantom.scatterers.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vec2 p{ux(rng), uz(rng)};
    const cdouble a = circular_gaussian(rng, 1.0);
    if (!(p.z > 0.0)) continue;
    if (distance(p, cyst_center) < cyst_radius) continue;
    phantom.scatterers.push_back({p, a});
  }
  return phantom;
}

Phantom make_mixed_phantom(const MixedPhantomOptions& opt, std::uint64_t seed) {
  if (!(opt.density > 0.0)) throw std::invalid_argument("make_mixed_phantom: density must be positive");
  std::mt19937_64 rng(seed);
  const double half = opt.sector_angle / 2.0;
  const double x_extent = opt.depth * std::sin(half);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto sector_point = [&](double margin) {
    // Uniform over the annular sector via the area-preserving radius transform.
    const double r0 = opt.z_min + margin;
    const double r1 = opt.depth - margin;
    const double r = std::sqrt(r0 * r0 + unit(rng) * (r1 * r1 - r0 * r0));
    const double theta = (2.0 * unit(rng) - 1.0) * std::max(0.0, half - margin / std::max(r, 1e-9));
    return Vec2{r * std::sin(theta), r * std::cos(theta)};
  };

  struct Disk {
    Vec2 center;
    double radius;
  };
  std::vector<Disk> cysts;
  const auto num_cysts = static_cast<std::size_t>(unit(rng) * static_cast<double>(opt.max_cysts + 1));
  for (std::size_t k = 0; k < std::min(num_cysts, opt.max_cysts); ++k) {
    const double radius = opt.min_cyst_radius + unit(rng) * (opt.max_cyst_radius - opt.min_cyst_radius);
    cysts.push_back({sector_point(radius), radius});
  }

  Phantom phantom;
  const double box_area = 2.0 * x_extent * (opt.depth - opt.z_min);
  const auto candidates = static_cast<std::size_t>(std::llround(opt.density * box_area));
  phantom.scatterers.reserve(candidates);
  for (std::size_t k = 0; k < candidates; ++k) {
    const Vec2 p{(2.0 * unit(rng) - 1.0) * x_extent, opt.z_min + unit(rng) * (opt.depth - opt.z_min)};
    const cdouble a = circular_gaussian(rng, 1.0);
    const double r = std::hypot(p.x, p.z);
    if (r > opt.depth || r < opt.z_min || std::atan2(std::abs(p.x), p.z) > half) continue;
    const bool in_cyst = std::any_of(cysts.begin(), cysts.end(),
                                     [&](const Disk& d) { return distance(p, d.center) < d.radius; });
    if (in_cyst) continue;
    phantom.scatterers.push_back({p, a});
  }

  const auto num_points = static_cast<std::size_t>(unit(rng) * static_cast<double>(opt.max_points + 1));
  for (std::size_t k = 0; k < std::min(num_points, opt.max_points); ++k) {
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    phantom.scatterers.push_back({sector_point(0.001), std::polar(opt.point_amplitude, phase)});
  }
  return phantom;
}

double default_duration(const ArrayGeometry& geom, const PulseModel& pulse, double depth) {
  return (2.0 * depth + geom.aperture_width() / 2.0) / geom.speed_of_sound +
         6.0 * pulse.envelope_sigma(geom.center_frequency);
}

std::size_t sample_count(double duration, const ArrayGeometry& geom) {
  return static_cast<std::size_t>(std::ceil(duration * geom.sampling_frequency));
}

IQFrame simulate_frame(const Phantom& phantom, const ArrayGeometry& geom, const Sequence& seq,
                       const PulseModel& pulse, double duration, std::uint64_t seed, unsigned threads) {
  geom.validate();
  seq.validate();
  pulse.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("simulate_frame: duration must be positive");

  const double fs = geom.sampling_frequency;
  const auto num_samples = sample_count(duration, geom);
  const double sigma = pulse.envelope_sigma(geom.center_frequency);
  const double t_last = geom.t0 + static_cast<double>(num_samples - 1) / fs;
  const auto elements = element_positions(geom);
  const std::size_t num_ch = geom.num_elements;
  const std::size_t num_tx = seq.size();

  for (const auto& s : phantom.scatterers) {
    if (!std::isfinite(s.amplitude.real()) || !std::isfinite(s.amplitude.imag()))
      throw std::invalid_argument("simulate_frame: non-finite scatterer amplitude");
  }

  // Truncation check on the latest echo over all transmits and channels.
  double latest = 0.0;
  for (const auto& s : phantom.scatterers) {
    for (const auto& tx : seq.transmits) {
      latest = std::max(latest, das::tof(s.position, elements.front(), tx, geom.speed_of_sound));
      latest = std::max(latest, das::tof(s.position, elements.back(), tx, geom.speed_of_sound));
    }
  }
  if (!phantom.scatterers.empty() && latest + 3.0 * sigma > t_last) {
    throw std::invalid_argument("simulate_frame: duration " + std::to_string(duration) +
                                " s truncates the deepest echo (needs " +
                                std::to_string(latest + 3.0 * sigma - geom.t0) + " s)");
  }

  IQFrame frame(geom, seq, num_samples);
  const double step = 1.0 / (fs * sigma);  // sample spacing in units of sigma
  const double ratio_decay = std::exp(-step * step);
  const double omega = 2.0 * std::numbers::pi * geom.center_frequency;

  parallel_for(num_tx * num_ch, threads, [&](std::size_t job) {
    const std::size_t m = job / num_ch;
    const std::size_t n = job % num_ch;
    std::vector<cdouble> acc(num_samples, cdouble{0.0, 0.0});
    for (const auto& s : phantom.scatterers) {
      const double tau = das::tof(s.position, elements[n], seq.transmits[m], geom.speed_of_sound);
      const double center = (tau - geom.t0) * fs;
      const double reach = kEnvelopeCutoff * sigma * fs;
      const auto first = static_cast<std::ptrdiff_t>(std::max(0.0, std::ceil(center - reach)));
      const auto last = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(num_samples) - 1,
                                                 static_cast<std::ptrdiff_t>(std::floor(center + reach)));
      if (first > last) continue;
      const cdouble echo = s.amplitude * std::polar(1.0, -omega * tau);
      // g(t_k) by the recurrence g_{k+1} = g_k r_k, r_{k+1} = r_k exp(-h^2).
      const double u = (geom.t0 + static_cast<double>(first) / fs - tau) / sigma;
      double g = std::exp(-0.5 * u * u);
      double r = std::exp(-u * step - 0.5 * step * step);
      for (std::ptrdiff_t k = first; k <= last; ++k) {
        acc[static_cast<std::size_t>(k)] += echo * g;
        g *= r;
        r *= ratio_decay;
      }
    }
    if (pulse.noise_std > 0.0) {
      std::seed_seq seeds{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(n)};
      std::mt19937_64 rng(seeds);
      for (auto& v : acc) v += circular_gaussian(rng, pulse.noise_std);
    }
    auto out = frame.channel(m, n);
    for (std::size_t k = 0; k < num_samples; ++k) out[k] = cfloat(static_cast<float>(acc[k].real()),
                                                                   static_cast<float>(acc[k].imag()));
  });
  return frame;
}

}  // namespace dwinr::sim
