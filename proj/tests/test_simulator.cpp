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


#include <doctest.h>

#include <cmath>

#include "dwinr/beamformer.hpp"
#include "dwinr/simulator.hpp"

using namespace dwinr;

TEST_CASE("point phantom construction") {
  auto p = sim::make_point_phantom({{0.0, 0.04}});
  REQUIRE(p.size() == 1);
  CHECK(p.scatterers[0].amplitude == cdouble(1.0, 0.0));
  CHECK(sim::make_point_phantom({}).size() == 0);
  std::vector<Vec2> column;
  for (int k = 0; k < 5; ++k) column.push_back({0.0, 0.01 + 0.01 * k});
  CHECK(sim::make_point_phantom(column).size() == 5);
  CHECK_THROWS_AS(sim::make_point_phantom({{0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(sim::make_point_phantom({{0.001, -0.01}}), std::invalid_argument);
}

TEST_CASE("cyst phantom") {
  const sim::Region region{-0.01, 0.01, 0.01, 0.03};
  CHECK_THROWS_AS(sim::make_cyst_phantom(region, 0.0, {0.0, 0.02}, 0.003, 1), std::invalid_argument);
  CHECK_THROWS_AS(sim::make_cyst_phantom(region, 1e6, {0.0, 0.02}, 0.0, 1), std::invalid_argument);

  const auto a = sim::make_cyst_phantom(region, 1e6, {0.0, 0.02}, 0.003, 42);
  const auto b = sim::make_cyst_phantom(region, 1e6, {0.0, 0.02}, 0.003, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.scatterers[i].position.x == b.scatterers[i].position.x);
    CHECK(a.scatterers[i].amplitude == b.scatterers[i].amplitude);
  }

  // 1e6 per m^2 over 20 x 20 mm is 400 draws before the disk is removed.
  const auto tiny = sim::make_cyst_phantom(region, 1e6, {0.0, 0.5}, 1e-6, 7);
  CHECK(tiny.size() == 400);
  const double expected_kept = 400.0 * (1.0 - std::numbers::pi * 0.003 * 0.003 / region.area());
  CHECK(std::abs(static_cast<double>(a.size()) - expected_kept) < 4.0 * std::sqrt(expected_kept));
  for (const auto& s : a.scatterers) {
    CHECK(distance(s.position, {0.0, 0.02}) >= 0.003);
    CHECK(s.position.x >= region.x_min);
    CHECK(s.position.z <= region.z_max);
  }
}

TEST_CASE("pulse model") {
  sim::PulseModel p;
  CHECK(p.envelope_sigma(6e6) == doctest::Approx(1.0 / (2 * std::numbers::pi * 6e6 * 0.6 / 2.355)));
  p.fractional_bandwidth = 2.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.fractional_bandwidth = 0.6;
  p.noise_std = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

namespace {

ArrayGeometry small_geometry() {
  ArrayGeometry g;
  g.num_elements = 8;
  return g;
}

}  // namespace

TEST_CASE("simulated echo peaks at the time of flight with the expected phase") {
  const ArrayGeometry g = small_geometry();
  const Sequence seq = make_sequence(deg_to_rad(60), 1, 0.015);
  const sim::PulseModel pulse;
  const Vec2 target{0.002, 0.02};
  const auto frame =
      sim::simulate_frame(sim::make_point_phantom({target}), g, seq, pulse, sim::default_duration(g, pulse, 0.03), 1);
  const auto el = element_positions(g);
  for (std::size_t n = 0; n < g.num_elements; ++n) {
    const double tau = das::tof(target, el[n], seq.transmits[0], g.speed_of_sound);
    const auto ch = frame.channel(0, n);
    std::size_t best = 0;
    for (std::size_t k = 1; k < ch.size(); ++k) {
      if (std::abs(ch[k]) > std::abs(ch[best])) best = k;
    }
    CHECK(std::abs(static_cast<double>(best) / g.sampling_frequency - tau) <= 0.5 / g.sampling_frequency);
    // Sample value matches the analytic baseband echo.
    const double t = static_cast<double>(best) / g.sampling_frequency;
    const double sigma = pulse.envelope_sigma(g.center_frequency);
    const cdouble expected = std::exp(-0.5 * (t - tau) * (t - tau) / (sigma * sigma)) *
                             std::exp(cdouble(0.0, -2.0 * std::numbers::pi * g.center_frequency * tau));
    CHECK(std::abs(cdouble(ch[best]) - expected) < 1e-6);
  }
}

TEST_CASE("simulation is deterministic and linear in the phantom") {
  const ArrayGeometry g = small_geometry();
  const Sequence seq = make_sequence(deg_to_rad(60), 3, 0.015);
  sim::PulseModel pulse;
  const double dur = sim::default_duration(g, pulse, 0.03);
  const auto a = sim::make_point_phantom({{0.0, 0.015}});
  const auto b = sim::make_point_phantom({{0.004, 0.025}});
  auto ab = a;
  ab.append(b);
  const auto fa = sim::simulate_frame(a, g, seq, pulse, dur, 1);
  const auto fb = sim::simulate_frame(b, g, seq, pulse, dur, 1);
  const auto fab = sim::simulate_frame(ab, g, seq, pulse, dur, 1);
  CHECK(fab == sim::simulate_frame(ab, g, seq, pulse, dur, 1, 3));
  // Frames are stored in single precision.
  for (std::size_t i = 0; i < fab.data().size(); ++i) {
    const cdouble sum = cdouble(fa.data()[i]) + cdouble(fb.data()[i]);
    CHECK(std::abs(cdouble(fab.data()[i]) - sum) <= 1e-6 * (1.0 + std::abs(sum)));
  }

  pulse.noise_std = 0.1;
  const auto n1 = sim::simulate_frame(a, g, seq, pulse, dur, 9);
  const auto n2 = sim::simulate_frame(a, g, seq, pulse, dur, 9);
  const auto n3 = sim::simulate_frame(a, g, seq, pulse, dur, 10);
  CHECK(n1 == n2);
  CHECK_FALSE(n1 == n3);
  CHECK(n1.all_finite());
}

TEST_CASE("noise statistics") {
  const ArrayGeometry g = small_geometry();
  const Sequence seq = make_sequence(deg_to_rad(60), 2, 0.015);
  sim::PulseModel pulse;
  pulse.noise_std = 0.5;
  const auto f = sim::simulate_frame({}, g, seq, pulse, 2e-4, 3);
  double power = 0.0;
  cdouble mean{0.0, 0.0};
  for (const auto& s : f.data()) {
    power += std::norm(cdouble(s));
    mean += cdouble(s);
  }
  const double n = static_cast<double>(f.data().size());
  CHECK(power / n == doctest::Approx(0.25).epsilon(0.05));
  CHECK(std::abs(mean / n) < 0.02);
}

TEST_CASE("too short a recording is rejected") {
  const ArrayGeometry g = small_geometry();
  const Sequence seq = make_sequence(deg_to_rad(60), 1, 0.015);
  const auto ph = sim::make_point_phantom({{0.0, 0.04}});
  CHECK_THROWS_AS(sim::simulate_frame(ph, g, seq, {}, 2 * 0.02 / 1540.0, 1), std::invalid_argument);
  CHECK_NOTHROW(sim::simulate_frame(ph, g, seq, {}, sim::default_duration(g, {}, 0.04), 1));
}

TEST_CASE("mixed phantoms stay inside the sector and depend on the seed") {
  sim::MixedPhantomOptions opt;
  const auto a = sim::make_mixed_phantom(opt, 5);
  const auto b = sim::make_mixed_phantom(opt, 5);
  const auto c = sim::make_mixed_phantom(opt, 6);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() > 100);
  CHECK(a.size() != c.size());
  for (const auto& s : a.scatterers) {
    const double r = std::hypot(s.position.x, s.position.z);
    CHECK(r <= opt.depth + 1e-12);
    CHECK(s.position.z > 0.0);
    CHECK(std::atan2(std::abs(s.position.x), s.position.z) <= opt.sector_angle / 2 + 1e-12);
  }
  CHECK(a.max_range() <= opt.depth + 1e-12);
}
