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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Pass criterion numbers as arguments to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dwinr/beamformer.hpp"
#include "dwinr/cli.hpp"
#include "dwinr/config.hpp"
#include "dwinr/inr.hpp"
#include "dwinr/io.hpp"
#include "dwinr/metrics.hpp"
#include "dwinr/simulator.hpp"
#include "dwinr/trainer.hpp"

using namespace dwinr;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// 1. Point target focusing with rectangular weights over the full sequence.
Outcome focusing() {
  const auto start = Clock::now();
  const ArrayGeometry geom;  // 64 elements, lambda/2 pitch
  const auto seq = make_sequence(deg_to_rad(60), 26, 0.015);
  const Vec2 target{0.0, 0.040};
  const auto phantom = sim::make_point_phantom({target});
  const sim::PulseModel pulse;
  const auto frame = sim::simulate_frame(phantom, geom, seq, pulse, sim::default_duration(geom, pulse, 0.045), 1);
  // 128x128 pixels over a 4 mm window around the target.
  const auto grid = make_grid(128, 128, -0.002, 0.002, 0.038, 0.042, deg_to_rad(60), 0.045);
  const auto image = das::rectangular_compound(frame, all_indices(seq.size()), grid);
  std::size_t best = 0;
  for (std::size_t p = 1; p < image.size(); ++p)
    if (std::abs(image.pixels[p]) > std::abs(image.pixels[best])) best = p;
  const double err = distance(grid.position(best), target);
  const double tol = 0.5 * geom.wavelength();
  const double t = seconds_since(start);
  return {err <= tol && t < 60.0,
          fmt("peak error %.4f mm (limit %.4f mm), %.1f s (limit 60 s)", err * 1e3, tol * 1e3, t)};
}

// 2. More transmits in the compound bring the image closer to the full-sequence reference.
Outcome compounding() {
  config::RunConfig cfg;
  cfg.simulation.phantom = config::PhantomKind::Cyst;
  const auto seq = cfg.sequence();
  const auto grid = cfg.grid.make();
  const auto& pulse = cfg.simulation.pulse;
  const double duration = sim::default_duration(cfg.geometry, pulse, cfg.grid.depth);
  const auto three = spread_indices(26, 3);
  const auto nine = spread_indices(26, 9);
  double shared3 = 0, shared9 = 0, own3 = 0, own9 = 0;
  const int n = 10;
  for (int i = 0; i < n; ++i) {
    const auto phantom = cli::make_frame_phantom(cfg, 100, static_cast<std::size_t>(i));
    const auto frame = sim::simulate_frame(phantom, cfg.geometry, seq, pulse, duration, cli::frame_seed(100, i, 1));
    const auto ref = das::rectangular_compound(frame, all_indices(26), grid);
    const double norm = das::envelope_max(ref);
    const auto gt = das::bmode(ref, 60.0, norm);
    const auto c3 = das::rectangular_compound(frame, three, grid);
    const auto c9 = das::rectangular_compound(frame, nine, grid);
    shared3 += metrics::psnr(das::bmode(c3, 60.0, norm), gt, grid.sector_mask) / n;
    shared9 += metrics::psnr(das::bmode(c9, 60.0, norm), gt, grid.sector_mask) / n;
    own3 += metrics::psnr(das::bmode(c3, 60.0), gt, grid.sector_mask) / n;
    own9 += metrics::psnr(das::bmode(c9, 60.0), gt, grid.sector_mask) / n;
  }
  return {shared3 < shared9 && own3 < own9,
          fmt("mean PSNR 3 tx %.3f dB < 9 tx %.3f dB (reference normalization); %.3f < %.3f dB (own normalization)",
              shared3, shared9, own3, own9)};
}

// 3. Reverse-mode gradient of the whole pipeline against central differences.
Outcome gradients() {
  ArrayGeometry geom;
  geom.num_elements = 4;
  const auto seq = make_sequence(deg_to_rad(60), 1, 0.015);
  const sim::PulseModel pulse;
  sim::Region region{-0.004, 0.004, 0.006, 0.016};
  auto phantom = sim::make_cyst_phantom(region, 2e6, {0.0, 0.011}, 0.0015, 5);
  const auto frame = sim::simulate_frame(phantom, geom, seq, pulse, sim::default_duration(geom, pulse, 0.02), 5);
  const auto grid = make_grid(8, 8, -0.003, 0.003, 0.008, 0.014, deg_to_rad(60), 0.02);

  train::TrainConfig cfg;
  cfg.arch = {6, 8, 2, 0, 4};
  cfg.embedding_length = 2;
  cfg.input_transmits = 1;
  cfg.ssim = {7, 1.5};
  const auto sample = train::make_sample(frame, grid, cfg);
  auto params = inr::init_params(21, cfg.arch, inr::EncodingConfig::from(grid, seq, 2));
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (auto& l : params.layers) {
    for (auto& b : l.bias) b = u(rng);
    for (auto& b : l.activation_bias) b = u(rng);
  }

  ad::Objective f = [&](std::span<const double> flat, bool with_gradient) {
    auto q = params;
    q.assign(flat);
    auto fwd = train::forward_sample(q, sample, grid, cfg);
    ad::Evaluation e;
    e.value = fwd.loss_value;
    e.branches = fwd.tape->branch_pattern();
    if (with_gradient) {
      fwd.tape->backward(fwd.loss);
      for (const auto& v : fwd.params) e.gradient.insert(e.gradient.end(), v.grad().begin(), v.grad().end());
    }
    return e;
  };
  const auto r = ad::grad_check(f, params.flatten(), 1e-5, 1e-4);
  const std::size_t total = params.parameter_count();
  return {r.passed() && r.checked + r.excluded.size() == total && r.checked > 0,
          fmt("max relative error %.3e over %zu parameters (limit 1e-4), %zu excluded at modReLU kinks, %zu failing",
              r.max_relative_error, r.checked, r.excluded.size(), r.failing.size())};
}

// 4. Full-scale synthetic training run.
constexpr std::size_t kTrainingEpochs = 30;

Outcome training() {
  const auto start = Clock::now();
  config::RunConfig cfg;  // mixed cyst + point phantoms, 64 elements, 26 transmits, 128x128 sector grid
  const std::uint64_t seed = 7;
  const auto seq = cfg.sequence();
  const auto grid = cfg.grid.make();
  const auto& pulse = cfg.simulation.pulse;
  const double duration = sim::default_duration(cfg.geometry, pulse, cfg.grid.depth);

  train::TrainConfig tc = cfg.training;
  tc.epochs = kTrainingEpochs;
  tc.seed = 1;

  const std::size_t frames = 200;
  const auto counts = train::split_counts(frames, tc.split);
  train::SplitDataset data;
  data.grid = grid;
  data.sequence = seq;
  for (std::size_t i = 0; i < frames; ++i) {
    const auto phantom = cli::make_frame_phantom(cfg, seed, i);
    const auto frame = sim::simulate_frame(phantom, cfg.geometry, seq, pulse, duration, cli::frame_seed(seed, i, 1));
    auto s = train::make_sample(frame, grid, tc);
    if (i < counts[0]) data.train.push_back(std::move(s));
    else if (i < counts[0] + counts[1]) data.val.push_back(std::move(s));
    else data.test.push_back(std::move(s));
  }
  std::cerr << fmt("  [4] simulated %zu frames in %.0f s\n", frames, seconds_since(start));

  const auto fitted = train::fit(data, tc, std::nullopt, [&](const train::EpochStats& e) {
    std::cerr << fmt("  [4] epoch %zu train %.5f val %.5f (%.0f s, total %.0f s)\n", e.epoch, e.train_loss,
                     e.val_loss, e.seconds, seconds_since(start));
  });
  if (fitted.status != train::FitStatus::Completed) return {false, "training diverged: " + fitted.message};

  train::DelayCache cache(grid);
  const auto report = train::evaluate(fitted.best, data.test, cache, tc);
  {
    std::ofstream csv("acceptance_training_metrics.csv");
    csv << "frame,psnr_baseline,psnr_inr,ssim_baseline,ssim_inr\n";
    for (std::size_t i = 0; i < report.frames.size(); ++i) {
      const auto& f = report.frames[i];
      csv << counts[0] + counts[1] + i << ',' << io::format_double(f.psnr_baseline) << ','
          << io::format_double(f.psnr_inr) << ',' << io::format_double(f.ssim_baseline) << ','
          << io::format_double(f.ssim_inr) << '\n';
    }
  }
  const double dp = report.psnr_inr.mean - report.psnr_baseline.mean;
  const double ds = report.ssim_inr.mean - report.ssim_baseline.mean;
  const double t = seconds_since(start);
  return {dp >= 1.0 && ds >= 0.02 && t <= 7200.0,
          fmt("test PSNR %.3f -> %.3f dB (%+.3f, need +1.0), SSIM %.4f -> %.4f (%+.4f, need +0.02), best epoch "
              "%zu of %zu, %.0f s (limit 7200 s)",
              report.psnr_baseline.mean, report.psnr_inr.mean, dp, report.ssim_baseline.mean, report.ssim_inr.mean, ds,
              fitted.best_epoch, tc.epochs, t)};
}

// 5. Unit network output reproduces the rectangular reconstruction.
Outcome identity() {
  config::RunConfig cfg;
  const auto seq = cfg.sequence();
  const auto grid = cfg.grid.make();
  const auto& pulse = cfg.simulation.pulse;
  const double duration = sim::default_duration(cfg.geometry, pulse, cfg.grid.depth);
  train::TrainConfig tc = cfg.training;
  auto arch = tc.arch;
  arch.input_features = 3 * tc.embedding_length;
  auto params = inr::init_params(3, arch, inr::EncodingConfig::from(grid, seq, tc.embedding_length));
  params.output = inr::OutputMode::Ones;

  double worst_image = 0.0, worst_bmode = 0.0;
  const std::size_t frames = 5;
  train::DelayCache cache(grid);
  for (std::size_t i = 0; i < frames; ++i) {
    const auto phantom = cli::make_frame_phantom(cfg, 55, i);
    const auto frame = sim::simulate_frame(phantom, cfg.geometry, seq, pulse, duration, cli::frame_seed(55, i, 1));
    const auto sample = train::make_sample(frame, grid, tc);
    const auto subset = sample.source_indices;

    std::vector<das::ApodizationMap> ones(subset.size(), das::ApodizationMap::ones(grid, cfg.geometry.num_elements));
    const auto base = das::reconstruct(frame, subset, grid, ones, tc.dynamic_range, sample.gt_norm);

    std::vector<das::ApodizationMap> maps;
    for (const auto& tx : sample.input.sequence().transmits)
      maps.push_back(inr::predict_apodization_map(params, grid, tx.steering_angle));
    const auto image = train::predict_compound(sample, maps, cache);
    double num = 0, den = 0;
    for (std::size_t p = 0; p < image.size(); ++p) {
      num += std::norm(image.pixels[p] - base.compounded.pixels[p]);
      den += std::norm(base.compounded.pixels[p]);
    }
    worst_image = std::max(worst_image, std::sqrt(num / den));

    const auto fwd = train::forward_sample(params, sample, grid, tc);
    num = den = 0;
    for (std::size_t p = 0; p < base.bmode.size(); ++p) {
      num += std::pow(fwd.prediction.values[p] - base.bmode.values[p], 2);
      den += std::pow(base.bmode.values[p], 2);
    }
    worst_bmode = std::max(worst_bmode, std::sqrt(num / den));
  }
  return {worst_image <= 1e-9 && worst_bmode <= 1e-9,
          fmt("max relative L2 over %zu frames: compound %.3e, training-path B-mode %.3e (limit 1e-9)", frames,
              worst_image, worst_bmode)};
}

// 6. Randomized metric and encoding identities.
Outcome metric_sanity() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> side(11, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int cases = 1000;
  double worst_self = 0, worst_sym = 0, worst_mod = 0;
  int psnr_cap_misses = 0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t w = side(rng), h = side(rng);
    BModeImage a(w, h, 60.0), b(w, h, 60.0);
    for (auto& v : a.values) v = u(rng);
    for (auto& v : b.values) v = u(rng);
    if (c % 4 == 0) std::fill(a.values.begin(), a.values.end(), u(rng));  // flat images included
    worst_self = std::max(worst_self, std::abs(metrics::ssim(a, a) - 1.0));
    if (metrics::psnr(a, a) != metrics::kPsnrCap) ++psnr_cap_misses;
    worst_sym = std::max(worst_sym, std::abs(metrics::ssim(a, b) - metrics::ssim(b, a)));
    const auto g = inr::positional_encoding(u(rng), 10);
    for (auto v : g) worst_mod = std::max(worst_mod, std::abs(std::abs(v) - 1.0));
  }
  return {worst_self <= 1e-12 && psnr_cap_misses == 0 && worst_sym <= 1e-12 && worst_mod <= 1e-12,
          fmt("%d cases: |ssim(I,I)-1| <= %.2e, psnr(I,I) cap misses %d, ssim asymmetry <= %.2e, "
              "|gamma|-1 <= %.2e (limit 1e-12)",
              cases, worst_self, psnr_cap_misses, worst_sym, worst_mod)};
}

// 7. Randomized persistence round trips and corruption handling.
Outcome persistence() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> small(1, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<float> n;
  int mismatches = 0, missed_corruptions = 0, corruption_cases = 0;
  const auto dir = fs::temp_directory_path() / "dwinr_acceptance_io";
  fs::create_directories(dir);
  auto expect_reject = [&](auto&& decode) {
    ++corruption_cases;
    try {
      decode();
      ++missed_corruptions;
    } catch (const io::FormatError&) {
    }
  };
  for (int c = 0; c < 100; ++c) {
    io::Dataset d;
    d.geometry.num_elements = small(rng) + 1;
    d.geometry.pitch = 1e-4 * (1.5 + u(rng));
    d.geometry.t0 = 1e-6 * (1.0 + u(rng));
    d.sequence = make_sequence(deg_to_rad(30 + 20 * u(rng)), small(rng), 0.01 + 0.005 * u(rng));
    d.grid = {small(rng) * 16, small(rng) * 16, deg_to_rad(45 + 10 * u(rng)), 0.04 + 0.01 * u(rng)};
    const std::size_t frames = small(rng) - 1;
    for (std::size_t f = 0; f < frames; ++f) {
      IQFrame fr(d.geometry, d.sequence, small(rng) * 3);
      for (auto& v : fr.data()) v = {n(rng), n(rng)};
      d.frames.push_back(std::move(fr));
    }
    const auto bytes = io::encode_dataset(d);
    const auto path = dir / "case.udw";
    io::write_dataset(d, path);
    const auto back = io::read_dataset(path);
    if (!(back.geometry == d.geometry && back.sequence == d.sequence && back.grid == d.grid &&
          back.frames == d.frames && io::read_file(path) == bytes))
      ++mismatches;

    inr::Architecture arch{3 * small(rng), small(rng) * 2, small(rng) + 1, 0, small(rng)};
    if (arch.num_layers >= 2 && c % 2 == 0) arch.skip_layer = 2;
    inr::EncodingConfig enc;
    enc.embedding_length = arch.input_features / 3;
    enc.x = {-0.02 + 0.001 * u(rng), 0.02};
    auto p = inr::init_params(rng(), arch, enc);
    for (auto& l : p.layers)
      for (auto& b : l.activation_bias) b = u(rng);
    p.step = rng() % 100000;
    p.output = c % 7 == 0 ? inr::OutputMode::Ones : inr::OutputMode::Sigmoid;
    const auto ck = io::encode_checkpoint(p);
    const auto ck_path = dir / "case.inrw";
    io::save_checkpoint(p, ck_path);
    if (!(io::load_checkpoint(ck_path) == p) || io::read_file(ck_path) != ck) ++mismatches;

    // Corruptions: truncation at a random point, bad magic, unsupported version.
    std::uniform_int_distribution<std::size_t> cut_d(0, bytes.size() - 1);
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(cut_d(rng)));
    expect_reject([&] { io::decode_dataset(cut); });
    std::uniform_int_distribution<std::size_t> cut_c(0, ck.size() - 1);
    const std::vector<std::uint8_t> cut2(ck.begin(), ck.begin() + static_cast<long>(cut_c(rng)));
    expect_reject([&] { io::decode_checkpoint(cut2); });
    auto magic = bytes;
    magic[static_cast<std::size_t>(c) % 4] ^= 0x20;
    expect_reject([&] { io::decode_dataset(magic); });
    auto version = ck;
    version[4] = static_cast<std::uint8_t>(2 + c % 200);
    expect_reject([&] { io::decode_checkpoint(version); });
    expect_reject([&] { io::decode_checkpoint(bytes); });
  }
  fs::remove_all(dir);
  return {mismatches == 0 && missed_corruptions == 0,
          fmt("100 dataset + 100 checkpoint round trips, %d mismatches; %d corrupted inputs, %d accepted", mismatches,
              corruption_cases, missed_corruptions)};
}

// 8. Byte-identical outputs from repeated CLI runs.
Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "dwinr_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.yaml") << "geometry:\n  num_elements: 16\nsequence:\n  num_transmits: 9\n"
                                     "grid:\n  width: 32\n  height: 32\n  depth: 0.03\n"
                                     "simulation:\n  frames: 10\n  seed: 11\n"
                                     "training:\n  epochs: 3\n  hidden: 16\n  embedding_length: 4\n";
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(DWINR_CLI_PATH) + " " + args + " --threads 1 --config " +
                            (dir / "run.yaml").string() + " > " + (dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  auto p = [&](const char* name) { return (dir / name).string(); };
  bool ok = run("simulate --out " + p("a.udw")) && run("simulate --out " + p("b.udw"));
  ok = ok && run("train --in " + p("a.udw") + " --out " + p("m1.inrw") + " --loss-csv " + p("l1.csv"));
  ok = ok && run("train --in " + p("a.udw") + " --out " + p("m2.inrw") + " --loss-csv " + p("l2.csv"));
  if (!ok) return {false, "a CLI run failed, see " + p("log.txt")};
  const bool same_data = io::read_file(dir / "a.udw") == io::read_file(dir / "b.udw");
  const bool same_csv = io::read_file(dir / "l1.csv") == io::read_file(dir / "l2.csv");
  const bool same_ckpt = io::read_file(dir / "m1.inrw") == io::read_file(dir / "m2.inrw");
  const auto rows = io::read_csv(dir / "l1.csv").rows.size();
  fs::remove_all(dir);
  return {same_data && same_csv && same_ckpt && rows == 3,
          fmt("simulate datasets %s, train loss CSVs %s (%zu epochs), checkpoints %s",
              same_data ? "identical" : "differ", same_csv ? "identical" : "differ", rows,
              same_ckpt ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  cli::tune_allocator();
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "focusing", focusing},       {2, "compounding", compounding},     {3, "gradients", gradients},
      {4, "training", training},       {5, "identity", identity},           {6, "metric-sanity", metric_sanity},
      {7, "persistence", persistence}, {8, "determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail
              << fmt(" (%.1f s)", seconds_since(start)) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
