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


#include "dwinr/cli.hpp"

#include <CLI11.hpp>
#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <random>

#include "dwinr/beamformer.hpp"
#include "dwinr/inr.hpp"
#include "dwinr/io.hpp"
#include "dwinr/parallel.hpp"
#include "dwinr/trainer.hpp"

namespace dwinr::cli {

namespace fs = std::filesystem;

std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

sim::Phantom make_frame_phantom(const config::RunConfig& cfg, std::uint64_t seed, std::size_t index) {
  const auto& s = cfg.simulation;
  const std::uint64_t ps = frame_seed(seed, index, 0);
  switch (s.phantom) {
    case config::PhantomKind::Points:
      return sim::make_point_phantom(s.points);
    case config::PhantomKind::Cyst: {
      const double half = cfg.sector_angle / 2.0;
      const double depth = cfg.grid.depth;
      const sim::Region region{-depth * std::sin(half), depth * std::sin(half), s.mixed.z_min, depth};
      std::mt19937_64 rng(ps);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double r = s.mixed.z_min + s.cyst_radius + u(rng) * (depth - s.mixed.z_min - 2.0 * s.cyst_radius);
      const double theta = (2.0 * u(rng) - 1.0) * half * 0.8;
      auto phantom = sim::make_cyst_phantom(region, s.mixed.density, {r * std::sin(theta), r * std::cos(theta)},
                                            s.cyst_radius, rng());
      // Keep the speckle inside the imaged sector.
      std::erase_if(phantom.scatterers, [&](const sim::Scatterer& sc) {
        return std::hypot(sc.position.x, sc.position.z) > depth || std::abs(std::atan2(sc.position.x, sc.position.z)) > half;
      });
      return phantom;
    }
    case config::PhantomKind::Mixed:
      break;
  }
  return sim::make_mixed_phantom(s.mixed, ps);
}

void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, std::numeric_limits<int>::max());
#endif
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  std::size_t w = 0, h = 0;
  auto num = [](std::string_view s, std::size_t& v) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
  };
  if (x == std::string::npos || !num(std::string_view(text).substr(0, x), w) ||
      !num(std::string_view(text).substr(x + 1), h) || w == 0 || h == 0)
    throw std::invalid_argument("--grid expects WxH with positive integers, got '" + text + "'");
  return {w, h};
}

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string grid;
  std::optional<double> dynamic_range;
  unsigned threads{0};
  std::string config;
};

void add_common(CLI::App* sub, Common& c, bool seed, bool grid, bool dr) {
  if (seed) sub->add_option("--seed", c.seed, "Random seed");
  if (grid) sub->add_option("--grid", c.grid, "Reconstruction grid WxH");
  if (dr) sub->add_option("--dynamic-range", c.dynamic_range, "B-mode dynamic range [dB]");
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  sub->add_option("--config", c.config, "YAML run configuration");
}

config::RunConfig load(const Common& c) {
  std::optional<fs::path> path;
  if (!c.config.empty()) path = c.config;
  auto cfg = config::resolve_config(path);
  if (c.dynamic_range) cfg.training.dynamic_range = *c.dynamic_range;
  if (!c.grid.empty()) std::tie(cfg.grid.width, cfg.grid.height) = parse_grid(c.grid);
  cfg.validate();
  return cfg;
}

PixelGrid dataset_grid(const io::DatasetInfo& info, const Common& c) {
  io::GridDefaults g = info.grid;
  if (!c.grid.empty()) std::tie(g.width, g.height) = parse_grid(c.grid);
  return g.make();
}

std::vector<std::size_t> parse_indices(const std::string& text, std::size_t count) {
  if (text == "all") {
    std::vector<std::size_t> all(count);
    for (std::size_t i = 0; i < count; ++i) all[i] = i;
    return all;
  }
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    std::size_t v = 0;
    const auto r = std::from_chars(text.data() + pos, text.data() + comma, v);
    if (r.ec != std::errc() || r.ptr != text.data() + comma || v >= count)
      throw std::invalid_argument("--transmits: bad index list '" + text + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

int run_simulate(const Common& c, std::string out, std::optional<std::size_t> frames) {
  auto cfg = load(c);
  const std::uint64_t seed = c.seed.value_or(cfg.simulation.seed);
  if (frames) cfg.simulation.frames = *frames;
  if (out.empty()) out = cfg.paths.dataset;
  const Sequence seq = cfg.sequence();
  const auto& pulse = cfg.simulation.pulse;
  const double duration =
      cfg.simulation.duration > 0.0 ? cfg.simulation.duration : sim::default_duration(cfg.geometry, pulse, cfg.grid.depth);
  io::DatasetInfo info{cfg.geometry, seq, cfg.grid, {}};
  info.samples.assign(cfg.simulation.frames, sim::sample_count(duration, cfg.geometry));
  io::write_dataset(
      info,
      [&](std::size_t i) {
        const auto phantom = make_frame_phantom(cfg, seed, i);
        return sim::simulate_frame(phantom, cfg.geometry, seq, pulse, duration, frame_seed(seed, i, 1), c.threads);
      },
      out);
  std::cout << "wrote " << cfg.simulation.frames << " frames to " << out << "\n";
  return 0;
}

int run_beamform(const Common& c, const std::string& in, const std::string& apod, const std::string& checkpoint,
                 const std::string& transmits, std::string out_dir, const std::string& format,
                 std::optional<std::size_t> limit) {
  const auto cfg = load(c);
  io::DatasetReader reader(in);
  const auto& info = reader.info();
  const PixelGrid grid = dataset_grid(info, c);
  const auto subset = transmits.empty() ? spread_indices(info.sequence.size(), cfg.training.input_transmits)
                                        : parse_indices(transmits, info.sequence.size());
  std::vector<das::ApodizationMap> maps;
  if (apod == "ones") {
    maps.assign(subset.size(), das::ApodizationMap::ones(grid, info.geometry.num_elements));
  } else {
    if (checkpoint.empty()) throw std::invalid_argument("--apod checkpoint needs --checkpoint PATH");
    const auto params = io::load_checkpoint(checkpoint);
    if (params.arch.outputs != info.geometry.num_elements)
      throw std::invalid_argument("checkpoint output width does not match the dataset channel count");
    for (auto k : subset) maps.push_back(inr::predict_apodization_map(params, grid, info.sequence.transmits[k].steering_angle));
  }
  if (out_dir.empty()) out_dir = cfg.paths.output_dir;
  fs::create_directories(out_dir);
  const std::size_t n = std::min(reader.size(), limit.value_or(reader.size()));
  for (std::size_t i = 0; i < n; ++i) {
    const auto frame = reader.frame(i);
    const auto rec = das::reconstruct(frame, subset, grid, maps, cfg.training.dynamic_range, 0.0, c.threads);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.%s", i, format.c_str());
    const fs::path path = fs::path(out_dir) / name;
    io::export_image(rec.bmode, path, io::image_format_for(path));
  }
  std::cout << "wrote " << n << " images to " << out_dir << "\n";
  return 0;
}

// Loads one split of a dataset as training samples.
std::vector<train::TrainSample> load_samples(io::DatasetReader& reader, const PixelGrid& grid,
                                             const train::TrainConfig& tc, std::size_t begin, std::size_t end,
                                             unsigned threads) {
  std::vector<train::TrainSample> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(train::make_sample(reader.frame(i), grid, tc, threads));
  return out;
}

int run_train(const Common& c, const std::string& in, std::string out, std::string loss_csv,
              std::optional<std::size_t> epochs, bool force_unit, const std::string& init) {
  auto cfg = load(c);
  auto& tc = cfg.training;
  if (c.seed) tc.seed = *c.seed;
  if (epochs) tc.epochs = *epochs;
  if (out.empty()) out = cfg.paths.checkpoint;
  io::DatasetReader reader(in.empty() ? cfg.paths.dataset : in);
  const auto& info = reader.info();
  tc.arch.outputs = info.geometry.num_elements;
  tc.validate();

  train::SplitDataset data;
  data.grid = dataset_grid(info, c);
  data.sequence = info.sequence;
  const auto counts = train::split_counts(reader.size(), tc.split);
  data.train = load_samples(reader, data.grid, tc, 0, counts[0], c.threads);
  data.val = load_samples(reader, data.grid, tc, counts[0], counts[0] + counts[1], c.threads);

  std::optional<inr::InrParams> initial;
  if (!init.empty()) initial = io::load_checkpoint(init);
  if (force_unit) {
    if (!initial) {
      inr::Architecture arch = tc.arch;
      arch.input_features = 3 * tc.embedding_length;
      initial = inr::init_params(tc.seed, arch, inr::EncodingConfig::from(data.grid, data.sequence, tc.embedding_length));
    }
    initial->output = inr::OutputMode::Ones;
  }

  inr::InrParams result;
  io::Table curve{{"epoch", "train_loss", "val_loss"}, {}};
  if (tc.epochs == 0 || data.train.empty()) {
    if (!initial) {
      inr::Architecture arch = tc.arch;
      arch.input_features = 3 * tc.embedding_length;
      initial = inr::init_params(tc.seed, arch, inr::EncodingConfig::from(data.grid, data.sequence, tc.embedding_length));
    }
    result = *initial;
  } else {
    const auto fitted = train::fit(data, tc, initial, [&](const train::EpochStats& e) {
      std::cerr << "epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss << " (" << e.seconds
                << " s)\n";
    });
    for (const auto& e : fitted.curve)
      curve.rows.push_back({static_cast<double>(e.epoch), e.train_loss, e.val_loss});
    if (fitted.status == train::FitStatus::Diverged) std::cerr << "warning: training diverged: " << fitted.message << "\n";
    result = fitted.best;
  }
  io::save_checkpoint(result, out);
  if (loss_csv.empty()) loss_csv = (fs::path(out).replace_extension(".loss.csv")).string();
  io::write_csv(curve, loss_csv);
  std::cout << "wrote " << out << " and " << loss_csv << "\n";
  return 0;
}

int run_eval(const Common& c, const std::string& in, const std::string& checkpoint, std::string out,
             const std::string& split) {
  auto cfg = load(c);
  auto& tc = cfg.training;
  io::DatasetReader reader(in.empty() ? cfg.paths.dataset : in);
  const auto& info = reader.info();
  const PixelGrid grid = dataset_grid(info, c);
  const auto params = io::load_checkpoint(checkpoint.empty() ? cfg.paths.checkpoint : checkpoint);
  const auto counts = train::split_counts(reader.size(), tc.split);
  std::size_t begin = 0, end = reader.size();
  if (split == "train") end = counts[0];
  else if (split == "val") begin = counts[0], end = counts[0] + counts[1];
  else if (split == "test") begin = counts[0] + counts[1];
  else if (split != "all") throw std::invalid_argument("--split must be train, val, test or all");

  const auto samples = load_samples(reader, grid, tc, begin, end, c.threads);
  train::DelayCache cache(grid);
  const auto report = train::evaluate(params, samples, cache, tc);
  io::Table table{{"frame", "psnr_baseline", "psnr_inr", "ssim_baseline", "ssim_inr"}, {}};
  for (std::size_t i = 0; i < report.frames.size(); ++i) {
    const auto& f = report.frames[i];
    table.rows.push_back({static_cast<double>(begin + i), f.psnr_baseline, f.psnr_inr, f.ssim_baseline, f.ssim_inr});
  }
  if (out.empty()) out = (fs::path(cfg.paths.output_dir) / "metrics.csv").string();
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  io::write_csv(table, out);
  auto line = [](const char* name, const metrics::Summary& b, const metrics::Summary& m) {
    std::cout << name << " baseline " << b.mean << " +- " << b.stddev << "  inr " << m.mean << " +- " << m.stddev
              << "\n";
  };
  line("psnr", report.psnr_baseline, report.psnr_inr);
  line("ssim", report.ssim_baseline, report.ssim_inr);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_export(const std::string& csv, std::string out, const std::string& title) {
  const auto table = io::read_csv(csv);
  if (out.empty()) out = fs::path(csv).replace_extension(".svg").string();
  const auto svg = io::render_svg_plot(table, title.empty() ? fs::path(csv).stem().string() : title);
  io::write_file(out, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(svg.data()), svg.size()));
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Learned receive apodization for diverging-wave ultrasound", "dwinr"};
  app.require_subcommand(1);
  Common c;

  auto* simulate = app.add_subcommand("simulate", "Simulate phantoms into a dataset file");
  std::string sim_out;
  std::optional<std::size_t> sim_frames;
  add_common(simulate, c, true, true, false);
  simulate->add_option("--out", sim_out, "Dataset file to write");
  simulate->add_option("--frames", sim_frames, "Number of frames");

  auto* beamform = app.add_subcommand("beamform", "Reconstruct B-mode images from a dataset");
  std::string bf_in, bf_apod = "ones", bf_ckpt, bf_tx, bf_out, bf_format = "pgm";
  std::optional<std::size_t> bf_limit;
  add_common(beamform, c, false, true, true);
  beamform->add_option("--in", bf_in, "Dataset file")->required();
  beamform->add_option("--apod", bf_apod, "Apodization source")->check(CLI::IsMember({"ones", "checkpoint"}));
  beamform->add_option("--checkpoint", bf_ckpt, "Checkpoint for --apod checkpoint");
  beamform->add_option("--transmits", bf_tx, "Transmit indices, comma separated, or 'all' (default: 3 spread)");
  beamform->add_option("--out-dir", bf_out, "Image directory");
  beamform->add_option("--format", bf_format, "Image format")->check(CLI::IsMember({"pgm", "png"}));
  beamform->add_option("--limit", bf_limit, "Reconstruct only the first N frames");

  auto* trainc = app.add_subcommand("train", "Train the apodization network");
  std::string tr_in, tr_out, tr_csv, tr_init;
  std::optional<std::size_t> tr_epochs;
  bool tr_unit = false;
  add_common(trainc, c, true, true, true);
  trainc->add_option("--in", tr_in, "Dataset file");
  trainc->add_option("--out", tr_out, "Checkpoint to write");
  trainc->add_option("--loss-csv", tr_csv, "Loss curve CSV");
  trainc->add_option("--epochs", tr_epochs, "Epochs");
  trainc->add_option("--init", tr_init, "Start from this checkpoint");
  trainc->add_flag("--force-unit-output", tr_unit, "Store a checkpoint whose outputs are all ones");

  auto* evalc = app.add_subcommand("eval", "Compare INR and rectangular reconstructions");
  std::string ev_in, ev_ckpt, ev_out, ev_split = "test";
  add_common(evalc, c, false, true, true);
  evalc->add_option("--in", ev_in, "Dataset file");
  evalc->add_option("--checkpoint", ev_ckpt, "Checkpoint");
  evalc->add_option("--out", ev_out, "Metrics CSV");
  evalc->add_option("--split", ev_split, "train, val, test or all");

  auto* exportc = app.add_subcommand("export", "Plot a loss or metrics CSV as SVG");
  std::string ex_csv, ex_out, ex_title;
  exportc->add_option("--csv", ex_csv, "Input CSV")->required();
  exportc->add_option("--out", ex_out, "SVG file");
  exportc->add_option("--title", ex_title, "Plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "dwinr: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*simulate) return run_simulate(c, sim_out, sim_frames);
    if (*beamform) return run_beamform(c, bf_in, bf_apod, bf_ckpt, bf_tx, bf_out, bf_format, bf_limit);
    if (*trainc) return run_train(c, tr_in, tr_out, tr_csv, tr_epochs, tr_unit, tr_init);
    if (*evalc) return run_eval(c, ev_in, ev_ckpt, ev_out, ev_split);
    if (*exportc) return run_export(ex_csv, ex_out, ex_title);
  } catch (const std::exception& e) {
    std::cerr << "dwinr: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dwinr::cli
