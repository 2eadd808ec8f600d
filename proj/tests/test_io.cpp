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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "dwinr/config.hpp"
#include "dwinr/io.hpp"

using namespace dwinr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dwinr_test_io";
  fs::create_directories(dir);
  return dir / name;
}

IQFrame random_frame(const ArrayGeometry& g, const Sequence& s, std::size_t samples, std::mt19937_64& rng) {
  IQFrame f(g, s, samples);
  std::normal_distribution<float> n;
  for (auto& v : f.data()) v = {n(rng), n(rng)};
  return f;
}

io::Dataset small_dataset(std::size_t frames, std::uint64_t seed) {
  io::Dataset d;
  d.geometry.num_elements = 3;
  d.sequence = make_sequence(deg_to_rad(50), 2, 0.02);
  d.grid = {20, 10, deg_to_rad(50), 0.03};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < frames; ++i) d.frames.push_back(random_frame(d.geometry, d.sequence, 5 + i, rng));
  return d;
}

}  // namespace

TEST_CASE("dataset round trip is bit exact") {
  const auto d = small_dataset(3, 1);
  const auto bytes = io::encode_dataset(d);
  const auto back = io::decode_dataset(bytes);
  CHECK(back.geometry == d.geometry);
  CHECK(back.sequence == d.sequence);
  CHECK(back.grid == d.grid);
  REQUIRE(back.frames.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back.frames[i] == d.frames[i]);
  CHECK(io::encode_dataset(back) == bytes);

  const auto path = scratch("round.udw");
  io::write_dataset(d, path);
  CHECK(io::read_file(path) == bytes);
  io::DatasetReader reader(path);
  CHECK(reader.size() == 3);
  CHECK(reader.frame(2) == d.frames[2]);
  CHECK(reader.frame(0) == d.frames[0]);
  CHECK_THROWS_AS(reader.frame(3), std::out_of_range);
}

TEST_CASE("streaming writer matches the in-memory encoder") {
  const auto d = small_dataset(4, 2);
  io::DatasetInfo info{d.geometry, d.sequence, d.grid, {}};
  for (const auto& f : d.frames) info.samples.push_back(f.num_samples());
  const auto path = scratch("stream.udw");
  io::write_dataset(info, [&](std::size_t i) { return d.frames[i]; }, path);
  CHECK(io::read_file(path) == io::encode_dataset(d));
  CHECK_THROWS_AS(io::write_dataset(info, [&](std::size_t) { return d.frames[0]; }, path), std::invalid_argument);
}

TEST_CASE("payload size of a 1x2x4 frame") {
  io::Dataset d;
  d.geometry.num_elements = 2;
  d.sequence = make_sequence(deg_to_rad(60), 1, 0.015);
  std::mt19937_64 rng(3);
  d.frames.push_back(random_frame(d.geometry, d.sequence, 4, rng));
  const auto bytes = io::encode_dataset(d);
  const auto empty = io::encode_dataset({d.geometry, d.sequence, d.grid, {}});
  io::DatasetInfo info{d.geometry, d.sequence, d.grid, {4}};
  CHECK(info.frame_bytes(0) == 64);
  // Same header apart from the frame tables; the payload is the last 64 bytes.
  std::vector<float> expect;
  for (auto v : d.frames[0].data()) {
    expect.push_back(v.real());
    expect.push_back(v.imag());
  }
  REQUIRE(bytes.size() > 64);
  CHECK(std::memcmp(bytes.data() + bytes.size() - 64, expect.data(), 64) == 0);
  CHECK(empty.size() < bytes.size());
}

TEST_CASE("empty dataset") {
  io::Dataset d;
  d.sequence = make_sequence(deg_to_rad(60), 3, 0.015);
  const auto back = io::decode_dataset(io::encode_dataset(d));
  CHECK(back.frames.empty());
  CHECK(back.sequence == d.sequence);
}

TEST_CASE("corrupted datasets are rejected") {
  const auto bytes = io::encode_dataset(small_dataset(2, 4));
  SUBCASE("truncated payload") {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 1);
    try {
      io::decode_dataset(cut);
      FAIL("expected FormatError");
    } catch (const io::FormatError& e) {
      CHECK(std::string(e.what()).find("payload length mismatch") != std::string::npos);
      CHECK(e.expected() == e.actual() + 1);
    }
  }
  SUBCASE("truncated preamble") {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 7);
    CHECK_THROWS_AS(io::decode_dataset(cut), io::FormatError);
  }
  SUBCASE("truncated header") {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 40);
    CHECK_THROWS_AS(io::decode_dataset(cut), io::FormatError);
  }
  SUBCASE("bad magic") {
    auto b = bytes;
    b[0] = 'X';
    try {
      io::decode_dataset(b);
      FAIL("expected FormatError");
    } catch (const io::FormatError& e) {
      CHECK(e.offset() == 0);
    }
  }
  SUBCASE("future version") {
    auto b = bytes;
    b[4] = 2;
    try {
      io::decode_dataset(b);
      FAIL("expected FormatError");
    } catch (const io::FormatError& e) {
      CHECK(e.offset() == 4);
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
  }
  SUBCASE("checkpoint bytes are not a dataset") {
    inr::Architecture arch{6, 3, 2, 0, 3};
    inr::EncodingConfig enc;
    enc.embedding_length = 2;
    CHECK_THROWS_AS(io::decode_dataset(io::encode_checkpoint(inr::init_params(1, arch, enc))), io::FormatError);
  }
}

TEST_CASE("checkpoint round trip") {
  inr::Architecture arch{12, 8, 4, 3, 5};
  inr::EncodingConfig enc;
  enc.embedding_length = 4;
  enc.x = {-0.02, 0.02};
  enc.z = {0.0, 0.045};
  enc.angle = {-0.5, 0.5};
  auto p = inr::init_params(9, arch, enc);
  p.step = 1234;
  for (auto& l : p.layers)
    for (auto& b : l.activation_bias) b = -0.125;
  const auto bytes = io::encode_checkpoint(p);
  const auto q = io::decode_checkpoint(bytes);
  CHECK(q == p);
  for (double x : {0.1, 0.5, 0.9}) CHECK(inr::forward(q, x, 1.0 - x, 0.3) == inr::forward(p, x, 1.0 - x, 0.3));

  auto ones = p;
  ones.output = inr::OutputMode::Ones;
  CHECK(io::decode_checkpoint(io::encode_checkpoint(ones)).output == inr::OutputMode::Ones);

  const auto path = scratch("model.inrw");
  io::save_checkpoint(p, path);
  CHECK(io::load_checkpoint(path) == p);

  auto cut = bytes;
  cut.resize(cut.size() - 8);
  CHECK_THROWS_AS(io::decode_checkpoint(cut), io::FormatError);
  auto bad = bytes;
  const double nan = std::nan("");
  std::memcpy(bad.data() + bad.size() - 8, &nan, 8);
  CHECK_THROWS_AS(io::decode_checkpoint(bad), io::FormatError);
  CHECK_THROWS_AS(io::decode_checkpoint(io::encode_dataset(small_dataset(1, 1))), io::FormatError);
}

TEST_CASE("quantization") {
  BModeImage img(4, 1, 60.0);
  img.values = {0.0, 0.5, 1.0, 0.25};
  const auto q = io::quantize(img);
  CHECK(q == std::vector<std::uint8_t>{0, 128, 255, 64});
  img.values[1] = 1.0000001;
  CHECK_THROWS_AS(io::quantize(img), std::invalid_argument);
  img.values[1] = std::nan("");
  CHECK_THROWS_AS(io::quantize(img), std::invalid_argument);
}

TEST_CASE("image export") {
  BModeImage img(3, 2, 60.0);
  img.values = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  const auto pgm = scratch("img.pgm");
  io::export_image(img, pgm, io::image_format_for(pgm));
  const auto bytes = io::read_file(pgm);
  const std::string head = "P5\n3 2\n255\n";
  REQUIRE(bytes.size() == head.size() + 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + static_cast<long>(head.size())) == head);
  CHECK(std::vector<std::uint8_t>(bytes.end() - 6, bytes.end()) == io::quantize(img));

  const auto png = scratch("img.png");
  io::export_image(img, png, io::image_format_for(png));
  const auto pb = io::read_file(png);
  const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  REQUIRE(pb.size() > 8);
  CHECK(std::memcmp(pb.data(), sig, 8) == 0);
  io::export_image(img, png, io::ImageFormat::Png);
  CHECK(io::read_file(png) == pb);
  CHECK_THROWS(io::image_format_for("x.bmp"));
}

TEST_CASE("csv and plot") {
  io::Table t{{"epoch", "train_loss", "val_loss"}, {{1, 0.5, 0.6}, {2, 0.1 + 0.2, 1e-300}}};
  const auto path = scratch("curve.csv");
  io::write_csv(t, path);
  const auto back = io::read_csv(path);
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  CHECK(io::format_double(0.1 + 0.2) == "0.30000000000000004");
  const auto svg = io::render_svg_plot(t, "loss");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("train_loss") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("run configuration") {
  const auto cfg = config::parse_config(R"(
geometry:
  num_elements: 32
sequence:
  num_transmits: 11
  sector_angle_deg: 40
training:
  learning_rate: 0.001
  split: [0.8, 0.1, 0.1]
simulation:
  phantom: points
  points: [[0.0, 0.02], [0.001, 0.03]]
)");
  CHECK(cfg.geometry.num_elements == 32);
  CHECK(cfg.num_transmits == 11);
  CHECK(cfg.sector_angle == doctest::Approx(deg_to_rad(40)));
  CHECK(cfg.training.learning_rate == 0.001);
  CHECK(cfg.training.split[0] == 0.8);
  CHECK(cfg.simulation.phantom == config::PhantomKind::Points);
  REQUIRE(cfg.simulation.points.size() == 2);
  CHECK(cfg.simulation.points[1].z == 0.03);
  CHECK(cfg.geometry.pitch == ArrayGeometry{}.pitch);

  CHECK_THROWS_AS(config::parse_config("geometry:\n  num_element: 3\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config("bogus: 1\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config("training:\n  beta: lots\n"), config::ConfigError);

  const auto again = config::parse_config(config::dump_config(cfg));
  CHECK(config::dump_config(again) == config::dump_config(cfg));
  CHECK(again.geometry == cfg.geometry);
}
