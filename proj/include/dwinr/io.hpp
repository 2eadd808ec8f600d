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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwinr/core.hpp"
#include "dwinr/inr.hpp"

namespace dwinr::io {

/// Malformed or truncated file. `offset` is the byte position where reading failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset, std::uint64_t expected = 0, std::uint64_t actual = 0);
  std::uint64_t offset() const { return offset_; }
  std::uint64_t expected() const { return expected_; }
  std::uint64_t actual() const { return actual_; }

 private:
  std::uint64_t offset_;
  std::uint64_t expected_;
  std::uint64_t actual_;
};

/// Sector grid stored with a dataset as the default reconstruction grid.
struct GridDefaults {
  std::size_t width{128};
  std::size_t height{128};
  double sector_angle{deg_to_rad(60.0)};
  double depth{0.045};

  PixelGrid make() const { return make_sector_grid(width, height, sector_angle, depth); }
  friend bool operator==(const GridDefaults&, const GridDefaults&) = default;
};

/*
 * Dataset layout (all integers little-endian):
 *   "UDW1" | u32 version | u64 header length H | H bytes of key=value text | payload
 * The text header carries geometry, sequence, grid defaults, the frame count, samples
 * per frame and each frame's byte offset relative to the payload start. Each frame is
 * M x N x T complex samples as interleaved float32 (transmit, channel, time).
 */
inline constexpr std::uint32_t kDatasetVersion = 1;

struct Dataset {
  ArrayGeometry geometry;
  Sequence sequence;
  GridDefaults grid;
  std::vector<IQFrame> frames;
};

/// Everything in a dataset header; `samples` holds T for each frame.
struct DatasetInfo {
  ArrayGeometry geometry;
  Sequence sequence;
  GridDefaults grid;
  std::vector<std::uint64_t> samples;

  std::size_t frame_count() const { return samples.size(); }
  std::uint64_t frame_bytes(std::size_t i) const;
};

std::vector<std::uint8_t> encode_dataset(const Dataset& data);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

/// Writes frames one at a time; produce(i) must return a frame matching `info`.
void write_dataset(const DatasetInfo& info, const std::function<IQFrame(std::size_t)>& produce,
                   const std::filesystem::path& path);

/// Random access to the frames of a dataset file without loading the whole payload.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);
  const DatasetInfo& info() const { return info_; }
  std::size_t size() const { return info_.frame_count(); }
  IQFrame frame(std::size_t i);

 private:
  std::ifstream in_;
  DatasetInfo info_;
  std::vector<std::uint64_t> offsets_;  // absolute
};

/*
 * Checkpoint layout: "INRW" | u32 version | u64 header length | key=value text | payload.
 * The payload is every InrParams tensor as float64, in InrParams::tensors() order
 * (per layer: W, b, modReLU bias).
 */
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const inr::InrParams& params);
inr::InrParams decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const inr::InrParams& params, const std::filesystem::path& path);
inr::InrParams load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

enum class ImageFormat { Pgm, Png };

/// round(255 v), halves away from zero. Throws when a value is outside [0, 1].
std::vector<std::uint8_t> quantize(const BModeImage& image);

/// Format from the extension (.pgm or .png).
ImageFormat image_format_for(const std::filesystem::path& path);

void export_image(const BModeImage& image, const std::filesystem::path& path, ImageFormat format);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(const Table& table, const std::filesystem::path& path);
Table read_csv(const std::filesystem::path& path);

/// Line plot of every column against the first one.
std::string render_svg_plot(const Table& table, const std::string& title);

}  // namespace dwinr::io
