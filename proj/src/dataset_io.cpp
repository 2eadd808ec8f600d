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


#include <algorithm>

#include "binary.hpp"
#include "dwinr/io.hpp"

namespace dwinr::io {

using detail::Header;

std::uint64_t DatasetInfo::frame_bytes(std::size_t i) const {
  return sequence.size() * geometry.num_elements * samples.at(i) * 2 * sizeof(float);
}

namespace {

std::string header_text(const DatasetInfo& info) {
  const auto& g = info.geometry;
  Header h;
  h.set("num_elements", std::uint64_t{g.num_elements});
  h.set("pitch", g.pitch);
  h.set("center_frequency", g.center_frequency);
  h.set("sampling_frequency", g.sampling_frequency);
  h.set("demod_frequency", g.demod_frequency);
  h.set("speed_of_sound", g.speed_of_sound);
  h.set("t0", g.t0);
  std::vector<double> angles, distances;
  for (const auto& tx : info.sequence.transmits) {
    angles.push_back(tx.steering_angle);
    distances.push_back(tx.virtual_source_distance);
  }
  h.set("sector_angle", info.sequence.sector_angle);
  h.set("steering_angles", std::span<const double>(angles));
  h.set("virtual_source_distances", std::span<const double>(distances));
  h.set("grid_width", std::uint64_t{info.grid.width});
  h.set("grid_height", std::uint64_t{info.grid.height});
  h.set("grid_sector_angle", info.grid.sector_angle);
  h.set("grid_depth", info.grid.depth);
  h.set("frame_count", std::uint64_t{info.frame_count()});
  std::vector<std::uint64_t> offsets;
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < info.frame_count(); ++i) {
    offsets.push_back(offset);
    offset += info.frame_bytes(i);
  }
  h.set("samples", std::span<const std::uint64_t>(info.samples));
  h.set("offsets", std::span<const std::uint64_t>(offsets));
  return h.text();
}

void check_frame(const DatasetInfo& info, const IQFrame& f, std::size_t i) {
  if (!(f.geometry() == info.geometry) || !(f.sequence() == info.sequence) || f.num_samples() != info.samples[i])
    throw std::invalid_argument("write_dataset: frame " + std::to_string(i) +
                                " does not match the dataset geometry, sequence or length");
}

void append_frame(std::vector<std::uint8_t>& out, const IQFrame& f) {
  for (const cfloat& s : f.data()) {
    detail::put_f32(out, s.real());
    detail::put_f32(out, s.imag());
  }
}

void read_frame(IQFrame& frame, const std::uint8_t* p) {
  for (cfloat& s : frame.data()) {
    s = {detail::get_f32(p), detail::get_f32(p + 4)};
    p += 8;
  }
}

/// Parses and checks the header against the file size; returns absolute frame offsets.
std::vector<std::uint64_t> parse_info(const detail::Opened& opened, std::uint64_t file_size, DatasetInfo& info) {
  const Header& h = opened.header;
  auto& g = info.geometry;
  g.num_elements = h.integer("num_elements");
  g.pitch = h.number("pitch");
  g.center_frequency = h.number("center_frequency");
  g.sampling_frequency = h.number("sampling_frequency");
  g.demod_frequency = h.number("demod_frequency");
  g.speed_of_sound = h.number("speed_of_sound");
  g.t0 = h.number("t0");
  info.sequence.sector_angle = h.number("sector_angle");
  const auto angles = h.numbers("steering_angles");
  const auto distances = h.numbers("virtual_source_distances");
  if (angles.size() != distances.size())
    throw FormatError("steering angle and virtual source lists differ in length", detail::kPreambleSize,
                      angles.size(), distances.size());
  for (std::size_t i = 0; i < angles.size(); ++i) info.sequence.transmits.push_back({distances[i], angles[i]});
  info.grid.width = h.integer("grid_width");
  info.grid.height = h.integer("grid_height");
  info.grid.sector_angle = h.number("grid_sector_angle");
  info.grid.depth = h.number("grid_depth");
  try {
    g.validate();
    info.sequence.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid header: ") + e.what(), detail::kPreambleSize);
  }

  const std::uint64_t count = h.integer("frame_count");
  info.samples = h.integers("samples");
  const auto offsets = h.integers("offsets");
  if (info.samples.size() != count || offsets.size() != count)
    throw FormatError("frame tables do not match frame_count", detail::kPreambleSize, count,
                      std::min(info.samples.size(), offsets.size()));

  const std::uint64_t base = opened.payload_offset;
  std::vector<std::uint64_t> absolute;
  std::uint64_t expected = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (offsets[i] != expected)
      throw FormatError("frame " + std::to_string(i) + " offset " + std::to_string(offsets[i]) +
                            " is not contiguous, expected " + std::to_string(expected),
                        base + expected, expected, offsets[i]);
    absolute.push_back(base + expected);
    expected += info.frame_bytes(i);
  }
  const std::uint64_t actual = file_size - base;
  if (actual != expected)
    throw FormatError("payload length mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(actual),
                      base + std::min(actual, expected), expected, actual);
  return absolute;
}

DatasetInfo info_of(const Dataset& data) {
  DatasetInfo info{data.geometry, data.sequence, data.grid, {}};
  for (const auto& f : data.frames) info.samples.push_back(f.num_samples());
  return info;
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& data) {
  data.geometry.validate();
  data.sequence.validate();
  const DatasetInfo info = info_of(data);
  auto out = detail::preamble("UDW1", kDatasetVersion, header_text(info));
  for (std::size_t i = 0; i < data.frames.size(); ++i) {
    check_frame(info, data.frames[i], i);
    append_frame(out, data.frames[i]);
  }
  return out;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  const auto opened = detail::open(bytes, "UDW1", kDatasetVersion);
  DatasetInfo info;
  const auto offsets = parse_info(opened, bytes.size(), info);
  Dataset data{info.geometry, info.sequence, info.grid, {}};
  data.frames.reserve(info.frame_count());
  for (std::size_t i = 0; i < info.frame_count(); ++i) {
    IQFrame frame(info.geometry, info.sequence, info.samples[i]);
    read_frame(frame, bytes.data() + offsets[i]);
    data.frames.push_back(std::move(frame));
  }
  return data;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  write_file(path, encode_dataset(data));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

void write_dataset(const DatasetInfo& info, const std::function<IQFrame(std::size_t)>& produce,
                   const std::filesystem::path& path) {
  info.geometry.validate();
  info.sequence.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto head = detail::preamble("UDW1", kDatasetVersion, header_text(info));
  out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  std::vector<std::uint8_t> buf;
  for (std::size_t i = 0; i < info.frame_count(); ++i) {
    const IQFrame frame = produce(i);
    check_frame(info, frame, i);
    buf.clear();
    append_frame(buf, frame);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  out.close();
  if (!out) throw std::runtime_error("write error on " + path.string());
}

DatasetReader::DatasetReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw std::runtime_error("cannot open " + path.string() + " for reading");
  const std::uint64_t size = std::filesystem::file_size(path);
  std::vector<std::uint8_t> head(std::min<std::uint64_t>(size, detail::kPreambleSize));
  in_.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  if (head.size() == detail::kPreambleSize) {
    const std::uint64_t len = detail::get_u64(head.data() + 8);
    if (len <= size - detail::kPreambleSize) {
      head.resize(detail::kPreambleSize + len);
      in_.read(reinterpret_cast<char*>(head.data() + detail::kPreambleSize), static_cast<std::streamsize>(len));
    }
  }
  const auto opened = detail::open(head, "UDW1", kDatasetVersion);
  offsets_ = parse_info(opened, size, info_);
}

IQFrame DatasetReader::frame(std::size_t i) {
  if (i >= size()) throw std::out_of_range("DatasetReader: frame index out of range");
  IQFrame frame(info_.geometry, info_.sequence, info_.samples[i]);
  std::vector<std::uint8_t> buf(info_.frame_bytes(i));
  in_.seekg(static_cast<std::streamoff>(offsets_[i]));
  in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in_) throw FormatError("short read of frame " + std::to_string(i), offsets_[i], buf.size(), in_.gcount());
  read_frame(frame, buf.data());
  return frame;
}

}  // namespace dwinr::io
