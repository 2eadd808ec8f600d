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

#include "dwinr/core.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dwinr {

void ArrayGeometry::validate() const {
  if (num_elements < 2) throw std::invalid_argument("array geometry: need at least 2 elements");
  if (!(pitch > 0.0)) throw std::invalid_argument("array geometry: pitch must be positive");
  if (!(center_frequency > 0.0)) throw std::invalid_argument("array geometry: center frequency must be positive");
  if (!(sampling_frequency > 0.0)) throw std::invalid_argument("array geometry: sampling frequency must be positive");
  if (!(speed_of_sound > 0.0)) throw std::invalid_argument("array geometry: speed of sound must be positive");
  if (!std::isfinite(demod_frequency) || !std::isfinite(t0))
    throw std::invalid_argument("array geometry: demodulation frequency and t0 must be finite");
}

double Sequence::min_angle() const {
  if (transmits.empty()) return 0.0;
  return transmits.front().steering_angle;
}

double Sequence::max_angle() const {
  if (transmits.empty()) return 0.0;
  return transmits.back().steering_angle;
}

void Sequence::validate() const {
  constexpr double slack = 1e-12;
  if (!(sector_angle > 0.0)) throw std::invalid_argument("sequence: sector angle must be positive");
  for (std::size_t k = 0; k < transmits.size(); ++k) {
    const auto& tx = transmits[k];
    if (!(tx.virtual_source_distance > 0.0))
      throw std::invalid_argument("sequence: virtual source distance must be positive");
    if (std::abs(tx.steering_angle) > sector_angle / 2.0 + slack)
      throw std::invalid_argument("sequence: steering angle outside the sector");
    if (k > 0 && !(tx.steering_angle > transmits[k - 1].steering_angle))
      throw std::invalid_argument("sequence: steering angles must be strictly increasing");
  }
}

std::vector<Vec2> element_positions(const ArrayGeometry& geom) {
  std::vector<Vec2> positions(geom.num_elements);
  const double center = (static_cast<double>(geom.num_elements) - 1.0) / 2.0;
  for (std::size_t n = 0; n < geom.num_elements; ++n) {
    positions[n] = {(static_cast<double>(n) - center) * geom.pitch, 0.0};
  }
  return positions;
}

Vec2 virtual_source_position(const TransmitEvent& tx) {
  const double d = tx.virtual_source_distance;
  return {-d * std::sin(tx.steering_angle), -d * std::cos(tx.steering_angle)};
}

Sequence make_sequence(double sector_angle, std::size_t num_transmits, double virtual_source_distance) {
  if (num_transmits == 0) throw std::invalid_argument("make_sequence: need at least one transmit");
  Sequence seq;
  seq.sector_angle = sector_angle;
  seq.transmits.resize(num_transmits);
  for (std::size_t k = 0; k < num_transmits; ++k) {
    double angle = 0.0;
    if (num_transmits > 1) {
      angle = -sector_angle / 2.0 + static_cast<double>(k) * sector_angle / static_cast<double>(num_transmits - 1);
    }
    seq.transmits[k] = {virtual_source_distance, angle};
  }
  // Pin the symmetric endpoints exactly; the spacing formula can round the last one.
  if (num_transmits > 1) {
    seq.transmits.front().steering_angle = -sector_angle / 2.0;
    seq.transmits.back().steering_angle = sector_angle / 2.0;
  }
  seq.validate();
  return seq;
}

std::vector<std::size_t> spread_indices(std::size_t num_transmits, std::size_t count) {
  if (count == 0) throw std::invalid_argument("spread_indices: count must be positive");
  if (num_transmits < count) {
    throw std::invalid_argument("spread_indices: sequence has " + std::to_string(num_transmits) +
                                " transmits, need at least " + std::to_string(count));
  }
  if (count == 1) return {(num_transmits - 1) / 2};
  std::vector<std::size_t> indices(count);
  for (std::size_t k = 0; k < count; ++k) indices[k] = k * (num_transmits - 1) / (count - 1);
  return indices;
}

Sequence select_transmits(const Sequence& seq, std::span<const std::size_t> indices) {
  Sequence out;
  out.sector_angle = seq.sector_angle;
  out.transmits.reserve(indices.size());
  for (auto i : indices) {
    if (i >= seq.size()) throw std::out_of_range("select_transmits: transmit index out of range");
    out.transmits.push_back(seq.transmits[i]);
  }
  return out;
}

Sequence select_subsequence(const Sequence& seq, std::size_t count) {
  const auto indices = spread_indices(seq.size(), count);
  return select_transmits(seq, indices);
}

double PixelGrid::x(std::size_t col) const {
  if (width == 1) return 0.5 * (x_min + x_max);
  return x_min + static_cast<double>(col) * (x_max - x_min) / static_cast<double>(width - 1);
}

double PixelGrid::z(std::size_t row) const {
  if (height == 1) return 0.5 * (z_min + z_max);
  return z_min + static_cast<double>(row) * (z_max - z_min) / static_cast<double>(height - 1);
}

std::size_t PixelGrid::mask_count() const {
  return static_cast<std::size_t>(std::count_if(sector_mask.begin(), sector_mask.end(), [](auto m) { return m != 0; }));
}

std::vector<std::size_t> PixelGrid::masked_pixels() const {
  std::vector<std::size_t> out;
  out.reserve(mask_count());
  for (std::size_t p = 0; p < sector_mask.size(); ++p) {
    if (sector_mask[p] != 0) out.push_back(p);
  }
  return out;
}

void PixelGrid::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("pixel grid: width and height must be >= 1");
  if ((width > 1 && !(x_max > x_min)) || (height > 1 && !(z_max > z_min)))
    throw std::invalid_argument("pixel grid: degenerate extents");
  if (sector_mask.size() != width * height)
    throw std::invalid_argument("pixel grid: mask size does not match width x height");
}

PixelGrid make_grid(std::size_t width, std::size_t height, double x_min, double x_max, double z_min, double z_max,
                    double sector_angle, double depth) {
  PixelGrid grid;
  grid.width = width;
  grid.height = height;
  grid.x_min = x_min;
  grid.x_max = x_max;
  grid.z_min = z_min;
  grid.z_max = z_max;
  grid.sector_mask.assign(width * height, 0);
  const double half = sector_angle / 2.0;
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      const double px = grid.x(col);
      const double pz = grid.z(row);
      const double angle = std::atan2(std::abs(px), pz);
      const bool inside = pz >= 0.0 && angle <= half + 1e-12 && std::hypot(px, pz) <= depth + 1e-12;
      grid.sector_mask[grid.index(col, row)] = inside ? 1 : 0;
    }
  }
  grid.validate();
  return grid;
}

PixelGrid make_sector_grid(std::size_t width, std::size_t height, double sector_angle, double depth) {
  const double half_width = depth * std::sin(sector_angle / 2.0);
  return make_grid(width, height, -half_width, half_width, 0.0, depth, sector_angle, depth);
}

IQFrame::IQFrame(ArrayGeometry geometry, Sequence sequence, std::size_t num_samples)
    : geometry_(std::move(geometry)),
      sequence_(std::move(sequence)),
      num_samples_(num_samples),
      data_(sequence_.size() * geometry_.num_elements * num_samples) {}

std::span<const cfloat> IQFrame::channel(std::size_t tx, std::size_t ch) const {
  return std::span<const cfloat>(data_).subspan((tx * num_channels() + ch) * num_samples_, num_samples_);
}

std::span<cfloat> IQFrame::channel(std::size_t tx, std::size_t ch) {
  return std::span<cfloat>(data_).subspan((tx * num_channels() + ch) * num_samples_, num_samples_);
}

IQFrame IQFrame::select_transmits(std::span<const std::size_t> indices) const {
  IQFrame out(geometry_, dwinr::select_transmits(sequence_, indices), num_samples_);
  const std::size_t block = num_channels() * num_samples_;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[k] * block), block,
                out.data_.begin() + static_cast<std::ptrdiff_t>(k * block));
  }
  return out;
}

bool IQFrame::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cfloat& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

}  // namespace dwinr
