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

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace dwinr {

using cfloat = std::complex<float>;
using cdouble = std::complex<double>;

/// Point in the imaging plane. x is lateral, z is axial depth (positive into tissue).
struct Vec2 {
  double x{0.0};
  double z{0.0};

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.z - b.z); }

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/**
 * Uniform linear receive aperture and the sampling parameters of its IQ data.
 *
 * Elements lie on the z = 0 line centered on the origin. The default pitch is
 * half a wavelength at the center frequency.
 */
struct ArrayGeometry {
  std::size_t num_elements{64};
  double pitch{1540.0 / (2.0 * 6.0e6)};  // [m]
  double center_frequency{6.0e6};        // [Hz]
  double sampling_frequency{24.0e6};     // [Hz] IQ sampling rate
  double demod_frequency{6.0e6};         // [Hz]
  double speed_of_sound{1540.0};         // [m/s]
  double t0{0.0};                        // [s] time of the first sample

  /// Throws std::invalid_argument when a field violates its range.
  void validate() const;

  double wavelength() const { return speed_of_sound / center_frequency; }
  double aperture_width() const { return pitch * static_cast<double>(num_elements - 1); }

  friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;
};

/// One diverging-wave transmit: virtual source behind the array, steered by `steering_angle`.
struct TransmitEvent {
  double virtual_source_distance{0.015};  // [m]
  double steering_angle{0.0};             // [rad], positive steers toward +x

  friend bool operator==(const TransmitEvent&, const TransmitEvent&) = default;
};

struct Sequence {
  std::vector<TransmitEvent> transmits;
  double sector_angle{deg_to_rad(60.0)};  // [rad] full opening angle

  std::size_t size() const { return transmits.size(); }
  double min_angle() const;
  double max_angle() const;
  void validate() const;

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

/// Element n sits at ((n - (N-1)/2) * pitch, 0).
std::vector<Vec2> element_positions(const ArrayGeometry& geom);

/// p_v = (-d_v sin(alpha), -d_v cos(alpha)).
Vec2 virtual_source_position(const TransmitEvent& tx);

/// Equally spaced steering angles across the sector; a single transmit is unsteered.
Sequence make_sequence(double sector_angle, std::size_t num_transmits, double virtual_source_distance);

/**
 * Indices of `count` transmits spread evenly over the sequence:
 * floor(k (M-1) / (count-1)) for k = 0..count-1. For count = 3 that is the
 * leftmost, center (lower middle for even M) and rightmost transmit.
 */
std::vector<std::size_t> spread_indices(std::size_t num_transmits, std::size_t count);

Sequence select_subsequence(const Sequence& seq, std::size_t count = 3);
Sequence select_transmits(const Sequence& seq, std::span<const std::size_t> indices);

/**
 * Cartesian pixel grid, row-major with rows along z. Pixel centers span the
 * extents inclusively. The mask marks pixels inside the imaging sector.
 */
struct PixelGrid {
  std::size_t width{1};
  std::size_t height{1};
  double x_min{0.0}, x_max{0.0};
  double z_min{0.0}, z_max{0.0};
  std::vector<std::uint8_t> sector_mask;

  std::size_t size() const { return width * height; }
  std::size_t index(std::size_t col, std::size_t row) const { return row * width + col; }
  double x(std::size_t col) const;
  double z(std::size_t row) const;
  Vec2 position(std::size_t pixel) const { return {x(pixel % width), z(pixel / width)}; }
  bool in_mask(std::size_t pixel) const { return sector_mask[pixel] != 0; }
  std::size_t mask_count() const;
  /// Pixel indices inside the mask, ascending.
  std::vector<std::size_t> masked_pixels() const;
  void validate() const;

  friend bool operator==(const PixelGrid&, const PixelGrid&) = default;
};

/// Grid over explicit extents, masked to the sector |angle| <= sector/2 and range <= depth.
PixelGrid make_grid(std::size_t width, std::size_t height, double x_min, double x_max, double z_min,
                    double z_max, double sector_angle, double depth);

/// Grid covering the whole sector: x in +-depth sin(sector/2), z in [0, depth].
PixelGrid make_sector_grid(std::size_t width, std::size_t height, double sector_angle, double depth);

/// Complex baseband channel data for one acquisition, laid out transmit-major, then channel, then time.
class IQFrame {
 public:
  IQFrame() = default;
  IQFrame(ArrayGeometry geometry, Sequence sequence, std::size_t num_samples);

  const ArrayGeometry& geometry() const { return geometry_; }
  const Sequence& sequence() const { return sequence_; }
  std::size_t num_transmits() const { return sequence_.size(); }
  std::size_t num_channels() const { return geometry_.num_elements; }
  std::size_t num_samples() const { return num_samples_; }

  std::span<const cfloat> channel(std::size_t tx, std::size_t ch) const;
  std::span<cfloat> channel(std::size_t tx, std::size_t ch);
  std::span<const cfloat> data() const { return data_; }
  std::span<cfloat> data() { return data_; }

  /// Copy restricted to the given transmits (in the given order).
  IQFrame select_transmits(std::span<const std::size_t> indices) const;
  bool all_finite() const;

  friend bool operator==(const IQFrame&, const IQFrame&) = default;

 private:
  ArrayGeometry geometry_;
  Sequence sequence_;
  std::size_t num_samples_{0};
  std::vector<cfloat> data_;
};

struct ComplexImage {
  std::size_t width{0};
  std::size_t height{0};
  std::vector<cdouble> pixels;

  ComplexImage() = default;
  ComplexImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h) {}
  std::size_t size() const { return pixels.size(); }
};

/// Log-compressed display image, values in [0, 1].
struct BModeImage {
  std::size_t width{0};
  std::size_t height{0};
  std::vector<double> values;
  double dynamic_range{60.0};  // [dB]

  BModeImage() = default;
  BModeImage(std::size_t w, std::size_t h, double dr) : width(w), height(h), values(w * h), dynamic_range(dr) {}
  std::size_t size() const { return values.size(); }
};

}  // namespace dwinr
