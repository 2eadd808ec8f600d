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
#include <span>
#include <vector>

#include "dwinr/core.hpp"

namespace dwinr::das {

/**
 * Per-pixel, per-channel complex receive weights for one transmit, laid out
 * pixel-major (height x width x N). All-ones is rectangular apodization.
 */
struct ApodizationMap {
  std::size_t width{0};
  std::size_t height{0};
  std::size_t channels{0};
  std::vector<cdouble> weights;

  ApodizationMap() = default;
  ApodizationMap(std::size_t w, std::size_t h, std::size_t n, cdouble fill = {0.0, 0.0})
      : width(w), height(h), channels(n), weights(w * h * n, fill) {}

  static ApodizationMap ones(const PixelGrid& grid, std::size_t channels);

  std::span<const cdouble> pixel(std::size_t p) const {
    return std::span<const cdouble>(weights).subspan(p * channels, channels);
  }
  std::span<cdouble> pixel(std::size_t p) { return std::span<cdouble>(weights).subspan(p * channels, channels); }
};

/// Round-trip time of flight: (|p - p_v| - d_v) / c + |p - e| / c.
double tof(const Vec2& pixel, const Vec2& element, const TransmitEvent& tx, double speed_of_sound);

/**
 * Linear interpolation of baseband samples at tau, rotated by exp(+i 2 pi f_d tau).
 * Returns 0 outside the recorded window.
 */
cdouble sample_iq(std::span<const cfloat> channel, double tau, const ArrayGeometry& geom);

/// Interpolation position of one delay: sample index, fractional offset and phase rotation.
struct Tap {
  std::ptrdiff_t index{-1};  // -1 when the delay falls outside the recorded window
  double frac{0.0};
  cdouble rotation{1.0, 0.0};
};

Tap locate(double tau, std::size_t num_samples, const ArrayGeometry& geom);
cdouble apply_tap(std::span<const cfloat> channel, const Tap& tap);

/**
 * Precomputed taps of every (masked pixel, channel) pair for one transmit on one grid.
 * Applying the table reproduces sample_iq exactly.
 */
class DelayTable {
 public:
  DelayTable(const ArrayGeometry& geom, const TransmitEvent& tx, const PixelGrid& grid, std::size_t num_samples);

  /// Delayed samples laid out (masked pixel, channel).
  std::vector<cdouble> apply(const IQFrame& frame, std::size_t tx_index) const;
  std::size_t num_pixels() const { return num_pixels_; }
  std::size_t num_channels() const { return num_channels_; }
  std::size_t num_samples() const { return num_samples_; }

 private:
  std::size_t num_pixels_{0};
  std::size_t num_channels_{0};
  std::size_t num_samples_{0};
  std::vector<Tap> taps_;
};

/**
 * Time-of-flight corrected samples s_n[p] for every masked pixel of one transmit,
 * laid out (masked pixel, channel). These are the per-channel inputs of the
 * apodized sum and do not depend on the weights.
 */
std::vector<cdouble> delayed_samples(const IQFrame& frame, std::size_t tx_index, const PixelGrid& grid,
                                     unsigned threads = 1);

/// y[p] = sum_n w_n[p] s_n[p] over masked pixels; zero outside the mask.
ComplexImage das_image(const IQFrame& frame, std::size_t tx_index, const PixelGrid& grid,
                       const ApodizationMap& apod, unsigned threads = 1);

/// Pixel-wise complex sum. Throws std::invalid_argument on shape mismatch or empty input.
ComplexImage compound(std::span<const ComplexImage> images);

inline constexpr double kLogEpsilon = 1e-12;

/// Maximum envelope over the image; 0 for an all-zero image.
double envelope_max(const ComplexImage& image);

/**
 * Envelope detection and log compression:
 *   v = 20 log10(|y| / norm_max + eps), clipped to [-DR, 0], mapped to (v + DR) / DR.
 * norm_max <= 0 selects the image maximum ("auto"). An all-zero image with auto
 * normalization yields an all-zero B-mode image.
 */
BModeImage bmode(const ComplexImage& image, double dynamic_range, double norm_max = 0.0);

struct Reconstruction {
  ComplexImage compounded;
  BModeImage bmode;
};

/// compound(das_image for each selected transmit) followed by bmode.
Reconstruction reconstruct(const IQFrame& frame, std::span<const std::size_t> tx_subset, const PixelGrid& grid,
                           std::span<const ApodizationMap> apod_per_tx, double dynamic_range,
                           double norm_max = 0.0, unsigned threads = 1);

/// Rectangular-apodization compound over the given transmits (no B-mode).
ComplexImage rectangular_compound(const IQFrame& frame, std::span<const std::size_t> tx_subset,
                                  const PixelGrid& grid, unsigned threads = 1);

}  // namespace dwinr::das
