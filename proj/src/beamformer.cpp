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

#include "dwinr/beamformer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dwinr/parallel.hpp"

namespace dwinr::das {

ApodizationMap ApodizationMap::ones(const PixelGrid& grid, std::size_t channels) {
  return ApodizationMap(grid.width, grid.height, channels, cdouble{1.0, 0.0});
}

double tof(const Vec2& pixel, const Vec2& element, const TransmitEvent& tx, double speed_of_sound) {
  const Vec2 source = virtual_source_position(tx);
  const double transmit = distance(pixel, source) - tx.virtual_source_distance;
  const double receive = distance(pixel, element);
  return (transmit + receive) / speed_of_sound;
}

Tap locate(double tau, std::size_t num_samples, const ArrayGeometry& geom) {
  Tap tap;
  const double pos = (tau - geom.t0) * geom.sampling_frequency;
  if (!(pos >= 0.0) || num_samples == 0 || pos > static_cast<double>(num_samples - 1)) return tap;
  tap.index = static_cast<std::ptrdiff_t>(pos);
  tap.frac = pos - static_cast<double>(tap.index);
  tap.rotation = std::polar(1.0, 2.0 * std::numbers::pi * geom.demod_frequency * tau);
  return tap;
}

cdouble apply_tap(std::span<const cfloat> channel, const Tap& tap) {
  if (tap.index < 0) return {0.0, 0.0};
  const auto k = static_cast<std::size_t>(tap.index);
  cdouble value(channel[k]);
  if (tap.frac > 0.0 && k + 1 < channel.size()) {
    value = (1.0 - tap.frac) * cdouble(channel[k]) + tap.frac * cdouble(channel[k + 1]);
  }
  return value * tap.rotation;
}

cdouble sample_iq(std::span<const cfloat> channel, double tau, const ArrayGeometry& geom) {
  return apply_tap(channel, locate(tau, channel.size(), geom));
}

DelayTable::DelayTable(const ArrayGeometry& geom, const TransmitEvent& tx, const PixelGrid& grid,
                       std::size_t num_samples)
    : num_channels_(geom.num_elements), num_samples_(num_samples) {
  const auto elements = element_positions(geom);
  const auto pixels = grid.masked_pixels();
  num_pixels_ = pixels.size();
  taps_.resize(num_pixels_ * num_channels_);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const Vec2 p = grid.position(pixels[i]);
    for (std::size_t n = 0; n < num_channels_; ++n) {
      taps_[i * num_channels_ + n] = locate(tof(p, elements[n], tx, geom.speed_of_sound), num_samples, geom);
    }
  }
}

std::vector<cdouble> DelayTable::apply(const IQFrame& frame, std::size_t tx_index) const {
  if (frame.num_channels() != num_channels_ || frame.num_samples() != num_samples_)
    throw std::invalid_argument("DelayTable::apply: frame layout does not match the table");
  std::vector<cdouble> out(taps_.size());
  for (std::size_t i = 0; i < num_pixels_; ++i) {
    for (std::size_t n = 0; n < num_channels_; ++n) {
      out[i * num_channels_ + n] = apply_tap(frame.channel(tx_index, n), taps_[i * num_channels_ + n]);
    }
  }
  return out;
}

std::vector<cdouble> delayed_samples(const IQFrame& frame, std::size_t tx_index, const PixelGrid& grid,
                                     unsigned threads) {
  if (tx_index >= frame.num_transmits()) throw std::out_of_range("delayed_samples: transmit index out of range");
  const auto& geom = frame.geometry();
  const auto& tx = frame.sequence().transmits[tx_index];
  const auto elements = element_positions(geom);
  const auto pixels = grid.masked_pixels();
  const std::size_t num_ch = frame.num_channels();
  std::vector<cdouble> out(pixels.size() * num_ch);
  parallel_for(pixels.size(), threads, [&](std::size_t i) {
    const Vec2 p = grid.position(pixels[i]);
    for (std::size_t n = 0; n < num_ch; ++n) {
      const double tau = tof(p, elements[n], tx, geom.speed_of_sound);
      out[i * num_ch + n] = sample_iq(frame.channel(tx_index, n), tau, geom);
    }
  });
  return out;
}

ComplexImage das_image(const IQFrame& frame, std::size_t tx_index, const PixelGrid& grid,
                       const ApodizationMap& apod, unsigned threads) {
  const std::size_t num_ch = frame.num_channels();
  if (apod.width != grid.width || apod.height != grid.height || apod.channels != num_ch ||
      apod.weights.size() != grid.size() * num_ch) {
    throw std::invalid_argument("das_image: apodization map shape " + std::to_string(apod.height) + "x" +
                                std::to_string(apod.width) + "x" + std::to_string(apod.channels) +
                                " does not match grid " + std::to_string(grid.height) + "x" +
                                std::to_string(grid.width) + "x" + std::to_string(num_ch));
  }
  if (tx_index >= frame.num_transmits()) throw std::out_of_range("das_image: transmit index out of range");
  const auto& geom = frame.geometry();
  const auto& tx = frame.sequence().transmits[tx_index];
  const auto elements = element_positions(geom);
  const auto pixels = grid.masked_pixels();

  ComplexImage image(grid.width, grid.height);
  parallel_for(pixels.size(), threads, [&](std::size_t i) {
    const std::size_t p = pixels[i];
    const Vec2 pos = grid.position(p);
    const auto w = apod.pixel(p);
    cdouble sum{0.0, 0.0};
    for (std::size_t n = 0; n < num_ch; ++n) {
      const double tau = tof(pos, elements[n], tx, geom.speed_of_sound);
      sum += w[n] * sample_iq(frame.channel(tx_index, n), tau, geom);
    }
    image.pixels[p] = sum;
  });
  return image;
}

ComplexImage compound(std::span<const ComplexImage> images) {
  if (images.empty()) throw std::invalid_argument("compound: no images");
  ComplexImage out(images.front().width, images.front().height);
  for (const auto& img : images) {
    if (img.width != out.width || img.height != out.height || img.pixels.size() != out.pixels.size())
      throw std::invalid_argument("compound: image shapes differ");
    for (std::size_t p = 0; p < out.pixels.size(); ++p) out.pixels[p] += img.pixels[p];
  }
  return out;
}

double envelope_max(const ComplexImage& image) {
  double m = 0.0;
  for (const auto& v : image.pixels) m = std::max(m, std::abs(v));
  return m;
}

BModeImage bmode(const ComplexImage& image, double dynamic_range, double norm_max) {
  if (!(dynamic_range > 0.0)) throw std::invalid_argument("bmode: dynamic range must be positive");
  BModeImage out(image.width, image.height, dynamic_range);
  if (norm_max <= 0.0) norm_max = envelope_max(image);
  if (norm_max <= 0.0) return out;
  for (std::size_t p = 0; p < image.pixels.size(); ++p) {
    const double db = 20.0 * std::log10(std::abs(image.pixels[p]) / norm_max + kLogEpsilon);
    const double clipped = std::clamp(db, -dynamic_range, 0.0);
    out.values[p] = (clipped + dynamic_range) / dynamic_range;
  }
  return out;
}

Reconstruction reconstruct(const IQFrame& frame, std::span<const std::size_t> tx_subset, const PixelGrid& grid,
                           std::span<const ApodizationMap> apod_per_tx, double dynamic_range, double norm_max,
                           unsigned threads) {
  if (tx_subset.size() != apod_per_tx.size())
    throw std::invalid_argument("reconstruct: need one apodization map per selected transmit");
  std::vector<ComplexImage> images;
  images.reserve(tx_subset.size());
  for (std::size_t k = 0; k < tx_subset.size(); ++k) {
    images.push_back(das_image(frame, tx_subset[k], grid, apod_per_tx[k], threads));
  }
  Reconstruction out;
  out.compounded = compound(images);
  out.bmode = bmode(out.compounded, dynamic_range, norm_max);
  return out;
}

ComplexImage rectangular_compound(const IQFrame& frame, std::span<const std::size_t> tx_subset,
                                  const PixelGrid& grid, unsigned threads) {
  const auto ones = ApodizationMap::ones(grid, frame.num_channels());
  std::vector<ComplexImage> images;
  images.reserve(tx_subset.size());
  for (auto tx : tx_subset) images.push_back(das_image(frame, tx, grid, ones, threads));
  return compound(images);
}

}  // namespace dwinr::das
