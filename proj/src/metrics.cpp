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

#include "dwinr/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dwinr/kernels.hpp"

namespace dwinr::metrics {

namespace {

void check_same_shape(const BModeImage& a, const BModeImage& b, const char* who) {
  if (a.width != b.width || a.height != b.height || a.values.size() != b.values.size())
    throw std::invalid_argument(std::string(who) + ": image shapes differ");
}

std::vector<double> filter_valid(std::span<const double> img, std::size_t width, std::size_t height,
                                 std::span<const double> taps) {
  std::vector<double> out((height - taps.size() + 1) * (width - taps.size() + 1));
  kernels::filter_valid(img, width, height, taps, out);
  return out;
}

}  // namespace

std::vector<double> gaussian_taps(std::size_t window, double sigma) {
  if (window == 0 || !(sigma > 0.0)) throw std::invalid_argument("gaussian_taps: invalid window");
  std::vector<double> taps(window);
  const double center = (static_cast<double>(window) - 1.0) / 2.0;
  for (std::size_t i = 0; i < window; ++i) {
    const double d = static_cast<double>(i) - center;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  const double total = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (auto& t : taps) t /= total;
  return taps;
}

double mse(const BModeImage& a, const BModeImage& b, std::span<const std::uint8_t> mask) {
  check_same_shape(a, b, "mse");
  if (!mask.empty() && mask.size() != a.values.size()) throw std::invalid_argument("mse: mask size mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < a.values.size(); ++p) {
    if (!mask.empty() && mask[p] == 0) continue;
    const double d = a.values[p] - b.values[p];
    sum += d * d;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("mse: empty mask");
  return sum / static_cast<double>(count);
}

double ssim(const BModeImage& a, const BModeImage& b, const SsimOptions& options) {
  check_same_shape(a, b, "ssim");
  const std::size_t k = options.window;
  if (a.width < k || a.height < k) {
    throw std::invalid_argument("ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                " is smaller than the " + std::to_string(k) + "x" + std::to_string(k) + " window");
  }
  const auto taps = gaussian_taps(k, options.sigma);
  const std::size_t n = a.values.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t p = 0; p < n; ++p) {
    aa[p] = a.values[p] * a.values[p];
    bb[p] = b.values[p] * b.values[p];
    ab[p] = a.values[p] * b.values[p];
  }
  const auto mu_a = filter_valid(a.values, a.width, a.height, taps);
  const auto mu_b = filter_valid(b.values, a.width, a.height, taps);
  const auto e_aa = filter_valid(aa, a.width, a.height, taps);
  const auto e_bb = filter_valid(bb, a.width, a.height, taps);
  const auto e_ab = filter_valid(ab, a.width, a.height, taps);
  const double c1 = options.c1();
  const double c2 = options.c2();
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

double psnr(const BModeImage& pred, const BModeImage& gt, std::span<const std::uint8_t> mask) {
  const double m = mse(pred, gt, mask);
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double loss(const BModeImage& pred, const BModeImage& gt, double beta, std::span<const std::uint8_t> mask,
            const SsimOptions& options) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("loss: beta must be in [0, 1]");
  return beta * mse(pred, gt, mask) + (1.0 - beta) * (1.0 - ssim(pred, gt, options));
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace dwinr::metrics
