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
#include <span>
#include <vector>

#include "dwinr/core.hpp"

namespace dwinr::metrics {

/// Gaussian SSIM window. The defaults are the usual 11x11, sigma 1.5, K1 = 0.01, K2 = 0.03.
struct SsimOptions {
  std::size_t window{11};
  double sigma{1.5};
  double k1{0.01};
  double k2{0.03};
  double data_range{1.0};

  double c1() const { return (k1 * data_range) * (k1 * data_range); }
  double c2() const { return (k2 * data_range) * (k2 * data_range); }
};

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::vector<double> gaussian_taps(std::size_t window, double sigma);

/// Mean squared difference over pixels with mask != 0 (all pixels when the mask is empty).
double mse(const BModeImage& a, const BModeImage& b, std::span<const std::uint8_t> mask = {});

/**
 * Mean local SSIM over every position where the window fits entirely inside the
 * image. Throws std::invalid_argument for images smaller than the window.
 */
double ssim(const BModeImage& a, const BModeImage& b, const SsimOptions& options = {});

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) with peak 1, capped at 100 dB.
double psnr(const BModeImage& pred, const BModeImage& gt, std::span<const std::uint8_t> mask = {});

/// beta * MSE + (1 - beta) * (1 - SSIM).
double loss(const BModeImage& pred, const BModeImage& gt, double beta, std::span<const std::uint8_t> mask = {},
            const SsimOptions& options = {});

struct Summary {
  double mean{0.0};
  double stddev{0.0};  // sample standard deviation, 0 for fewer than two values
};

Summary summarize(std::span<const double> values);

}  // namespace dwinr::metrics
