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

#include "dwinr/core.hpp"

// Numeric kernels shared by the recorded (autodiff) and plain evaluation paths,
// so both produce bit-identical values. Complex arrays are interleaved (re, im).
namespace dwinr::kernels {

/// Y[P x M] = X[P x K] W[K x M] + 1 b^T, all complex, row-major.
void complex_linear(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                    std::size_t rows, std::size_t in, std::size_t out, std::span<double> y);

/// modReLU: (|z| + b) z / |z| when |z| + b > 0, else 0 (also 0 at z = 0). One real bias per column.
void mod_relu(std::span<const double> z, std::span<const double> bias, std::size_t rows, std::size_t cols,
              std::span<double> out);

/// Split sigmoid: sigma(Re z) + i sigma(Im z).
void complex_sigmoid(std::span<const double> z, std::span<double> out);

double sigmoid(double v);

/// Separable "valid" correlation with the same taps along rows then columns.
void filter_valid(std::span<const double> img, std::size_t width, std::size_t height, std::span<const double> taps,
                  std::span<double> out);

}  // namespace dwinr::kernels
