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

#include "dwinr/kernels.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace dwinr::kernels {

namespace {
using CMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CRow = Eigen::Matrix<cdouble, 1, Eigen::Dynamic>;
}  // namespace

void complex_linear(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                    std::size_t rows, std::size_t in, std::size_t out, std::span<double> y) {
  const auto r = static_cast<Eigen::Index>(rows);
  const auto k = static_cast<Eigen::Index>(in);
  const auto m = static_cast<Eigen::Index>(out);
  Eigen::Map<const CMatrix> xm(reinterpret_cast<const cdouble*>(x.data()), r, k);
  Eigen::Map<const CMatrix> wm(reinterpret_cast<const cdouble*>(w.data()), k, m);
  Eigen::Map<const CRow> bm(reinterpret_cast<const cdouble*>(b.data()), m);
  Eigen::Map<CMatrix> ym(reinterpret_cast<cdouble*>(y.data()), r, m);
  ym.noalias() = xm * wm;
  ym.rowwise() += bm;
}

void mod_relu(std::span<const double> z, std::span<const double> bias, std::size_t rows, std::size_t cols,
              std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t e = 2 * (i * cols + j);
      const double re = z[e];
      const double im = z[e + 1];
      const double mag = std::sqrt(re * re + im * im);
      const double shifted = mag + bias[j];
      if (mag > 0.0 && shifted > 0.0) {
        const double scale = shifted / mag;
        out[e] = re * scale;
        out[e + 1] = im * scale;
      } else {
        out[e] = 0.0;
        out[e + 1] = 0.0;
      }
    }
  }
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void complex_sigmoid(std::span<const double> z, std::span<double> out) {
  for (std::size_t e = 0; e < z.size(); ++e) out[e] = sigmoid(z[e]);
}

void filter_valid(std::span<const double> img, std::size_t width, std::size_t height, std::span<const double> taps,
                  std::span<double> out) {
  const std::size_t k = taps.size();
  const std::size_t out_w = width - k + 1;
  const std::size_t out_h = height - k + 1;
  std::vector<double> rows(height * out_w);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < out_w; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += taps[t] * img[r * width + c + t];
      rows[r * out_w + c] = s;
    }
  }
  for (std::size_t r = 0; r < out_h; ++r) {
    for (std::size_t c = 0; c < out_w; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += taps[t] * rows[(r + t) * out_w + c];
      out[r * out_w + c] = s;
    }
  }
}

}  // namespace dwinr::kernels
