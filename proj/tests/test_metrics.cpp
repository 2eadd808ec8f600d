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


#include <doctest.h>

#include <cmath>
#include <random>

#include "dwinr/metrics.hpp"

using namespace dwinr;

namespace {

BModeImage image(std::size_t w, std::size_t h, std::vector<double> v) {
  BModeImage b(w, h, 60.0);
  b.values = std::move(v);
  return b;
}

BModeImage random_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BModeImage b(w, h, 60.0);
  for (auto& v : b.values) v = u(rng);
  return b;
}

// Definition-following SSIM: explicit 2-D Gaussian window at every valid position.
double ssim_oracle(const BModeImage& a, const BModeImage& b, std::size_t k, double sigma) {
  std::vector<double> w(k * k);
  double total = 0.0;
  const double c = (static_cast<double>(k) - 1.0) / 2.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double di = static_cast<double>(i) - c, dj = static_cast<double>(j) - c;
      w[i * k + j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      total += w[i * k + j];
    }
  }
  for (auto& v : w) v /= total;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + k <= a.height; ++r) {
    for (std::size_t q = 0; q + k <= a.width; ++q) {
      double ma = 0, mb = 0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          ma += w[i * k + j] * a.values[(r + i) * a.width + q + j];
          mb += w[i * k + j] * b.values[(r + i) * a.width + q + j];
        }
      double va = 0, vb = 0, cov = 0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          const double da = a.values[(r + i) * a.width + q + j] - ma;
          const double db = b.values[(r + i) * a.width + q + j] - mb;
          va += w[i * k + j] * da * da;
          vb += w[i * k + j] * db * db;
          cov += w[i * k + j] * da * db;
        }
      sum += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

TEST_CASE("mse") {
  auto a = image(2, 1, {0.0, 0.5});
  auto b = image(2, 1, {0.5, 0.5});
  CHECK(metrics::mse(a, a) == 0.0);
  CHECK(metrics::mse(a, b) == doctest::Approx(0.125));
  CHECK(metrics::mse(image(2, 2, {0, 0, 0, 0}), image(2, 2, {1, 1, 1, 1})) == 1.0);
  const std::vector<std::uint8_t> mask{0, 1};
  CHECK(metrics::mse(a, b, mask) == 0.0);
  const std::vector<std::uint8_t> none{0, 0};
  CHECK_THROWS_AS(metrics::mse(a, b, none), std::invalid_argument);
  CHECK_THROWS_AS(metrics::mse(a, image(1, 2, {0, 0})), std::invalid_argument);
}

TEST_CASE("psnr") {
  auto a = image(2, 1, {0.2, 0.7});
  CHECK(metrics::psnr(a, a) == metrics::kPsnrCap);
  CHECK(metrics::psnr(image(1, 1, {0.1}), image(1, 1, {0.0})) == doctest::Approx(20.0));
  CHECK(metrics::psnr(image(1, 1, {1.0}), image(1, 1, {0.0})) == doctest::Approx(0.0));
  const std::vector<std::uint8_t> none{0, 0};
  CHECK_THROWS_AS(metrics::psnr(a, a, none), std::invalid_argument);
}

TEST_CASE("ssim basics") {
  std::mt19937_64 rng(1);
  const auto a = random_image(16, 16, rng);
  CHECK(metrics::ssim(a, a) == 1.0);
  auto inv = a;
  for (auto& v : inv.values) v = 1.0 - v;
  CHECK(metrics::ssim(a, inv) < 1.0);
  CHECK(metrics::ssim(a, inv) < 0.0);
  CHECK_THROWS_AS(metrics::ssim(random_image(10, 16, rng), random_image(10, 16, rng)), std::invalid_argument);
  metrics::SsimOptions small;
  small.window = 7;
  CHECK_NOTHROW(metrics::ssim(random_image(8, 8, rng), random_image(8, 8, rng), small));
}

TEST_CASE("ssim matches a definition-following oracle") {
  std::mt19937_64 rng(42);
  const auto a = random_image(16, 16, rng);
  auto b = a;
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& v : b.values) v = std::clamp(v + n(rng), 0.0, 1.0);
  CHECK(metrics::ssim(a, b) == doctest::Approx(ssim_oracle(a, b, 11, 1.5)).epsilon(1e-6));
  const auto c = random_image(23, 19, rng);
  const auto d = random_image(23, 19, rng);
  CHECK(std::abs(metrics::ssim(c, d) - ssim_oracle(c, d, 11, 1.5)) < 1e-6);
  metrics::SsimOptions seven;
  seven.window = 7;
  CHECK(std::abs(metrics::ssim(c, d, seven) - ssim_oracle(c, d, 7, 1.5)) < 1e-6);
}

TEST_CASE("ssim is symmetric") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_image(20, 14, rng);
    const auto b = random_image(20, 14, rng);
    CHECK(std::abs(metrics::ssim(a, b) - metrics::ssim(b, a)) <= 1e-12);
  }
}

TEST_CASE("combined loss") {
  std::mt19937_64 rng(3);
  const auto a = random_image(12, 12, rng);
  CHECK(metrics::loss(a, a, 0.5) == 0.0);
  auto b = a;
  for (auto& v : b.values) v = std::min(1.0, v + 0.1);
  const double m = metrics::mse(a, b), s = metrics::ssim(a, b);
  CHECK(metrics::loss(a, b, 0.5) == doctest::Approx(0.5 * m + 0.5 * (1.0 - s)));
  CHECK(metrics::loss(a, b, 1.0) == doctest::Approx(m));
  CHECK(metrics::loss(a, b, 0.0) == doctest::Approx(1.0 - s));
  CHECK(metrics::loss(a, b, 0.5) > 0.0);
  // 0.5 * 0.1 + 0.5 * (1 - 0.8)
  CHECK(0.5 * 0.1 + 0.5 * (1.0 - 0.8) == doctest::Approx(0.15));
}

TEST_CASE("summaries use the sample standard deviation") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto s = metrics::summarize(v);
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const std::vector<double> one{7.0};
  CHECK(metrics::summarize(one).stddev == 0.0);
}

TEST_CASE("gaussian taps are normalized and symmetric") {
  const auto t = metrics::gaussian_taps(11, 1.5);
  REQUIRE(t.size() == 11);
  double sum = 0.0;
  for (std::size_t i = 0; i < 11; ++i) {
    sum += t[i];
    CHECK(t[i] == doctest::Approx(t[10 - i]));
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK(t[5] > t[4]);
}
