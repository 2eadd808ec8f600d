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

#include "dwinr/inr.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "dwinr/kernels.hpp"

namespace dwinr::inr {

namespace {

std::atomic<bool> g_clip_warned{false};

double clip_unit(double v) {
  if (v < 0.0 || v > 1.0) {
    if (!g_clip_warned.exchange(true)) {
      std::cerr << "warning: normalized INR input " << v << " outside [0, 1], clipping\n";
    }
    return std::clamp(v, 0.0, 1.0);
  }
  return v;
}

void check_range(const NormalizationRange& r, const char* name) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.hi > r.lo))
    throw std::invalid_argument(std::string("encoding config: degenerate ") + name + " normalization range");
}

}  // namespace

void EncodingConfig::validate() const {
  if (embedding_length < 1) throw std::invalid_argument("encoding config: embedding length must be >= 1");
  check_range(x, "x");
  check_range(z, "z");
  check_range(angle, "angle");
}

EncodingConfig EncodingConfig::from(const PixelGrid& grid, const Sequence& seq, std::size_t embedding_length) {
  EncodingConfig cfg;
  cfg.embedding_length = embedding_length;
  cfg.x = {grid.x_min, grid.x_max};
  cfg.z = {grid.z_min, grid.z_max};
  if (seq.size() >= 2) cfg.angle = {seq.min_angle(), seq.max_angle()};
  else cfg.angle = {-seq.sector_angle / 2.0, seq.sector_angle / 2.0};
  cfg.validate();
  return cfg;
}

std::vector<cdouble> positional_encoding(double p, std::size_t length) {
  if (length < 1) throw std::invalid_argument("positional_encoding: length must be >= 1");
  std::vector<cdouble> out(length);
  double freq = std::numbers::pi;
  for (std::size_t k = 0; k < length; ++k) {
    out[k] = std::polar(1.0, freq * p);
    freq *= 2.0;
  }
  return out;
}

std::vector<cdouble> embed(double x_norm, double z_norm, double angle_norm, std::size_t length) {
  std::vector<cdouble> out;
  out.reserve(3 * length);
  for (double v : {x_norm, z_norm, angle_norm}) {
    const auto g = positional_encoding(clip_unit(v), length);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

cdouble mod_relu(cdouble z, double bias) {
  const double in[2] = {z.real(), z.imag()};
  double out[2];
  kernels::mod_relu(in, std::span<const double>(&bias, 1), 1, 1, out);
  return {out[0], out[1]};
}

cdouble complex_sigmoid(cdouble z) { return {kernels::sigmoid(z.real()), kernels::sigmoid(z.imag())}; }

void Architecture::validate() const {
  if (input_features < 1 || hidden < 1 || outputs < 1 || num_layers < 1)
    throw std::invalid_argument("architecture: all sizes must be >= 1");
  if (skip_layer == 1 || skip_layer > num_layers)
    throw std::invalid_argument("architecture: skip layer must be 0 (none) or in [2, num_layers]");
}

std::size_t Architecture::layer_inputs(std::size_t layer) const {
  std::size_t in = layer == 0 ? input_features : hidden;
  if (has_skip(layer)) in += input_features;
  return in;
}

std::size_t Architecture::layer_outputs(std::size_t layer) const { return layer + 1 == num_layers ? outputs : hidden; }

std::vector<std::span<double>> InrParams::tensors() {
  std::vector<std::span<double>> out;
  for (auto& l : layers) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
    if (!l.activation_bias.empty()) out.emplace_back(l.activation_bias);
  }
  return out;
}

std::vector<std::span<const double>> InrParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& l : layers) {
    out.emplace_back(l.weights);
    out.emplace_back(l.bias);
    if (!l.activation_bias.empty()) out.emplace_back(l.activation_bias);
  }
  return out;
}

std::size_t InrParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

std::vector<double> InrParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& t : tensors()) flat.insert(flat.end(), t.begin(), t.end());
  return flat;
}

void InrParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw std::invalid_argument("InrParams::assign: size mismatch");
  std::size_t offset = 0;
  for (auto t : tensors()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.begin());
    offset += t.size();
  }
}

bool InrParams::all_finite() const {
  for (const auto& t : tensors()) {
    if (!std::all_of(t.begin(), t.end(), [](double v) { return std::isfinite(v); })) return false;
  }
  return true;
}

void InrParams::validate() const {
  arch.validate();
  encoding.validate();
  if (arch.input_features != encoding.features())
    throw std::invalid_argument("inr params: architecture input width does not match 3L");
  if (layers.size() != arch.num_layers) throw std::invalid_argument("inr params: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const bool last = l + 1 == layers.size();
    if (layer.in != arch.layer_inputs(l) || layer.out != arch.layer_outputs(l) ||
        layer.weights.size() != 2 * layer.in * layer.out || layer.bias.size() != 2 * layer.out ||
        layer.activation_bias.size() != (last ? 0 : layer.out)) {
      throw std::invalid_argument("inr params: layer " + std::to_string(l + 1) + " has inconsistent shapes");
    }
  }
  if (!all_finite()) throw std::invalid_argument("inr params: non-finite parameter");
}

InrParams init_params(std::uint64_t seed, const Architecture& arch, const EncodingConfig& encoding) {
  arch.validate();
  encoding.validate();
  if (arch.input_features != encoding.features())
    throw std::invalid_argument("init_params: architecture input width does not match 3L");
  InrParams params;
  params.arch = arch;
  params.encoding = encoding;
  params.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < arch.num_layers; ++l) {
    DenseLayer layer;
    layer.in = arch.layer_inputs(l);
    layer.out = arch.layer_outputs(l);
    const double a = std::sqrt(3.0 / static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-a, a);
    layer.weights.resize(2 * layer.in * layer.out);
    for (auto& w : layer.weights) w = dist(rng);
    layer.bias.assign(2 * layer.out, 0.0);
    if (l + 1 < arch.num_layers) layer.activation_bias.assign(layer.out, 0.0);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::vector<double> forward_batch(const InrParams& params, std::span<const double> embeddings, std::size_t rows) {
  const auto& arch = params.arch;
  if (embeddings.size() != 2 * rows * arch.input_features)
    throw std::invalid_argument("forward_batch: embedding size does not match rows x 3L");
  if (params.layers.size() != arch.num_layers) throw std::invalid_argument("forward_batch: layer count mismatch");
  if (params.output == OutputMode::Ones) {
    std::vector<double> ones(2 * rows * arch.outputs, 0.0);
    for (std::size_t i = 0; i < rows * arch.outputs; ++i) ones[2 * i] = 1.0;
    return ones;
  }
  std::vector<double> h(embeddings.begin(), embeddings.end());
  for (std::size_t l = 0; l < arch.num_layers; ++l) {
    const auto& layer = params.layers[l];
    std::vector<double> input;
    if (arch.has_skip(l)) {
      const std::size_t a = 2 * (layer.in - arch.input_features);
      const std::size_t b = 2 * arch.input_features;
      input.resize(rows * (a + b));
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(h.begin() + static_cast<std::ptrdiff_t>(r * a), a,
                    input.begin() + static_cast<std::ptrdiff_t>(r * (a + b)));
        std::copy_n(embeddings.begin() + static_cast<std::ptrdiff_t>(r * b), b,
                    input.begin() + static_cast<std::ptrdiff_t>(r * (a + b) + a));
      }
    } else {
      input = std::move(h);
    }
    if (input.size() != 2 * rows * layer.in) throw std::invalid_argument("forward_batch: layer shape mismatch");
    std::vector<double> z(2 * rows * layer.out);
    kernels::complex_linear(input, layer.weights, layer.bias, rows, layer.in, layer.out, z);
    h.assign(z.size(), 0.0);
    if (l + 1 < arch.num_layers) kernels::mod_relu(z, layer.activation_bias, rows, layer.out, h);
    else kernels::complex_sigmoid(z, h);
  }
  return h;
}

std::vector<cdouble> forward(const InrParams& params, double x_norm, double z_norm, double angle_norm) {
  const auto e = embed(x_norm, z_norm, angle_norm, params.encoding.embedding_length);
  const std::span<const double> flat(reinterpret_cast<const double*>(e.data()), 2 * e.size());
  const auto out = forward_batch(params, flat, 1);
  std::vector<cdouble> w(params.arch.outputs);
  for (std::size_t n = 0; n < w.size(); ++n) w[n] = {out[2 * n], out[2 * n + 1]};
  return w;
}

std::vector<double> embed_grid(const EncodingConfig& encoding, const PixelGrid& grid, std::span<const double> angles) {
  const auto pixels = grid.masked_pixels();
  const std::size_t width = 2 * encoding.features();
  std::vector<double> out(angles.size() * pixels.size() * width);
  std::size_t row = 0;
  for (double angle : angles) {
    const double a = encoding.angle.apply(angle);
    for (auto p : pixels) {
      const Vec2 pos = grid.position(p);
      const auto e = embed(encoding.x.apply(pos.x), encoding.z.apply(pos.z), a, encoding.embedding_length);
      for (std::size_t k = 0; k < e.size(); ++k) {
        out[row * width + 2 * k] = e[k].real();
        out[row * width + 2 * k + 1] = e[k].imag();
      }
      ++row;
    }
  }
  return out;
}

das::ApodizationMap predict_apodization_map(const InrParams& params, const PixelGrid& grid, double angle) {
  const double angles[1] = {angle};
  const auto pixels = grid.masked_pixels();
  const auto emb = embed_grid(params.encoding, grid, angles);
  const auto out = forward_batch(params, emb, pixels.size());
  const std::size_t n = params.arch.outputs;
  das::ApodizationMap map(grid.width, grid.height, n);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    auto w = map.pixel(pixels[i]);
    for (std::size_t c = 0; c < n; ++c) w[c] = {out[2 * (i * n + c)], out[2 * (i * n + c) + 1]};
  }
  return map;
}

RecordedNetwork record_forward(ad::Tape& tape, const InrParams& params, ad::Var embeddings) {
  const auto& arch = params.arch;
  const std::size_t rows = embeddings.shape().rows;
  if (embeddings.shape().cols != arch.input_features || !embeddings.is_complex())
    throw std::invalid_argument("record_forward: embedding node must be complex rows x 3L");
  RecordedNetwork net;
  std::vector<std::array<ad::Var, 3>> layer_vars;
  for (const auto& layer : params.layers) {
    std::array<ad::Var, 3> v;
    v[0] = tape.variable(layer.weights, {layer.in, layer.out}, true);
    v[1] = tape.variable(layer.bias, {1, layer.out}, true);
    net.tensors.push_back(v[0]);
    net.tensors.push_back(v[1]);
    if (!layer.activation_bias.empty()) {
      v[2] = tape.variable(layer.activation_bias, {1, layer.out}, false);
      net.tensors.push_back(v[2]);
    }
    layer_vars.push_back(v);
  }
  if (params.output == OutputMode::Ones) {
    std::vector<double> ones(2 * rows * arch.outputs, 0.0);
    for (std::size_t i = 0; i < rows * arch.outputs; ++i) ones[2 * i] = 1.0;
    net.output = tape.constant(std::move(ones), {rows, arch.outputs}, true);
    return net;
  }
  ad::Var h = embeddings;
  for (std::size_t l = 0; l < arch.num_layers; ++l) {
    ad::Var input = arch.has_skip(l) ? ad::concat_cols(h, embeddings) : h;
    ad::Var z = ad::complex_linear(input, layer_vars[l][0], layer_vars[l][1]);
    h = l + 1 < arch.num_layers ? ad::mod_relu(z, layer_vars[l][2]) : ad::complex_sigmoid(z);
  }
  net.output = h;
  return net;
}

}  // namespace dwinr::inr
