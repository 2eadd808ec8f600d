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

#include "dwinr/autodiff.hpp"
#include "dwinr/beamformer.hpp"
#include "dwinr/core.hpp"

namespace dwinr::inr {

/// Affine map of a coordinate range onto [0, 1].
struct NormalizationRange {
  double lo{0.0};
  double hi{1.0};

  double apply(double v) const { return (v - lo) / (hi - lo); }
  friend bool operator==(const NormalizationRange&, const NormalizationRange&) = default;
};

struct EncodingConfig {
  std::size_t embedding_length{10};
  NormalizationRange x;
  NormalizationRange z;
  NormalizationRange angle;

  std::size_t features() const { return 3 * embedding_length; }
  void validate() const;

  /// x and z ranges from the grid extents, angle range from the sequence endpoints
  /// (the sector bounds when the sequence has a single transmit).
  static EncodingConfig from(const PixelGrid& grid, const Sequence& seq, std::size_t embedding_length = 10);

  friend bool operator==(const EncodingConfig&, const EncodingConfig&) = default;
};

/// gamma(p)_k = exp(i 2^k pi p), k = 0..L-1.
std::vector<cdouble> positional_encoding(double p, std::size_t length);

/// [gamma(x); gamma(z); gamma(alpha)] of normalized inputs, clipped to [0, 1] (warns once on stderr).
std::vector<cdouble> embed(double x_norm, double z_norm, double angle_norm, std::size_t length);

/// Scalar forms of the activations.
cdouble mod_relu(cdouble z, double bias);
cdouble complex_sigmoid(cdouble z);

/**
 * MLP layout. Layer `skip_layer` (1-based) receives the previous hidden state
 * concatenated with the embedded input; 0 disables the skip. All layers but the
 * last use modReLU; the last uses the split complex sigmoid.
 */
struct Architecture {
  std::size_t input_features{30};
  std::size_t hidden{128};
  std::size_t num_layers{6};
  std::size_t skip_layer{4};
  std::size_t outputs{64};

  void validate() const;
  std::size_t layer_inputs(std::size_t layer) const;   // 0-based layer index
  std::size_t layer_outputs(std::size_t layer) const;
  bool has_skip(std::size_t layer) const { return skip_layer != 0 && layer + 1 == skip_layer; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Complex weights W (in x out, row-major), complex bias b (out), real modReLU bias (out; empty on the last layer).
struct DenseLayer {
  std::size_t in{0};
  std::size_t out{0};
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<double> activation_bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

enum class OutputMode : std::uint8_t {
  Sigmoid = 0,
  /// Debug override: every weight is 1 + 0i (rectangular apodization).
  Ones = 1,
};

struct InrParams {
  Architecture arch;
  EncodingConfig encoding;
  std::vector<DenseLayer> layers;
  OutputMode output{OutputMode::Sigmoid};
  std::uint64_t step{0};
  std::uint64_t seed{0};

  /// Every parameter array in checkpoint order: per layer W, b, then the modReLU bias.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  bool all_finite() const;
  void validate() const;

  friend bool operator==(const InrParams&, const InrParams&) = default;
};

/// Complex weights with real and imaginary parts uniform in [-a, a], a = sqrt(3 / fan_in); biases zero.
InrParams init_params(std::uint64_t seed, const Architecture& arch, const EncodingConfig& encoding);

/// Network output for a batch of embedded inputs [rows x 3L] (interleaved complex) -> [rows x N].
std::vector<double> forward_batch(const InrParams& params, std::span<const double> embeddings, std::size_t rows);

/// f(x, z, alpha) for normalized inputs.
std::vector<cdouble> forward(const InrParams& params, double x_norm, double z_norm, double angle_norm);

/// Interleaved embeddings of every masked pixel (ascending) at each angle, angle-major.
std::vector<double> embed_grid(const EncodingConfig& encoding, const PixelGrid& grid, std::span<const double> angles);

/// Weights for every in-mask pixel at steering angle `angle` (radians); zero outside the mask.
das::ApodizationMap predict_apodization_map(const InrParams& params, const PixelGrid& grid, double angle);

/// Leaves for every parameter tensor plus the recorded network output.
struct RecordedNetwork {
  std::vector<ad::Var> tensors;
  ad::Var output;
};

/// Records the forward pass on `tape` for the given embedding node [rows x 3L].
RecordedNetwork record_forward(ad::Tape& tape, const InrParams& params, ad::Var embeddings);

}  // namespace dwinr::inr
