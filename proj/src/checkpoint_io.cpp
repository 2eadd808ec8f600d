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


#include "binary.hpp"
#include "dwinr/io.hpp"

namespace dwinr::io {

using detail::Header;

std::vector<std::uint8_t> encode_checkpoint(const inr::InrParams& params) {
  params.validate();
  const auto& a = params.arch;
  const auto& e = params.encoding;
  Header h;
  h.set("input_features", std::uint64_t{a.input_features});
  h.set("hidden", std::uint64_t{a.hidden});
  h.set("num_layers", std::uint64_t{a.num_layers});
  h.set("skip_layer", std::uint64_t{a.skip_layer});
  h.set("outputs", std::uint64_t{a.outputs});
  std::vector<std::uint64_t> sizes;
  for (const auto& layer : params.layers) {
    sizes.push_back(layer.in);
    sizes.push_back(layer.out);
  }
  h.set("layer_sizes", std::span<const std::uint64_t>(sizes));
  h.set("embedding_length", std::uint64_t{e.embedding_length});
  h.set("x_range", std::vector<double>{e.x.lo, e.x.hi});
  h.set("z_range", std::vector<double>{e.z.lo, e.z.hi});
  h.set("angle_range", std::vector<double>{e.angle.lo, e.angle.hi});
  h.set("step", params.step);
  h.set("seed", params.seed);
  h.set("output_mode", params.output == inr::OutputMode::Ones ? std::string("ones") : std::string("sigmoid"));
  h.set("parameter_count", std::uint64_t{params.parameter_count()});

  auto out = detail::preamble("INRW", kCheckpointVersion, h.text());
  for (const auto& t : params.tensors()) {
    for (double v : t) detail::put_f64(out, v);
  }
  return out;
}

namespace {

inr::NormalizationRange range(const Header& h, const std::string& key) {
  const auto v = h.numbers(key);
  if (v.size() != 2) throw FormatError("header key '" + key + "' needs two values", detail::kPreambleSize, 2, v.size());
  return {v[0], v[1]};
}

}  // namespace

inr::InrParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const auto opened = detail::open(bytes, "INRW", kCheckpointVersion);
  const Header& h = opened.header;
  inr::InrParams p;
  p.arch.input_features = h.integer("input_features");
  p.arch.hidden = h.integer("hidden");
  p.arch.num_layers = h.integer("num_layers");
  p.arch.skip_layer = h.integer("skip_layer");
  p.arch.outputs = h.integer("outputs");
  p.encoding.embedding_length = h.integer("embedding_length");
  p.encoding.x = range(h, "x_range");
  p.encoding.z = range(h, "z_range");
  p.encoding.angle = range(h, "angle_range");
  p.step = h.integer("step");
  p.seed = h.integer("seed");
  const std::string& mode = h.raw("output_mode");
  if (mode == "ones") p.output = inr::OutputMode::Ones;
  else if (mode == "sigmoid") p.output = inr::OutputMode::Sigmoid;
  else throw FormatError("unknown output_mode '" + mode + "'", detail::kPreambleSize);

  try {
    p.arch.validate();
    p.encoding.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid header: ") + e.what(), detail::kPreambleSize);
  }
  const auto sizes = h.integers("layer_sizes");
  if (sizes.size() != 2 * p.arch.num_layers)
    throw FormatError("layer_sizes does not list every layer", detail::kPreambleSize, 2 * p.arch.num_layers,
                      sizes.size());
  for (std::size_t l = 0; l < p.arch.num_layers; ++l) {
    inr::DenseLayer layer;
    layer.in = p.arch.layer_inputs(l);
    layer.out = p.arch.layer_outputs(l);
    if (sizes[2 * l] != layer.in || sizes[2 * l + 1] != layer.out)
      throw FormatError("layer " + std::to_string(l + 1) + " size disagrees with the architecture",
                        detail::kPreambleSize);
    layer.weights.resize(2 * layer.in * layer.out);
    layer.bias.resize(2 * layer.out);
    if (l + 1 < p.arch.num_layers) layer.activation_bias.resize(layer.out);
    p.layers.push_back(std::move(layer));
  }

  const std::uint64_t count = h.integer("parameter_count");
  if (count != p.parameter_count())
    throw FormatError("parameter_count disagrees with the architecture", detail::kPreambleSize,
                      p.parameter_count(), count);
  const std::uint64_t base = opened.payload_offset;
  const std::uint64_t expected = count * sizeof(double);
  const std::uint64_t actual = bytes.size() - base;
  if (actual != expected)
    throw FormatError("payload length mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(actual),
                      base + std::min(actual, expected), expected, actual);
  const std::uint8_t* ptr = bytes.data() + base;
  for (auto t : p.tensors()) {
    for (double& v : t) {
      v = detail::get_f64(ptr);
      ptr += 8;
    }
  }
  if (!p.all_finite()) throw FormatError("non-finite parameter in payload", base);
  return p;
}

void save_checkpoint(const inr::InrParams& params, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(params));
}

inr::InrParams load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace dwinr::io
