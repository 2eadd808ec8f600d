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
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace dwinr::ad {

/**
 * Reverse-mode differentiation over dense arrays.
 *
 * Every node holds a row-major array of doubles. Complex nodes store interleaved
 * (re, im) pairs and receive independent partial derivatives for both parts, so
 * the gradient of a real loss L with respect to z = a + ib is (dL/da, dL/db).
 * Nodes are appended in evaluation order; that order is the topological order
 * used by backward().
 */

struct Shape {
  std::size_t rows{1};
  std::size_t cols{1};

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class Primitive {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Square,
  Scale,
  DivScalar,
  AddScalar,
  Log10,
  Clip,
  Sum,
  Mean,
  MaskedMean,
  GaussianFilter,
  ComplexLinear,
  ConcatCols,
  ModRelu,
  ComplexSigmoid,
  Abs,
  ApodizedSum,
  ScatterAdd,
};

std::string_view primitive_name(Primitive op);

class Tape;

/// Handle to a node of a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  std::span<const double> value() const;
  std::span<const double> grad() const;
  Shape shape() const;
  bool is_complex() const;
  /// Value of a 1x1 real node.
  double scalar() const;

 private:
  Tape* tape_{nullptr};
  std::size_t id_{0};
};

struct Node {
  Primitive op{Primitive::Leaf};
  Shape shape;
  bool complex{false};
  bool requires_grad{false};
  std::vector<std::size_t> inputs;
  std::vector<double> value;
  std::vector<double> grad;
  // Per-element branch taken by piecewise primitives (modReLU, abs, clip).
  std::vector<std::uint8_t> branches;
  std::function<void(Tape&, Node&)> backward;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable leaf (gradient requested).
  Var variable(std::vector<double> value, Shape shape, bool complex = false);
  /// Constant leaf (no gradient).
  Var constant(std::vector<double> value, Shape shape, bool complex = false);
  Var scalar_constant(double v) { return constant({v}, {1, 1}); }

  /**
   * Records a primitive that takes no attributes (Add, Sub, Mul, Div, Neg, Square,
   * Log10, Sum, Mean, ConcatCols, ComplexSigmoid, Abs, ApodizedSum). Throws
   * std::invalid_argument for an input that does not belong to this tape.
   */
  Var record(Primitive op, std::initializer_list<Var> inputs);

  /// Back-propagates from a 1x1 real node. Throws std::invalid_argument otherwise.
  void backward(Var loss);

  const Node& node(std::size_t id) const { return nodes_.at(id); }
  Node& node(std::size_t id) { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Concatenated branch records of every piecewise node, in recording order.
  std::vector<std::uint8_t> branch_pattern() const;

  /// Appends a node; inputs are validated and requires_grad is inherited.
  Var push(Primitive op, std::vector<Var> inputs, Shape shape, bool complex, std::vector<double> value,
           std::function<void(Tape&, Node&)> backward);
  void check_input(const Var& v) const;

 private:
  std::vector<Node> nodes_;
};

// Elementwise arithmetic on real nodes. Either operand may be 1x1 and is then broadcast.
// Add and Sub also accept two complex nodes of equal shape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var neg(Var a);
Var square(Var a);
Var scale(Var a, double factor);
Var div_scalar(Var a, double divisor);
Var add_scalar(Var a, double offset);
/// log10 of a real node; the caller guards against non-positive input.
Var log10(Var a);
/// Clamp to [lo, hi]; gradient passes only strictly inside.
Var clip(Var a, double lo, double hi);
Var sum(Var a);
Var mean(Var a);
/// Mean over elements with mask != 0.
Var masked_mean(Var a, std::span<const std::uint8_t> mask);
/// Separable "valid" Gaussian correlation of an image node (rows = height, cols = width).
Var gaussian_filter(Var image, std::span<const double> taps);

// Complex primitives.
/// X[P x K] W[K x M] + b[1 x M].
Var complex_linear(Var x, Var w, Var b);
Var concat_cols(Var a, Var b);
/// modReLU with one real bias per column; gradient 0 on the inactive side and at z = 0.
Var mod_relu(Var z, Var bias);
Var complex_sigmoid(Var z);
/// |z| as a real node; gradient 0 at z = 0.
Var abs(Var z);
/// Row-wise sum_n W[p, n] S[p, n] -> [P x 1] complex.
Var apodized_sum(Var weights, Var samples);
/// out[index[p]] += y[p] into a zero array of `shape`.
Var scatter_add(Var y, std::span<const std::size_t> index, Shape shape);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }

/// Result of evaluating an objective at one parameter vector.
struct Evaluation {
  double value{0.0};
  std::vector<double> gradient;          // empty unless requested
  std::vector<std::uint8_t> branches;    // branch pattern of piecewise primitives
};

using Objective = std::function<Evaluation(std::span<const double> params, bool with_gradient)>;

struct GradCheckReport {
  double max_relative_error{0.0};
  std::size_t worst_index{0};
  std::size_t checked{0};
  std::vector<std::size_t> excluded;  // perturbation changed a piecewise branch
  std::vector<std::size_t> failing;
  bool passed() const { return failing.empty(); }
};

/**
 * Compares the reverse-mode gradient against central differences with the given step.
 * A parameter is excluded as non-differentiable when either perturbed evaluation takes a
 * different branch of a piecewise primitive than the base point. Relative error is
 * |g - fd| / max(|g|, |fd|, floor).
 */
GradCheckReport grad_check(const Objective& f, std::span<const double> params, double step, double tolerance,
                           double floor = 1e-6);

}  // namespace dwinr::ad
