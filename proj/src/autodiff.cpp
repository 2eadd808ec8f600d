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

#include "dwinr/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dwinr/core.hpp"
#include "dwinr/kernels.hpp"

namespace dwinr::ad {

namespace {

using CMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<CMatrix> cmap(std::vector<double>& v, Shape s) {
  return {reinterpret_cast<cdouble*>(v.data()), static_cast<Eigen::Index>(s.rows),
          static_cast<Eigen::Index>(s.cols)};
}

std::size_t storage(Shape s, bool complex) { return s.size() * (complex ? 2 : 1); }

void require_real(const Var& v, const char* who) {
  if (v.is_complex()) throw std::invalid_argument(std::string(who) + ": expects a real node");
}

void require_complex(const Var& v, const char* who) {
  if (!v.is_complex()) throw std::invalid_argument(std::string(who) + ": expects a complex node");
}

// Shape rule for elementwise binary ops with scalar broadcast.
Shape broadcast_shape(const Var& a, const Var& b, const char* who) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa == sb) return sa;
  if (sa.size() == 1) return sb;
  if (sb.size() == 1) return sa;
  throw std::invalid_argument(std::string(who) + ": shape mismatch " + std::to_string(sa.rows) + "x" +
                              std::to_string(sa.cols) + " vs " + std::to_string(sb.rows) + "x" +
                              std::to_string(sb.cols));
}

// Index into an operand that may be broadcast.
inline std::size_t at(std::size_t i, std::size_t n) { return n == 1 ? 0 : i; }

enum class BinOp { Add, Sub, Mul, Div };

Var binary(BinOp kind, Var a, Var b, const char* who) {
  Tape& tape = *a.tape();
  tape.check_input(a);
  tape.check_input(b);
  const bool complex = a.is_complex() || b.is_complex();
  if (complex) {
    if (kind != BinOp::Add && kind != BinOp::Sub)
      throw std::invalid_argument(std::string(who) + ": complex operands are only supported by add/sub");
    if (!a.is_complex() || !b.is_complex() || !(a.shape() == b.shape()))
      throw std::invalid_argument(std::string(who) + ": complex operands must have equal shapes");
  }
  const Shape shape = broadcast_shape(a, b, who);
  const auto av = a.value();
  const auto bv = b.value();
  const std::size_t n = storage(shape, complex);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[at(i, av.size())];
    const double y = bv[at(i, bv.size())];
    switch (kind) {
      case BinOp::Add: out[i] = x + y; break;
      case BinOp::Sub: out[i] = x - y; break;
      case BinOp::Mul: out[i] = x * y; break;
      case BinOp::Div: out[i] = x / y; break;
    }
  }
  const Primitive op = kind == BinOp::Add   ? Primitive::Add
                       : kind == BinOp::Sub ? Primitive::Sub
                       : kind == BinOp::Mul ? Primitive::Mul
                                            : Primitive::Div;
  return tape.push(op, {a, b}, shape, complex, std::move(out), [kind](Tape& t, Node& self) {
    Node& na = t.node(self.inputs[0]);
    Node& nb = t.node(self.inputs[1]);
    const std::size_t n = self.grad.size();
    const std::size_t sa = na.value.size();
    const std::size_t sb = nb.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double g = self.grad[i];
      const double x = na.value[at(i, sa)];
      const double y = nb.value[at(i, sb)];
      double ga = 0.0;
      double gb = 0.0;
      switch (kind) {
        case BinOp::Add: ga = g; gb = g; break;
        case BinOp::Sub: ga = g; gb = -g; break;
        case BinOp::Mul: ga = g * y; gb = g * x; break;
        case BinOp::Div: ga = g / y; gb = -g * x / (y * y); break;
      }
      if (na.requires_grad) na.grad[at(i, sa)] += ga;
      if (nb.requires_grad) nb.grad[at(i, sb)] += gb;
    }
  });
}

// Unary real elementwise op with derivative f'(x, y) expressed from input x and output y.
template <class F, class D>
Var unary(Primitive op, Var a, F f, D dfdx, bool allow_complex = false) {
  Tape& tape = *a.tape();
  tape.check_input(a);
  if (!allow_complex) require_real(a, primitive_name(op).data());
  const auto av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return tape.push(op, {a}, a.shape(), a.is_complex(), std::move(out), [dfdx](Tape& t, Node& self) {
    Node& na = t.node(self.inputs[0]);
    if (!na.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) na.grad[i] += self.grad[i] * dfdx(na.value[i], self.value[i]);
  });
}

}  // namespace

std::string_view primitive_name(Primitive op) {
  switch (op) {
    case Primitive::Leaf: return "leaf";
    case Primitive::Add: return "add";
    case Primitive::Sub: return "sub";
    case Primitive::Mul: return "mul";
    case Primitive::Div: return "div";
    case Primitive::Neg: return "neg";
    case Primitive::Square: return "square";
    case Primitive::Scale: return "scale";
    case Primitive::DivScalar: return "div_scalar";
    case Primitive::AddScalar: return "add_scalar";
    case Primitive::Log10: return "log10";
    case Primitive::Clip: return "clip";
    case Primitive::Sum: return "sum";
    case Primitive::Mean: return "mean";
    case Primitive::MaskedMean: return "masked_mean";
    case Primitive::GaussianFilter: return "gaussian_filter";
    case Primitive::ComplexLinear: return "complex_linear";
    case Primitive::ConcatCols: return "concat_cols";
    case Primitive::ModRelu: return "mod_relu";
    case Primitive::ComplexSigmoid: return "complex_sigmoid";
    case Primitive::Abs: return "abs";
    case Primitive::ApodizedSum: return "apodized_sum";
    case Primitive::ScatterAdd: return "scatter_add";
  }
  return "unknown";
}

// --- Var -------------------------------------------------------------------

std::span<const double> Var::value() const { return tape_->node(id_).value; }
std::span<const double> Var::grad() const { return tape_->node(id_).grad; }
Shape Var::shape() const { return tape_->node(id_).shape; }
bool Var::is_complex() const { return tape_->node(id_).complex; }

double Var::scalar() const {
  const Node& n = tape_->node(id_);
  if (n.complex || n.shape.size() != 1) throw std::invalid_argument("Var::scalar: node is not a real 1x1 value");
  return n.value[0];
}

// --- Tape ------------------------------------------------------------------

void Tape::check_input(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size())
    throw std::invalid_argument("autodiff: input node is not registered in this tape");
}

Var Tape::push(Primitive op, std::vector<Var> inputs, Shape shape, bool complex, std::vector<double> value,
               std::function<void(Tape&, Node&)> backward) {
  Node node;
  node.op = op;
  node.shape = shape;
  node.complex = complex;
  node.value = std::move(value);
  node.backward = std::move(backward);
  for (const auto& in : inputs) {
    check_input(in);
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.value.size() != storage(shape, complex))
    throw std::logic_error("autodiff: node value size does not match its shape");
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::variable(std::vector<double> value, Shape shape, bool complex) {
  Var v = push(Primitive::Leaf, {}, shape, complex, std::move(value), nullptr);
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::constant(std::vector<double> value, Shape shape, bool complex) {
  return push(Primitive::Leaf, {}, shape, complex, std::move(value), nullptr);
}

Var Tape::record(Primitive op, std::initializer_list<Var> inputs) {
  for (const auto& in : inputs) check_input(in);
  const std::vector<Var> in(inputs);
  auto need = [&](std::size_t n) {
    if (in.size() != n)
      throw std::invalid_argument("record(" + std::string(primitive_name(op)) + "): expected " + std::to_string(n) +
                                  " inputs, got " + std::to_string(in.size()));
  };
  switch (op) {
    case Primitive::Add: need(2); return add(in[0], in[1]);
    case Primitive::Sub: need(2); return sub(in[0], in[1]);
    case Primitive::Mul: need(2); return mul(in[0], in[1]);
    case Primitive::Div: need(2); return div(in[0], in[1]);
    case Primitive::Neg: need(1); return neg(in[0]);
    case Primitive::Square: need(1); return square(in[0]);
    case Primitive::Log10: need(1); return log10(in[0]);
    case Primitive::Sum: need(1); return sum(in[0]);
    case Primitive::Mean: need(1); return mean(in[0]);
    case Primitive::ConcatCols: need(2); return concat_cols(in[0], in[1]);
    case Primitive::ComplexSigmoid: need(1); return complex_sigmoid(in[0]);
    case Primitive::Abs: need(1); return abs(in[0]);
    case Primitive::ApodizedSum: need(2); return apodized_sum(in[0], in[1]);
    default:
      throw std::invalid_argument("record: primitive '" + std::string(primitive_name(op)) +
                                  "' needs attributes; use its dedicated function");
  }
}

void Tape::backward(Var loss) {
  check_input(loss);
  const Node& root = nodes_[loss.id()];
  if (root.complex || root.shape.size() != 1)
    throw std::invalid_argument("backward: loss must be a real scalar, got " + std::to_string(root.shape.rows) + "x" +
                                std::to_string(root.shape.cols) + (root.complex ? " complex" : ""));
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) n.grad.assign(n.value.size(), 0.0);
    else n.grad.clear();
  }
  if (!root.requires_grad) return;
  nodes_[loss.id()].grad[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, n);
  }
}

std::vector<std::uint8_t> Tape::branch_pattern() const {
  std::vector<std::uint8_t> out;
  for (const auto& n : nodes_) out.insert(out.end(), n.branches.begin(), n.branches.end());
  return out;
}

// --- real elementwise --------------------------------------------------------

Var add(Var a, Var b) { return binary(BinOp::Add, a, b, "add"); }
Var sub(Var a, Var b) { return binary(BinOp::Sub, a, b, "sub"); }
Var mul(Var a, Var b) {
  require_real(a, "mul");
  require_real(b, "mul");
  return binary(BinOp::Mul, a, b, "mul");
}
Var div(Var a, Var b) {
  require_real(a, "div");
  require_real(b, "div");
  return binary(BinOp::Div, a, b, "div");
}

Var neg(Var a) {
  return unary(Primitive::Neg, a, [](double x) { return -x; }, [](double, double) { return -1.0; }, true);
}

Var square(Var a) {
  return unary(Primitive::Square, a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var scale(Var a, double factor) {
  return unary(
      Primitive::Scale, a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; },
      true);
}

Var div_scalar(Var a, double divisor) {
  return unary(
      Primitive::DivScalar, a, [divisor](double x) { return x / divisor; },
      [divisor](double, double) { return 1.0 / divisor; }, true);
}

Var add_scalar(Var a, double offset) {
  return unary(Primitive::AddScalar, a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var log10(Var a) {
  return unary(
      Primitive::Log10, a, [](double x) { return std::log10(x); },
      [](double x, double) { return 1.0 / (x * std::numbers::ln10); });
}

Var clip(Var a, double lo, double hi) {
  Tape& tape = *a.tape();
  tape.check_input(a);
  require_real(a, "clip");
  const auto av = a.value();
  std::vector<double> out(av.size());
  std::vector<std::uint8_t> branch(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    out[i] = std::clamp(av[i], lo, hi);
    branch[i] = av[i] <= lo ? 0 : (av[i] >= hi ? 2 : 1);
  }
  Var v = tape.push(Primitive::Clip, {a}, a.shape(), false, std::move(out), [](Tape& t, Node& self) {
    Node& na = t.node(self.inputs[0]);
    if (!na.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (self.branches[i] == 1) na.grad[i] += self.grad[i];
    }
  });
  tape.node(v.id()).branches = std::move(branch);
  return v;
}

Var sum(Var a) {
  Tape& tape = *a.tape();
  tape.check_input(a);
  require_real(a, "sum");
  double s = 0.0;
  for (double x : a.value()) s += x;
  return tape.push(Primitive::Sum, {a}, {1, 1}, false, {s}, [](Tape& t, Node& self) {
    Node& na = t.node(self.inputs[0]);
    if (!na.requires_grad) return;
    for (auto& g : na.grad) g += self.grad[0];
  });
}

Var mean(Var a) {
  Tape& tape = *a.tape();
  tape.check_input(a);
  require_real(a, "mean");
  const auto av = a.value();
  if (av.empty()) throw std::invalid_argument("mean: empty node");
  double s = 0.0;
  for (double x : av) s += x;
  const double count = static_cast<double>(av.size());
  return tape.push(Primitive::Mean, {a}, {1, 1}, false, {s / count}, [count](Tape& t, Node& self) {
    Node& na = t.node(self.inputs[0]);
    if (!na.requires_grad) return;
    for (auto& g : na.grad) g += self.grad[0] / count;
  });
}

Var masked_mean(Var a, std::span<const std::uint8_t> mask) {
  Tape& tape = *a.tape();
  tape.check_input(a);
  require_real(a, "masked_mean");
  const auto av = a.value();
  if (mask.size() != av.size()) throw std::invalid_argument("masked_mean: mask size mismatch");
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (mask[i] == 0) continue;
    s += av[i];
    ++count;
  }
  if (count == 0) throw std::invalid_argument("masked_mean: empty mask");
  const double n = static_cast<double>(count);
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return tape.push(Primitive::MaskedMean, {a}, {1, 1}, false, {s / n}, [m = std::move(m), n](Tape& t, Node& self) {
    Node& na = t.node(self.inputs[0]);
    if (!na.requires_grad) return;
    for (std::size_t i = 0; i < na.grad.size(); ++i) {
      if (m[i] != 0) na.grad[i] += self.grad[0] / n;
    }
  });
}

Var gaussian_filter(Var image, std::span<const double> taps) {
  Tape& tape = *image.tape();
  tape.check_input(image);
  require_real(image, "gaussian_filter");
  const Shape in = image.shape();
  const std::size_t k = taps.size();
  if (k == 0 || in.rows < k || in.cols < k)
    throw std::invalid_argument("gaussian_filter: image smaller than the window");
  const Shape out_shape{in.rows - k + 1, in.cols - k + 1};
  std::vector<double> out(out_shape.size());
  kernels::filter_valid(image.value(), in.cols, in.rows, taps, out);
  std::vector<double> w(taps.begin(), taps.end());
  return tape.push(Primitive::GaussianFilter, {image}, out_shape, false, std::move(out),
                   [w = std::move(w), in, out_shape](Tape& t, Node& self) {
                     Node& na = t.node(self.inputs[0]);
                     if (!na.requires_grad) return;
                     const std::size_t k = w.size();
                     // Transpose of the column pass, then of the row pass.
                     std::vector<double> rows(in.rows * out_shape.cols, 0.0);
                     for (std::size_t r = 0; r < out_shape.rows; ++r) {
                       for (std::size_t c = 0; c < out_shape.cols; ++c) {
                         const double g = self.grad[r * out_shape.cols + c];
                         for (std::size_t tt = 0; tt < k; ++tt) rows[(r + tt) * out_shape.cols + c] += w[tt] * g;
                       }
                     }
                     for (std::size_t r = 0; r < in.rows; ++r) {
                       for (std::size_t c = 0; c < out_shape.cols; ++c) {
                         const double g = rows[r * out_shape.cols + c];
                         for (std::size_t tt = 0; tt < k; ++tt) na.grad[r * in.cols + c + tt] += w[tt] * g;
                       }
                     }
                   });
}

// --- complex -------------------------------------------------------------------

Var complex_linear(Var x, Var w, Var b) {
  Tape& tape = *x.tape();
  tape.check_input(x);
  tape.check_input(w);
  tape.check_input(b);
  require_complex(x, "complex_linear");
  require_complex(w, "complex_linear");
  require_complex(b, "complex_linear");
  const Shape sx = x.shape();
  const Shape sw = w.shape();
  if (sx.cols != sw.rows || b.shape().size() != sw.cols)
    throw std::invalid_argument("complex_linear: shape mismatch (" + std::to_string(sx.rows) + "x" +
                                std::to_string(sx.cols) + ") * (" + std::to_string(sw.rows) + "x" +
                                std::to_string(sw.cols) + ")");
  const Shape out_shape{sx.rows, sw.cols};
  std::vector<double> out(storage(out_shape, true));
  kernels::complex_linear(x.value(), w.value(), b.value(), sx.rows, sx.cols, sw.cols, out);
  return tape.push(Primitive::ComplexLinear, {x, w, b}, out_shape, true, std::move(out), [](Tape& t, Node& self) {
    Node& nx = t.node(self.inputs[0]);
    Node& nw = t.node(self.inputs[1]);
    Node& nb = t.node(self.inputs[2]);
    const auto gy = cmap(self.grad, self.shape);
    // Real-pair gradients: G_X = G_Y W^H, G_W = X^H G_Y, G_b = column sums of G_Y.
    if (nx.requires_grad) cmap(nx.grad, nx.shape).noalias() += gy * cmap(nw.value, nw.shape).adjoint();
    if (nw.requires_grad) cmap(nw.grad, nw.shape).noalias() += cmap(nx.value, nx.shape).adjoint() * gy;
    if (nb.requires_grad) {
      // Plain loop: Eigen's vectorized reductions peel by address alignment, which varies between runs.
      const std::size_t cols = self.shape.cols;
      for (std::size_t r = 0; r < self.shape.rows; ++r)
        for (std::size_t c = 0; c < 2 * cols; ++c) nb.grad[c] += self.grad[r * 2 * cols + c];
    }
  });
}

Var concat_cols(Var a, Var b) {
  Tape& tape = *a.tape();
  tape.check_input(a);
  tape.check_input(b);
  if (a.is_complex() != b.is_complex()) throw std::invalid_argument("concat_cols: mixed real/complex operands");
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  if (sa.rows != sb.rows) throw std::invalid_argument("concat_cols: row counts differ");
  const std::size_t width = a.is_complex() ? 2 : 1;
  const Shape out_shape{sa.rows, sa.cols + sb.cols};
  std::vector<double> out(storage(out_shape, a.is_complex()));
  const auto av = a.value();
  const auto bv = b.value();
  const std::size_t ra = sa.cols * width;
  const std::size_t rb = sb.cols * width;
  for (std::size_t r = 0; r < sa.rows; ++r) {
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(r * ra), ra, out.begin() + static_cast<std::ptrdiff_t>(r * (ra + rb)));
    std::copy_n(bv.begin() + static_cast<std::ptrdiff_t>(r * rb), rb,
                out.begin() + static_cast<std::ptrdiff_t>(r * (ra + rb) + ra));
  }
  return tape.push(Primitive::ConcatCols, {a, b}, out_shape, a.is_complex(), std::move(out),
                   [ra, rb](Tape& t, Node& self) {
                     Node& na = t.node(self.inputs[0]);
                     Node& nb = t.node(self.inputs[1]);
                     for (std::size_t r = 0; r < self.shape.rows; ++r) {
                       const std::size_t base = r * (ra + rb);
                       if (na.requires_grad)
                         for (std::size_t i = 0; i < ra; ++i) na.grad[r * ra + i] += self.grad[base + i];
                       if (nb.requires_grad)
                         for (std::size_t i = 0; i < rb; ++i) nb.grad[r * rb + i] += self.grad[base + ra + i];
                     }
                   });
}

Var mod_relu(Var z, Var bias) {
  Tape& tape = *z.tape();
  tape.check_input(z);
  tape.check_input(bias);
  require_complex(z, "mod_relu");
  require_real(bias, "mod_relu");
  const Shape s = z.shape();
  if (bias.shape().size() != s.cols) throw std::invalid_argument("mod_relu: need one bias per column");
  std::vector<double> out(storage(s, true));
  kernels::mod_relu(z.value(), bias.value(), s.rows, s.cols, out);
  std::vector<std::uint8_t> branch(s.size());
  const auto zv = z.value();
  const auto bv = bias.value();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double mag = std::sqrt(zv[2 * i] * zv[2 * i] + zv[2 * i + 1] * zv[2 * i + 1]);
    branch[i] = (mag > 0.0 && mag + bv[i % s.cols] > 0.0) ? 1 : 0;
  }
  Var v = tape.push(Primitive::ModRelu, {z, bias}, s, true, std::move(out), [](Tape& t, Node& self) {
    Node& nz = t.node(self.inputs[0]);
    Node& nb = t.node(self.inputs[1]);
    const std::size_t cols = self.shape.cols;
    for (std::size_t i = 0; i < self.shape.size(); ++i) {
      if (self.branches[i] == 0) continue;
      const double re = nz.value[2 * i];
      const double im = nz.value[2 * i + 1];
      const double gr = self.grad[2 * i];
      const double gi = self.grad[2 * i + 1];
      const double mag = std::sqrt(re * re + im * im);
      const double b = nb.value[i % cols];
      // out = z (1 + b / |z|): d/dz = (1 + b/|z|) I - (b / |z|^3) z z^T, d/db = z / |z|.
      if (nz.requires_grad) {
        const double s1 = 1.0 + b / mag;
        const double proj = (re * gr + im * gi) * b / (mag * mag * mag);
        nz.grad[2 * i] += s1 * gr - proj * re;
        nz.grad[2 * i + 1] += s1 * gi - proj * im;
      }
      if (nb.requires_grad) nb.grad[i % cols] += (re * gr + im * gi) / mag;
    }
  });
  tape.node(v.id()).branches = std::move(branch);
  return v;
}

Var complex_sigmoid(Var z) {
  Tape& tape = *z.tape();
  tape.check_input(z);
  require_complex(z, "complex_sigmoid");
  std::vector<double> out(z.value().size());
  kernels::complex_sigmoid(z.value(), out);
  return tape.push(Primitive::ComplexSigmoid, {z}, z.shape(), true, std::move(out), [](Tape& t, Node& self) {
    Node& nz = t.node(self.inputs[0]);
    if (!nz.requires_grad) return;
    for (std::size_t e = 0; e < self.grad.size(); ++e) {
      const double s = self.value[e];
      nz.grad[e] += self.grad[e] * s * (1.0 - s);
    }
  });
}

Var abs(Var z) {
  Tape& tape = *z.tape();
  tape.check_input(z);
  require_complex(z, "abs");
  const auto zv = z.value();
  const Shape s = z.shape();
  std::vector<double> out(s.size());
  std::vector<std::uint8_t> branch(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = std::abs(cdouble(zv[2 * i], zv[2 * i + 1]));
    branch[i] = out[i] > 0.0 ? 1 : 0;
  }
  Var v = tape.push(Primitive::Abs, {z}, s, false, std::move(out), [](Tape& t, Node& self) {
    Node& nz = t.node(self.inputs[0]);
    if (!nz.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double mag = self.value[i];
      if (!(mag > 0.0)) continue;
      nz.grad[2 * i] += self.grad[i] * nz.value[2 * i] / mag;
      nz.grad[2 * i + 1] += self.grad[i] * nz.value[2 * i + 1] / mag;
    }
  });
  tape.node(v.id()).branches = std::move(branch);
  return v;
}

Var apodized_sum(Var weights, Var samples) {
  Tape& tape = *weights.tape();
  tape.check_input(weights);
  tape.check_input(samples);
  require_complex(weights, "apodized_sum");
  require_complex(samples, "apodized_sum");
  const Shape s = weights.shape();
  if (!(samples.shape() == s)) throw std::invalid_argument("apodized_sum: weight and sample shapes differ");
  const auto* w = reinterpret_cast<const cdouble*>(weights.value().data());
  const auto* x = reinterpret_cast<const cdouble*>(samples.value().data());
  std::vector<double> out(2 * s.rows);
  for (std::size_t p = 0; p < s.rows; ++p) {
    cdouble acc{0.0, 0.0};
    for (std::size_t n = 0; n < s.cols; ++n) acc += w[p * s.cols + n] * x[p * s.cols + n];
    out[2 * p] = acc.real();
    out[2 * p + 1] = acc.imag();
  }
  return tape.push(Primitive::ApodizedSum, {weights, samples}, {s.rows, 1}, true, std::move(out),
                   [](Tape& t, Node& self) {
                     Node& nw = t.node(self.inputs[0]);
                     Node& ns = t.node(self.inputs[1]);
                     const std::size_t cols = nw.shape.cols;
                     const auto* w = reinterpret_cast<const cdouble*>(nw.value.data());
                     const auto* x = reinterpret_cast<const cdouble*>(ns.value.data());
                     auto* gw = reinterpret_cast<cdouble*>(nw.grad.data());
                     auto* gs = reinterpret_cast<cdouble*>(ns.grad.data());
                     for (std::size_t p = 0; p < self.shape.rows; ++p) {
                       const cdouble g(self.grad[2 * p], self.grad[2 * p + 1]);
                       for (std::size_t n = 0; n < cols; ++n) {
                         if (nw.requires_grad) gw[p * cols + n] += g * std::conj(x[p * cols + n]);
                         if (ns.requires_grad) gs[p * cols + n] += g * std::conj(w[p * cols + n]);
                       }
                     }
                   });
}

Var scatter_add(Var y, std::span<const std::size_t> index, Shape shape) {
  Tape& tape = *y.tape();
  tape.check_input(y);
  const std::size_t width = y.is_complex() ? 2 : 1;
  if (index.size() != y.shape().size()) throw std::invalid_argument("scatter_add: one index per element required");
  std::vector<double> out(storage(shape, y.is_complex()), 0.0);
  const auto yv = y.value();
  for (std::size_t p = 0; p < index.size(); ++p) {
    if (index[p] >= shape.size()) throw std::out_of_range("scatter_add: index out of range");
    for (std::size_t c = 0; c < width; ++c) out[index[p] * width + c] += yv[p * width + c];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return tape.push(Primitive::ScatterAdd, {y}, shape, y.is_complex(), std::move(out),
                   [idx = std::move(idx), width](Tape& t, Node& self) {
                     Node& ny = t.node(self.inputs[0]);
                     if (!ny.requires_grad) return;
                     for (std::size_t p = 0; p < idx.size(); ++p) {
                       for (std::size_t c = 0; c < width; ++c) ny.grad[p * width + c] += self.grad[idx[p] * width + c];
                     }
                   });
}

// --- gradient check ----------------------------------------------------------

GradCheckReport grad_check(const Objective& f, std::span<const double> params, double step, double tolerance,
                           double floor) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckReport report;
  const Evaluation base = f(params, true);
  if (base.gradient.size() != params.size())
    throw std::invalid_argument("grad_check: objective returned a gradient of the wrong size");
  std::vector<double> probe(params.begin(), params.end());
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const Evaluation plus = f(probe, false);
    probe[i] = params[i] - step;
    const Evaluation minus = f(probe, false);
    probe[i] = params[i];
    if (plus.branches != base.branches || minus.branches != base.branches) {
      report.excluded.push_back(i);
      continue;
    }
    const double fd = (plus.value - minus.value) / (2.0 * step);
    const double g = base.gradient[i];
    const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), floor});
    ++report.checked;
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_index = i;
    }
    if (rel > tolerance) report.failing.push_back(i);
  }
  return report;
}

}  // namespace dwinr::ad
