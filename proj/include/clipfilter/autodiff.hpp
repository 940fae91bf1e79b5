// Copyright 2026 The clipfilter Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "clipfilter/tensor.hpp"

namespace clipfilter {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Accumulated gradient; zeros of the value's shape if nothing reached this node.
  Tensor grad() const;
  bool requires_grad() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Record-and-replay reverse-mode differentiation. One tape per forward
// evaluation; nodes are appended in evaluation order, so inputs always
// precede their consumers and backward() is a single reverse sweep.
class Tape {
 public:
  // Receives the output gradient; pushes contributions via accumulate().
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  // Gradients land on every node reachable from `loss`; loss must be a scalar.
  void backward(const Var& loss);

  void accumulate(const Var& target, const Tensor& contribution);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  Tensor grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  // deque: values handed out by reference stay put while the tape grows
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// Positions where the mask is 0 are excluded from softmaxes and means.
using Mask = std::vector<std::uint8_t>;

std::size_t count_valid(const Mask& mask);

// ---- differentiable primitives ----

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
// a + t (b - a) elementwise via std::lerp, which never leaves [a, b] for t in [0, 1].
Var lerp(const Var& a, const Var& b, const Var& t);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var neg(const Var& a);

// a[m x n] + row[n] broadcast over rows.
Var add_row(const Var& a, const Var& row);
// a[m x n] scaled per row by col[m].
Var mul_col(const Var& a, const Var& col);
// Repeats a length-n vector into an m x n matrix.
Var broadcast_row(const Var& row, std::size_t m);

// Concatenation of rank-2 operands along axis 0 (rows) or 1 (last axis).
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice_rows(const Var& a, std::size_t begin, std::size_t count);
Var gather_column(const Var& a, std::size_t column);
Var gather_row(const Var& a, std::size_t row);
Var reshape(const Var& a, Shape shape);

Var relu(const Var& a);
Var sigmoid(const Var& a);
Var log(const Var& a);
Var exp(const Var& a);
// max(a, lo) elementwise; gradient passes only where a > lo.
Var clamp_min(const Var& a, double lo);
Var clamp_max(const Var& a, double hi);

// Softmax along `axis` of a rank-1 or rank-2 tensor. An optional same-shape
// mask removes entries: they receive probability 0 and no gradient.
Var softmax(const Var& x, std::size_t axis, const Tensor* mask = nullptr);

Var sum(const Var& a);  // scalar
Var sum(const Var& a, std::size_t axis);
// Mean of a rank-2 tensor along `axis`, over positions where mask != 0.
Var mean(const Var& a, std::size_t axis, const Mask* mask = nullptr);
// Global average pooling: mean over the valid rows of a matrix.
Var gap(const Var& a, const Mask* row_mask = nullptr);

inline constexpr double kNormEpsilon = 1e-12;

// x / max(||x||, eps) for each row.
Var normalize_rows(const Var& a, double eps = kNormEpsilon);
// cosine of each row of x[m x d] against y[d] -> [m]
Var cosine_sim(const Var& x, const Var& y);
// all-pairs cosine, x[m x d], y[n x d] -> [m x n]
Var cosine_matrix(const Var& x, const Var& y);
// paired-row cosine, x[m x d], y[m x d] -> [m]
Var cosine_rows(const Var& x, const Var& y);

// x W (+ b)
Var linear(const Var& x, const Var& weight, const Var* bias = nullptr);

// Builds a mask tensor of shape [rows x mask.size()] repeating `mask` on every row.
Tensor column_mask(const Mask& mask, std::size_t rows);

}  // namespace clipfilter
