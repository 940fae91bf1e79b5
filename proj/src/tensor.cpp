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

#include "clipfilter/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace clipfilter {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw DimensionError("tensor rank must be 1..3, got " + shape_string(shape));
  }
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != element_count(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({1}, std::vector<double>{value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> tmp;
  for (const auto& r : rows) tmp.emplace_back(r);
  return from_rows(tmp);
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DimensionError("matrix needs at least one row");
  const auto n = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw DimensionError("ragged matrix rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), n}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() == 1) return 1;
  return element_count(shape_) / shape_.back();
}

std::size_t Tensor::cols() const { return shape_.back(); }

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ContractError("item() needs a single-element tensor, got " + shape_string(shape_));
  }
  return data_[0];
}

std::vector<double> Tensor::row(std::size_t i) const {
  const auto n = cols();
  return {data_.begin() + static_cast<std::ptrdiff_t>(i * n),
          data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n)};
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw DimensionError("max_abs_diff size mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace clipfilter
