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

#include "clipfilter/params.hpp"

#include <cmath>
#include <random>

namespace clipfilter {

InitMode parse_init_mode(std::string_view text) {
  if (text == "identity") return InitMode::identity;
  if (text == "random") return InitMode::random;
  throw std::invalid_argument("unknown init mode '" + std::string(text) + "'");
}

std::string_view to_string(InitMode mode) { return mode == InitMode::identity ? "identity" : "random"; }

namespace {

// Shapes are declared once here and shared by every initializer.
template <class F>
void for_each_shape(ModelParams& p, std::size_t d, F&& f) {
  auto affine = [&](Affine<Tensor>& a, std::size_t in) {
    f(a.weight, Shape{in, d}, true, in);
    f(a.bias, Shape{d}, false, in);
  };
  affine(p.input.query, d);
  affine(p.input.visual, d);
  affine(p.input.caption, d);
  f(p.fem.attn_q, Shape{d, d}, true, d);
  f(p.fem.attn_k, Shape{d, d}, true, d);
  f(p.fem.attn_v, Shape{d, d}, true, d);
  affine(p.fem.proj_v, d);
  affine(p.fem.proj_c, d);
  affine(p.fem.proj_q, d);
  affine(p.fem.proj_hat_v, 4 * d);
  affine(p.fem.proj_hat_c, 4 * d);
  affine(p.fem.conv_v, 2 * d);
  affine(p.fem.conv_c, 2 * d);
  f(p.fem.cross_q, Shape{d, d}, true, d);
  f(p.fem.cross_k, Shape{d, d}, true, d);
  f(p.fem.cross_v, Shape{d, d}, true, d);
  f(p.gate.weight, Shape{2}, false, 2);
  f(p.gate.bias, Shape{1}, false, 2);
}

}  // namespace

ModelParams zero_params(std::size_t d) {
  if (d == 0) throw ContractError("feature dimension must be positive");
  ModelParams p;
  for_each_shape(p, d, [](Tensor& t, const Shape& shape, bool, std::size_t) { t = Tensor(shape); });
  return p;
}

ModelParams init_params(std::size_t d, InitMode mode, std::uint64_t seed) {
  ModelParams p = zero_params(d);
  if (mode == InitMode::identity) {
    for_each_shape(p, d, [](Tensor& t, const Shape& shape, bool is_weight, std::size_t) {
      if (!is_weight) return;
      for (std::size_t i = 0; i < shape[1]; ++i) t(i, i) = 1.0;
    });
    return p;
  }
  std::mt19937_64 rng(seed);
  for_each_shape(p, d, [&rng](Tensor& t, const Shape&, bool, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.data()) v = dist(rng);
  });
  return p;
}

BoundParams bind(Tape& tape, const ModelParams& params, bool requires_grad) {
  BoundParams out;
  std::vector<Var*> dst;
  out.visit([&dst](const std::string&, Var& v) { dst.push_back(&v); });
  auto src = named_tensors(params);
  for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = tape.leaf(*src[i].second, requires_grad);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> named_tensors(ModelParams& params) {
  std::vector<std::pair<std::string, Tensor*>> out;
  params.visit([&out](const std::string& name, Tensor& t) { out.emplace_back(name, &t); });
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> named_tensors(const ModelParams& params) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : named_tensors(const_cast<ModelParams&>(params))) out.emplace_back(name, t);
  return out;
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : named_tensors(params)) n += t->size();
  return n;
}

}  // namespace clipfilter
