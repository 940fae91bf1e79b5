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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clipfilter/autodiff.hpp"
#include "clipfilter/tensor.hpp"

namespace clipfilter {

// Affine map x W + b. T is Tensor for stored parameters, Var once bound to a tape.
template <class T>
struct Affine {
  T weight;
  T bias;

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    f(std::string(prefix) + ".weight", weight);
    f(std::string(prefix) + ".bias", bias);
  }
};

// Per-modality input projections applied to the stored encoder features
// before any other stage (query, visual and caption-token features).
template <class T>
struct InputWeights {
  Affine<T> query, visual, caption;

  template <class F>
  void visit(F&& f) {
    query.visit("input.query", f);
    visual.visit("input.visual", f);
    caption.visit("input.caption", f);
  }
};

template <class T>
struct FemWeights {
  // word self-attention (no bias)
  T attn_q, attn_k, attn_v;
  // projections feeding the video/caption-query similarity scores
  Affine<T> proj_v, proj_c, proj_q;
  // 4d -> d fusion of the concatenated interaction features
  Affine<T> proj_hat_v, proj_hat_c;
  // pointwise temporal convolution, 2d -> d channels
  Affine<T> conv_v, conv_c;
  // visual/caption cross-attention, shared by both directions (no bias)
  T cross_q, cross_k, cross_v;

  template <class F>
  void visit(F&& f) {
    f("fem.attn_q", attn_q);
    f("fem.attn_k", attn_k);
    f("fem.attn_v", attn_v);
    proj_v.visit("fem.proj_v", f);
    proj_c.visit("fem.proj_c", f);
    proj_q.visit("fem.proj_q", f);
    proj_hat_v.visit("fem.proj_hat_v", f);
    proj_hat_c.visit("fem.proj_hat_c", f);
    conv_v.visit("fem.conv_v", f);
    conv_c.visit("fem.conv_c", f);
    f("fem.cross_q", cross_q);
    f("fem.cross_k", cross_k);
    f("fem.cross_v", cross_v);
  }
};

// 2 -> 1 affine map applied per entry to (S_qv, S_qc), followed by a sigmoid.
template <class T>
struct GateWeights {
  T weight;  // [2]
  T bias;    // [1]

  template <class F>
  void visit(F&& f) {
    f("gate.weight", weight);
    f("gate.bias", bias);
  }
};

template <class T>
struct ModelWeights {
  InputWeights<T> input;
  FemWeights<T> fem;
  GateWeights<T> gate;

  template <class F>
  void visit(F&& f) {
    input.visit(f);
    fem.visit(f);
    gate.visit(f);
  }
};

using ModelParams = ModelWeights<Tensor>;
using BoundParams = ModelWeights<Var>;

enum class InitMode { identity, random };

InitMode parse_init_mode(std::string_view text);
std::string_view to_string(InitMode mode);

// Identity mode: square maps are I, rectangular maps select the first d
// inputs ([I; 0; ...]), biases and the gate are zero (gate = 0.5 everywhere).
// Random mode: every entry ~ U(-1/sqrt(d_in), 1/sqrt(d_in)) from `seed`.
ModelParams init_params(std::size_t d, InitMode mode, std::uint64_t seed);

// All-zero parameters of the right shapes.
ModelParams zero_params(std::size_t d);

// Places every parameter on `tape` as a leaf.
BoundParams bind(Tape& tape, const ModelParams& params, bool requires_grad = true);

std::size_t parameter_count(const ModelParams& params);

// Flattened (name, tensor) listing in a fixed order.
std::vector<std::pair<std::string, const Tensor*>> named_tensors(const ModelParams& params);
std::vector<std::pair<std::string, Tensor*>> named_tensors(ModelParams& params);

}  // namespace clipfilter
