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

#include "clipfilter/rfm.hpp"

#include <string>

namespace clipfilter {

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "learned") return FusionMode::learned;
  if (text == "average") return FusionMode::average;
  throw std::invalid_argument("unknown fusion mode '" + std::string(text) + "'");
}

std::string_view to_string(FusionMode mode) { return mode == FusionMode::learned ? "learned" : "average"; }

RelevanceSimilarities relevance_similarities(const Var& f_ev, const Var& f_ec, const Var& f_eq,
                                             const Mask& query_valid) {
  if (f_ev.shape() != f_ec.shape()) {
    throw DimensionError("relevance_similarities: " + shape_string(f_ev.shape()) + " vs " +
                         shape_string(f_ec.shape()));
  }
  if (query_valid.size() != f_eq.value().dim(0)) throw DimensionError("relevance_similarities: mask length");
  auto keep = f_ev.tape().constant(column_mask(query_valid, f_ev.value().dim(0)));
  return {hadamard(cosine_matrix(f_ev, f_eq), keep), hadamard(cosine_matrix(f_ec, f_eq), keep)};
}

Var fuse(const Var& s_qv, const Var& s_qc, const FusionGate& gate) {
  if (s_qv.shape() != s_qc.shape()) {
    throw DimensionError("fuse: " + shape_string(s_qv.shape()) + " vs " + shape_string(s_qc.shape()));
  }
  if (gate.mode == FusionMode::average) return scale(add(s_qv, s_qc), 0.5);

  // logits = w0 * s_qv + w1 * s_qc + b, evaluated per entry
  const Shape shape = s_qv.shape();
  const auto n = s_qv.value().size();
  auto pairs = concat({reshape(s_qv, {n, 1}), reshape(s_qc, {n, 1})}, 1);
  auto logits = linear(pairs, reshape(gate.weights.weight, {2, 1}), &gate.weights.bias);
  auto w = reshape(sigmoid(logits), shape);
  return lerp(s_qc, s_qv, w);  // W * s_qv + (1 - W) * s_qc
}

FilterResult iterative_filter(const Var& f_ev, const Var& s_qvc, const WordHighlight& highlight, std::size_t n) {
  if (s_qvc.value().rank() != 2 || s_qvc.value().dim(0) != f_ev.value().dim(0)) {
    throw DimensionError("iterative_filter: similarity " + shape_string(s_qvc.shape()) + " vs features " +
                         shape_string(f_ev.shape()));
  }
  if (highlight.scores.size() != s_qvc.value().dim(1)) throw DimensionError("iterative_filter: word count");
  FilterResult out;
  out.selected_words = highlight.top(n);
  out.trace.push_back(f_ev);
  auto x = f_ev;
  for (auto word : out.selected_words) {
    x = mul_col(x, add_scalar(gather_column(s_qvc, word), 1.0));
    out.trace.push_back(x);
  }
  out.f_fv = x;
  return out;
}

RfmOutput rfm_forward(const FemOutput& fem, const FusionGate& gate, std::size_t n) {
  auto sims = relevance_similarities(fem.f_ev, fem.f_ec, fem.f_eq, fem.highlight.valid);
  auto fused = fuse(sims.s_qv, sims.s_qc, gate);
  auto filtered = iterative_filter(fem.f_ev, fused, fem.highlight, n);
  return {sims.s_qv, sims.s_qc, fused, std::move(filtered.selected_words), filtered.f_fv,
          std::move(filtered.trace)};
}

}  // namespace clipfilter
