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
#include <string_view>
#include <vector>

#include "clipfilter/autodiff.hpp"
#include "clipfilter/fem.hpp"
#include "clipfilter/params.hpp"

namespace clipfilter {

enum class FusionMode { learned, average };

FusionMode parse_fusion_mode(std::string_view text);
std::string_view to_string(FusionMode mode);

struct FusionGate {
  FusionMode mode = FusionMode::learned;
  GateWeights<Var> weights;  // unused in average mode
};

// Default number of filtering iterations.
inline constexpr std::size_t kDefaultIterations = 5;

struct RfmOutput {
  Var s_qv, s_qc, s_qvc;                 // [L_v x L_q]
  std::vector<std::size_t> selected_words;
  Var f_fv;                              // [L_v x d]
  std::vector<Var> trace;                // x_0 .. x_N
};

struct RelevanceSimilarities {
  Var s_qv, s_qc;
};

// Cosine of every enhanced clip (visual and caption) against every enhanced
// word; padded word columns are zeroed.
RelevanceSimilarities relevance_similarities(const Var& f_ev, const Var& f_ec, const Var& f_eq,
                                             const Mask& query_valid);

// Per-entry W * s_qv + (1 - W) * s_qc with W = sigmoid(w0 s_qv + w1 s_qc + b),
// or W = 1/2 in average mode.
Var fuse(const Var& s_qv, const Var& s_qc, const FusionGate& gate);

struct FilterResult {
  Var f_fv;
  std::vector<Var> trace;
  std::vector<std::size_t> selected_words;
};

// x_0 = f_ev; x_j = x_{j-1} * (1 + s_qvc[:, i_j]) row-wise, i_j the j-th
// ranked valid word. Throws ContractError when n exceeds the valid words.
FilterResult iterative_filter(const Var& f_ev, const Var& s_qvc, const WordHighlight& highlight, std::size_t n);

RfmOutput rfm_forward(const FemOutput& fem, const FusionGate& gate, std::size_t n);

}  // namespace clipfilter
