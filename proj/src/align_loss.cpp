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

#include "clipfilter/align_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace clipfilter {

void validate(const LossWeights& weights) {
  for (double v : {weights.qv, weights.qc, weights.cc}) {
    if (!std::isfinite(v) || v < 0.0) throw ContractError("loss weights must be finite and non-negative");
  }
}

namespace {

Var stack_vectors(const std::vector<Var>& rows) {
  std::vector<Var> parts;
  parts.reserve(rows.size());
  for (const auto& r : rows) parts.push_back(reshape(r, {1, r.value().size()}));
  return concat(parts, 0);
}

}  // namespace

Var loss_query_video(const std::vector<Var>& video_globals, const std::vector<Var>& query_globals) {
  const auto b = video_globals.size();
  if (b == 0 || query_globals.size() != b) throw ContractError("loss_query_video needs B >= 1 matching pairs");
  auto& tape = video_globals.front().tape();
  // sims[i, j] = Sim(G_v_i, G_q_j); normalize over i for each query j
  auto sims = cosine_matrix(stack_vectors(video_globals), stack_vectors(query_globals));
  auto log_prob = log(softmax(sims, 0));
  auto matched = sum(hadamard(log_prob, tape.constant(Tensor::identity(b))));
  return scale(matched, -1.0 / static_cast<double>(b));
}

Var loss_query_clip(const Var& s_qv, const Mask& relevance, const Mask& query_valid) {
  const auto& sv = s_qv.value();
  if (sv.rank() != 2 || relevance.size() != sv.dim(0) || query_valid.size() != sv.dim(1)) {
    throw DimensionError("loss_query_clip: similarity " + shape_string(sv.shape()) + " vs masks (" +
                         std::to_string(relevance.size()) + ", " + std::to_string(query_valid.size()) + ")");
  }
  auto& tape = s_qv.tape();
  auto g = mean(sigmoid(s_qv), 1, &query_valid);
  g = clamp_max(clamp_min(g, kProbabilityClamp), 1.0 - kProbabilityClamp);
  Tensor m({relevance.size()});
  Tensor not_m({relevance.size()});
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    m[i] = relevance[i] ? 1.0 : 0.0;
    not_m[i] = 1.0 - m[i];
  }
  auto pos = hadamard(tape.constant(m), log(g));
  auto negative = hadamard(tape.constant(not_m), log(add_scalar(neg(g), 1.0)));
  return neg(sum(add(pos, negative)));
}

Var loss_caption_clip(const std::vector<Var>& visual, const std::vector<Var>& captions) {
  const auto b = visual.size();
  if (b == 0 || captions.size() != b) throw ContractError("loss_caption_clip needs B >= 1 matching pairs");
  std::vector<Var> terms;
  for (std::size_t k = 0; k < b; ++k) {
    const auto lk = captions[k].value().dim(0);
    if (visual[k].value().dim(0) != lk) throw DimensionError("loss_caption_clip: clip counts differ within a sample");
    auto positive = sum(exp(cosine_rows(visual[k], captions[k])));
    auto denom = positive;
    for (std::size_t i = 0; i < b; ++i) {
      if (i == k) continue;
      const auto shared = std::min(lk, visual[i].value().dim(0));
      auto cross = cosine_rows(slice_rows(visual[i], 0, shared), slice_rows(captions[k], 0, shared));
      denom = add(denom, sum(exp(cross)));
    }
    terms.push_back(sub(log(positive), log(denom)));
  }
  return scale(mean_of(terms), -1.0);
}

Var loss_total(const Var& l_qv, const Var& l_qc, const Var& l_cc, const LossWeights& weights) {
  validate(weights);
  return add(add(scale(l_qv, weights.qv), scale(l_qc, weights.qc)), scale(l_cc, weights.cc));
}

Var mean_of(const std::vector<Var>& scalars) {
  if (scalars.empty()) throw ContractError("mean_of: no values");
  auto total = scalars.front();
  for (std::size_t i = 1; i < scalars.size(); ++i) total = add(total, scalars[i]);
  return scale(total, 1.0 / static_cast<double>(scalars.size()));
}

}  // namespace clipfilter
