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
#include <vector>

#include "clipfilter/autodiff.hpp"
#include "clipfilter/params.hpp"

namespace clipfilter {

// Per-word importance: cosine of each enhanced word feature against the
// pooled sentence feature, plus the ranking used by the filter.
struct WordHighlight {
  std::vector<double> scores;       // [L_q], in [-1, 1]
  std::vector<std::size_t> order;   // descending score, lower index wins ties, invalid words last
  Mask valid;

  // First n valid words of the ranking.
  std::vector<std::size_t> top(std::size_t n) const;
};

// Stable descending ranking; invalid entries rank as -inf.
std::vector<std::size_t> rank_descending(const std::vector<double>& scores, const Mask& valid);

struct WordHighlightResult {
  Var f_eq;    // [L_q x d]
  Var scores;  // [L_q], differentiable copy of highlight.scores
  WordHighlight highlight;
};

// softmax(Q K^T / sqrt(d)) V with Q = q_in Wq, K = kv_in Wk, V = kv_in Wv.
// key_mask (length = rows of kv_in) drops padded keys.
Var attention(const Var& q_in, const Var& kv_in, const Var& wq, const Var& wk, const Var& wv,
              const Mask* key_mask = nullptr);

WordHighlightResult word_highlight(const Var& f_q, const Mask& query_valid, const FemWeights<Var>& w);

// Softmax over valid words of the highlight scores, used as weights on f_eq rows.
Var sentence_pool(const Var& f_eq, const Var& scores, const Mask& query_valid);

struct SceneSimilarities {
  Var a_vq, a_cq;          // raw scaled scores [L_v x L_q]
  Var a_vq_row, a_cq_row;  // softmax over words (valid only)
  Var a_vq_col, a_cq_col;  // softmax over clips
};

SceneSimilarities scene_similarities(const Var& f_v, const Var& f_c, const Var& f_eq, const Mask& query_valid,
                                     const FemWeights<Var>& w);

struct SceneFeatures {
  Var f_qv, f_qc;  // [L_v x d]
  // intermediates, exposed for inspection
  Var f_v2q, f_c2q, f_q2v, f_q2c, f_hat_v, f_hat_c;
};

SceneFeatures scene_compose(const Var& f_v, const Var& f_c, const Var& f_eq, const Var& f_eq_sent,
                            const SceneSimilarities& sims, const FemWeights<Var>& w);

struct CrossEnhanced {
  Var f_ev, f_ec;
};

CrossEnhanced cross_enhance(const Var& f_qv, const Var& f_qc, const FemWeights<Var>& w);

struct FemOutput {
  Var f_eq;
  Var scores;
  WordHighlight highlight;
  Var f_eq_sent;
  Var f_ev, f_ec;
  Var a_vq_row, a_cq_row, a_vq_col, a_cq_col;
};

// word_highlight -> sentence_pool -> scene_similarities -> scene_compose -> cross_enhance
FemOutput fem_forward(const Var& f_q, const Var& f_v, const Var& f_c_pooled, const Mask& query_valid,
                      const FemWeights<Var>& w);

}  // namespace clipfilter
