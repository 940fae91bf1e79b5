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

#include "clipfilter/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace clipfilter {

std::vector<std::size_t> rank_descending(const std::vector<double>& scores, const Mask& valid) {
  if (scores.size() != valid.size()) throw DimensionError("rank_descending: scores/mask length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) {
    return valid[i] ? scores[i] : -std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  return order;
}

std::vector<std::size_t> WordHighlight::top(std::size_t n) const {
  std::vector<std::size_t> out;
  for (auto i : order) {
    if (out.size() == n) break;
    if (valid[i]) out.push_back(i);
  }
  if (out.size() < n) {
    throw ContractError("requested " + std::to_string(n) + " words but only " + std::to_string(out.size()) +
                        " are valid");
  }
  return out;
}

Var attention(const Var& q_in, const Var& kv_in, const Var& wq, const Var& wk, const Var& wv,
              const Mask* key_mask) {
  auto q = matmul(q_in, wq);
  auto k = matmul(kv_in, wk);
  auto v = matmul(kv_in, wv);
  const double d = static_cast<double>(q.value().dim(1));
  auto logits = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d));
  if (key_mask) {
    const auto mask = column_mask(*key_mask, logits.value().dim(0));
    return matmul(softmax(logits, 1, &mask), v);
  }
  return matmul(softmax(logits, 1), v);
}

WordHighlightResult word_highlight(const Var& f_q, const Mask& query_valid, const FemWeights<Var>& w) {
  if (f_q.value().rank() != 2 || query_valid.size() != f_q.value().dim(0)) {
    throw DimensionError("word_highlight: query " + shape_string(f_q.shape()) + " vs mask of length " +
                         std::to_string(query_valid.size()));
  }
  if (count_valid(query_valid) == 0) throw ContractError("word_highlight: no valid query word");

  auto f_eq = attention(f_q, f_q, w.attn_q, w.attn_k, w.attn_v, &query_valid);
  auto g_eq = gap(f_eq, &query_valid);
  auto scores = cosine_sim(f_eq, g_eq);

  WordHighlight h;
  h.scores = scores.value().values();
  h.valid = query_valid;
  h.order = rank_descending(h.scores, query_valid);
  return {f_eq, scores, std::move(h)};
}

Var sentence_pool(const Var& f_eq, const Var& scores, const Mask& query_valid) {
  const auto lq = f_eq.value().dim(0);
  if (scores.value().size() != lq || query_valid.size() != lq) {
    throw DimensionError("sentence_pool: scores/mask length must equal L_q");
  }
  const auto mask = column_mask(query_valid, 1);
  auto weights = softmax(reshape(scores, {1, lq}), 1, &mask);
  return reshape(matmul(weights, f_eq), {f_eq.value().dim(1)});
}

SceneSimilarities scene_similarities(const Var& f_v, const Var& f_c, const Var& f_eq, const Mask& query_valid,
                                     const FemWeights<Var>& w) {
  if (f_v.shape() != f_c.shape()) {
    throw DimensionError("scene_similarities: visual " + shape_string(f_v.shape()) + " vs caption " +
                         shape_string(f_c.shape()));
  }
  const double d = static_cast<double>(f_eq.value().dim(1));
  auto pq = linear(f_eq, w.proj_q.weight, &w.proj_q.bias);
  auto pv = linear(f_v, w.proj_v.weight, &w.proj_v.bias);
  auto pc = linear(f_c, w.proj_c.weight, &w.proj_c.bias);

  SceneSimilarities s;
  s.a_vq = scale(matmul(pv, transpose(pq)), 1.0 / std::sqrt(d));
  s.a_cq = scale(matmul(pc, transpose(pq)), 1.0 / std::sqrt(d));
  const auto word_mask = column_mask(query_valid, f_v.value().dim(0));
  s.a_vq_row = softmax(s.a_vq, 1, &word_mask);
  s.a_cq_row = softmax(s.a_cq, 1, &word_mask);
  s.a_vq_col = softmax(s.a_vq, 0);
  s.a_cq_col = softmax(s.a_cq, 0);
  return s;
}

namespace {

Var interaction(const Var& base, const Var& to_query, const Var& from_query, const Affine<Var>& proj) {
  auto cat = concat({base, to_query, hadamard(base, to_query), hadamard(base, from_query)}, 1);
  return linear(cat, proj.weight, &proj.bias);
}

}  // namespace

SceneFeatures scene_compose(const Var& f_v, const Var& f_c, const Var& f_eq, const Var& f_eq_sent,
                            const SceneSimilarities& sims, const FemWeights<Var>& w) {
  SceneFeatures out;
  out.f_v2q = matmul(sims.a_vq_row, f_eq);
  out.f_c2q = matmul(sims.a_cq_row, f_eq);
  out.f_q2v = matmul(matmul(sims.a_vq_row, transpose(sims.a_vq_col)), f_v);
  out.f_q2c = matmul(matmul(sims.a_cq_row, transpose(sims.a_cq_col)), f_c);
  out.f_hat_v = interaction(f_v, out.f_v2q, out.f_q2v, w.proj_hat_v);
  out.f_hat_c = interaction(f_c, out.f_c2q, out.f_q2c, w.proj_hat_c);

  const auto lv = f_v.value().dim(0);
  auto sentence = broadcast_row(f_eq_sent, lv);
  out.f_qv = relu(linear(concat({out.f_hat_v, sentence}, 1), w.conv_v.weight, &w.conv_v.bias));
  out.f_qc = relu(linear(concat({out.f_hat_c, sentence}, 1), w.conv_c.weight, &w.conv_c.bias));
  return out;
}

CrossEnhanced cross_enhance(const Var& f_qv, const Var& f_qc, const FemWeights<Var>& w) {
  if (f_qv.shape() != f_qc.shape()) {
    throw DimensionError("cross_enhance: " + shape_string(f_qv.shape()) + " vs " + shape_string(f_qc.shape()));
  }
  return {attention(f_qv, f_qc, w.cross_q, w.cross_k, w.cross_v),
          attention(f_qc, f_qv, w.cross_q, w.cross_k, w.cross_v)};
}

FemOutput fem_forward(const Var& f_q, const Var& f_v, const Var& f_c_pooled, const Mask& query_valid,
                      const FemWeights<Var>& w) {
  auto words = word_highlight(f_q, query_valid, w);
  auto sent = sentence_pool(words.f_eq, words.scores, query_valid);
  auto sims = scene_similarities(f_v, f_c_pooled, words.f_eq, query_valid, w);
  auto scene = scene_compose(f_v, f_c_pooled, words.f_eq, sent, sims, w);
  auto cross = cross_enhance(scene.f_qv, scene.f_qc, w);

  FemOutput out;
  out.f_eq = words.f_eq;
  out.scores = words.scores;
  out.highlight = std::move(words.highlight);
  out.f_eq_sent = sent;
  out.f_ev = cross.f_ev;
  out.f_ec = cross.f_ec;
  out.a_vq_row = sims.a_vq_row;
  out.a_cq_row = sims.a_cq_row;
  out.a_vq_col = sims.a_vq_col;
  out.a_cq_col = sims.a_cq_col;
  return out;
}

}  // namespace clipfilter
