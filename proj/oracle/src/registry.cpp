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

#include <algorithm>
#include <cmath>
#include <limits>

#include "clipfilter/oracle/oracle.hpp"

namespace clipfilter::oracle {

namespace {

template <class M>
const typename M::mapped_type& lookup(const M& map, const std::string& key, const char* kind) {
  auto it = map.find(key);
  if (it == map.end()) throw std::invalid_argument(std::string("oracle input missing ") + kind + " '" + key + "'");
  return it->second;
}

Mat row(const Vec& v) { return Mat{v}; }
Mat scalar(double v) { return Mat{Vec{v}}; }
Mat indices(const std::vector<std::size_t>& idx) {
  Vec v;
  for (auto i : idx) v.push_back(static_cast<double>(i));
  return Mat{v};
}

Affine affine_from(const OracleInputs& in, const std::string& name) {
  return {in.mat(name + ".weight"), in.vec(name + ".bias")};
}

using Handler = std::function<OracleResult(const OracleInputs&)>;

const std::map<std::string, Handler>& registry() {
  static const std::map<std::string, Handler> ops = {
      {"matmul", [](const OracleInputs& in) {
         return OracleResult{{{"out", matmul(in.mat("a"), in.mat("b"))}}};
       }},
      {"softmax", [](const OracleInputs& in) {
         auto it = in.vecs.find("mask");
         return OracleResult{{{"out", row(softmax(in.vec("x"), it == in.vecs.end() ? nullptr : &it->second))}}};
       }},
      {"cosine_sim", [](const OracleInputs& in) {
         return OracleResult{{{"out", row(cosine_rows_against(in.mat("x"), in.vec("y")))}}};
       }},
      {"input_projection", [](const OracleInputs& in) {
         return OracleResult{{{"out", affine(in.mat("x"), in.mat("weight"), in.vec("bias"))}}};
       }},
      {"pool_captions", [](const OracleInputs& in) {
         auto r = pool_captions(in.mat("query"), in.cube("captions"), in.vec("query_valid"), in.mat("caption_valid"));
         return OracleResult{{{"features", r.features}, {"weights", r.weights}}};
       }},
      {"word_highlight", [](const OracleInputs& in) {
         auto r = word_highlight(in.mat("f_q"), in.vec("query_valid"), fem_params_from(in));
         return OracleResult{{{"f_eq", r.f_eq}, {"scores", row(r.scores)}, {"order", indices(r.order)}}};
       }},
      {"sentence_pool", [](const OracleInputs& in) {
         return OracleResult{
             {{"out", row(sentence_pool(in.mat("f_eq"), in.vec("scores"), in.vec("query_valid")))}}};
       }},
      {"scene_similarities", [](const OracleInputs& in) {
         auto s = scene_similarities(in.mat("f_v"), in.mat("f_c"), in.mat("f_eq"), in.vec("query_valid"),
                                     fem_params_from(in));
         return OracleResult{{{"a_vq", s.a_vq},
                              {"a_cq", s.a_cq},
                              {"a_vq_row", s.a_vq_row},
                              {"a_cq_row", s.a_cq_row},
                              {"a_vq_col", s.a_vq_col},
                              {"a_cq_col", s.a_cq_col}}};
       }},
      {"scene_compose", [](const OracleInputs& in) {
         const auto p = fem_params_from(in);
         auto s = scene_similarities(in.mat("f_v"), in.mat("f_c"), in.mat("f_eq"), in.vec("query_valid"), p);
         auto r = scene_compose(in.mat("f_v"), in.mat("f_c"), in.mat("f_eq"), in.vec("f_eq_sent"), s, p);
         return OracleResult{{{"f_qv", r.f_qv}, {"f_qc", r.f_qc}}};
       }},
      {"cross_enhance", [](const OracleInputs& in) {
         auto r = cross_enhance(in.mat("f_qv"), in.mat("f_qc"), fem_params_from(in));
         return OracleResult{{{"f_ev", r.f_ev}, {"f_ec", r.f_ec}}};
       }},
      {"fem_forward", [](const OracleInputs& in) {
         auto r = fem_forward(in.mat("f_q"), in.mat("f_v"), in.mat("f_c"), in.vec("query_valid"), fem_params_from(in));
         return OracleResult{{{"f_eq", r.words.f_eq},
                              {"scores", row(r.words.scores)},
                              {"order", indices(r.words.order)},
                              {"f_eq_sent", row(r.f_eq_sent)},
                              {"f_ev", r.f_ev},
                              {"f_ec", r.f_ec},
                              {"a_vq_row", r.sims.a_vq_row},
                              {"a_cq_row", r.sims.a_cq_row},
                              {"a_vq_col", r.sims.a_vq_col},
                              {"a_cq_col", r.sims.a_cq_col}}};
       }},
      {"relevance_similarities", [](const OracleInputs& in) {
         auto r = relevance_similarities(in.mat("f_ev"), in.mat("f_ec"), in.mat("f_eq"), in.vec("query_valid"));
         return OracleResult{{{"s_qv", r.s_qv}, {"s_qc", r.s_qc}}};
       }},
      {"fuse", [](const OracleInputs& in) {
         return OracleResult{{{"out", fuse(in.mat("s_qv"), in.mat("s_qc"), gate_from(in))}}};
       }},
      {"iterative_filter", [](const OracleInputs& in) {
         const auto n = static_cast<std::size_t>(in.scalar("n"));
         const auto order = rank_words(in.vec("scores"), in.vec("query_valid"));
         std::vector<std::size_t> words;
         for (auto w : order) {
           if (words.size() == n) break;
           if (in.vec("query_valid")[w] != 0.0) words.push_back(w);
         }
         if (words.size() < n) throw std::invalid_argument("oracle iterative_filter: N exceeds valid words");
         return OracleResult{
             {{"f_fv", filter_closed_form(in.mat("f_ev"), in.mat("s_qvc"), words)}, {"selected", indices(words)}}};
       }},
      {"rfm_forward", [](const OracleInputs& in) {
         const auto& qv = in.vec("query_valid");
         auto fem = fem_forward(in.mat("f_q"), in.mat("f_v"), in.mat("f_c"), qv, fem_params_from(in));
         auto r = rfm_forward(fem, qv, gate_from(in), static_cast<std::size_t>(in.scalar("n")));
         return OracleResult{{{"s_qv", r.sims.s_qv},
                              {"s_qc", r.sims.s_qc},
                              {"s_qvc", r.s_qvc},
                              {"f_fv", r.f_fv},
                              {"selected", indices(r.words)}}};
       }},
      {"loss_query_video", [](const OracleInputs& in) {
         return OracleResult{{{"out", scalar(loss_query_video(in.mat("video_globals"), in.mat("query_globals")))}}};
       }},
      {"loss_query_clip", [](const OracleInputs& in) {
         return OracleResult{
             {{"out", scalar(loss_query_clip(in.mat("s_qv"), in.vec("relevance"), in.vec("query_valid")))}}};
       }},
      {"loss_caption_clip", [](const OracleInputs& in) {
         return OracleResult{{{"out", scalar(loss_caption_clip(in.list("visual"), in.list("captions")))}}};
       }},
      {"loss_total", [](const OracleInputs& in) {
         return OracleResult{{{"out", scalar(loss_total(in.scalar("l_qv"), in.scalar("l_qc"), in.scalar("l_cc"),
                                                       in.scalar("w_qv"), in.scalar("w_qc"), in.scalar("w_cc")))}}};
       }},
  };
  return ops;
}

}  // namespace

const Mat& OracleInputs::mat(const std::string& k) const { return lookup(mats, k, "matrix"); }
const Vec& OracleInputs::vec(const std::string& k) const { return lookup(vecs, k, "vector"); }
const Cube& OracleInputs::cube(const std::string& k) const { return lookup(cubes, k, "cube"); }
const std::vector<Mat>& OracleInputs::list(const std::string& k) const { return lookup(lists, k, "list"); }
double OracleInputs::scalar(const std::string& k) const { return lookup(scalars, k, "scalar"); }

double OracleResult::max_abs_diff(const std::map<std::string, Mat>& candidate) const {
  double worst = 0.0;
  for (const auto& [key, expected] : values) {
    auto it = candidate.find(key);
    if (it == candidate.end()) throw std::invalid_argument("candidate lacks output '" + key + "'");
    const auto& got = it->second;
    if (got.size() != expected.size()) throw std::invalid_argument("row count differs for '" + key + "'");
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (got[i].size() != expected[i].size()) throw std::invalid_argument("column count differs for '" + key + "'");
      for (std::size_t j = 0; j < expected[i].size(); ++j) {
        const double diff = std::abs(got[i][j] - expected[i][j]);
        if (std::isnan(diff)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, diff);
      }
    }
  }
  return worst;
}

OracleResult oracle_for(const std::string& op_name, const OracleInputs& inputs) {
  const auto& ops = registry();
  auto it = ops.find(op_name);
  if (it == ops.end()) throw UnknownOracle("no oracle registered for '" + op_name + "'");
  return it->second(inputs);
}

std::vector<std::string> registered_ops() {
  std::vector<std::string> names;
  for (const auto& [name, _] : registry()) names.push_back(name);
  return names;
}

FemParams fem_params_from(const OracleInputs& in) {
  FemParams p;
  p.attn_q = in.mat("fem.attn_q");
  p.attn_k = in.mat("fem.attn_k");
  p.attn_v = in.mat("fem.attn_v");
  p.proj_v = affine_from(in, "fem.proj_v");
  p.proj_c = affine_from(in, "fem.proj_c");
  p.proj_q = affine_from(in, "fem.proj_q");
  p.proj_hat_v = affine_from(in, "fem.proj_hat_v");
  p.proj_hat_c = affine_from(in, "fem.proj_hat_c");
  p.conv_v = affine_from(in, "fem.conv_v");
  p.conv_c = affine_from(in, "fem.conv_c");
  p.cross_q = in.mat("fem.cross_q");
  p.cross_k = in.mat("fem.cross_k");
  p.cross_v = in.mat("fem.cross_v");
  return p;
}

Gate gate_from(const OracleInputs& in) {
  Gate g;
  g.learned = in.scalar("learned") != 0.0;
  if (g.learned) {
    const auto& w = in.vec("gate.weight");
    g.w_qv = w[0];
    g.w_qc = w[1];
    g.bias = in.vec("gate.bias")[0];
  }
  return g;
}

}  // namespace clipfilter::oracle
