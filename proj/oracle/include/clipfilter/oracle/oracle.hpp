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

// Brute-force reference implementations: nested loops over std::vector, no
// dependency on the tensor engine. Each function is a literal transcription
// of the formula it checks; they exist for tests and golden files only.

#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace clipfilter::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;
using Cube = std::vector<Mat>;

inline constexpr double kEps = 1e-12;

// ---- primitives ----
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Vec softmax(const Vec& x, const Vec* mask = nullptr);
double cosine(const Vec& x, const Vec& y);
Vec cosine_rows_against(const Mat& x, const Vec& y);
Mat affine(const Mat& x, const Mat& w, const Vec& b);
Mat attention(const Mat& q_in, const Mat& kv_in, const Mat& wq, const Mat& wk, const Mat& wv,
              const Vec* key_mask = nullptr);
Vec column_mean(const Mat& x, const Vec& row_mask);
std::vector<std::size_t> rank_words(const Vec& scores, const Vec& valid);

struct Affine {
  Mat weight;
  Vec bias;
};

struct FemParams {
  Mat attn_q, attn_k, attn_v;
  Affine proj_v, proj_c, proj_q, proj_hat_v, proj_hat_c, conv_v, conv_c;
  Mat cross_q, cross_k, cross_v;
};

struct Gate {
  bool learned = true;
  double w_qv = 0.0, w_qc = 0.0, bias = 0.0;
};

// ---- caption pooling ----
struct PoolResult {
  Mat features;  // [L_v][d]
  Mat weights;   // [L_v][L_c]
};
PoolResult pool_captions(const Mat& query, const Cube& captions, const Vec& query_valid, const Mat& caption_valid);

// ---- feature enhancement ----
struct HighlightResult {
  Mat f_eq;
  Vec scores;
  std::vector<std::size_t> order;
};
HighlightResult word_highlight(const Mat& f_q, const Vec& query_valid, const FemParams& p);
Vec sentence_pool(const Mat& f_eq, const Vec& scores, const Vec& query_valid);

struct SceneSims {
  Mat a_vq, a_cq, a_vq_row, a_cq_row, a_vq_col, a_cq_col;
};
SceneSims scene_similarities(const Mat& f_v, const Mat& f_c, const Mat& f_eq, const Vec& query_valid,
                             const FemParams& p);

struct SceneOut {
  Mat f_qv, f_qc;
};
SceneOut scene_compose(const Mat& f_v, const Mat& f_c, const Mat& f_eq, const Vec& f_eq_sent, const SceneSims& s,
                       const FemParams& p);

struct CrossOut {
  Mat f_ev, f_ec;
};
CrossOut cross_enhance(const Mat& f_qv, const Mat& f_qc, const FemParams& p);

struct FemOut {
  HighlightResult words;
  Vec f_eq_sent;
  SceneSims sims;
  Mat f_ev, f_ec;
};
FemOut fem_forward(const Mat& f_q, const Mat& f_v, const Mat& f_c, const Vec& query_valid, const FemParams& p);

// ---- ranking-based filtering ----
struct RelevanceOut {
  Mat s_qv, s_qc;
};
RelevanceOut relevance_similarities(const Mat& f_ev, const Mat& f_ec, const Mat& f_eq, const Vec& query_valid);
Mat fuse(const Mat& s_qv, const Mat& s_qc, const Gate& gate);
// Closed form: f_ev[i][c] * prod_j (1 + s_qvc[i][w_j]) over the selected words.
Mat filter_closed_form(const Mat& f_ev, const Mat& s_qvc, const std::vector<std::size_t>& words);

struct RfmOut {
  RelevanceOut sims;
  Mat s_qvc;
  std::vector<std::size_t> words;
  Mat f_fv;
};
RfmOut rfm_forward(const FemOut& fem, const Vec& query_valid, const Gate& gate, std::size_t n);

// ---- alignment losses ----
double loss_query_video(const Mat& video_globals, const Mat& query_globals);
double loss_query_clip(const Mat& s_qv, const Vec& relevance, const Vec& query_valid);
double loss_caption_clip(const std::vector<Mat>& visual, const std::vector<Mat>& captions);
double loss_total(double l_qv, double l_qc, double l_cc, double w_qv, double w_qc, double w_cc);

// ---- registry ----

struct OracleInputs {
  std::map<std::string, Mat> mats;
  std::map<std::string, Vec> vecs;
  std::map<std::string, Cube> cubes;
  std::map<std::string, std::vector<Mat>> lists;
  std::map<std::string, double> scalars;

  const Mat& mat(const std::string& k) const;
  const Vec& vec(const std::string& k) const;
  const Cube& cube(const std::string& k) const;
  const std::vector<Mat>& list(const std::string& k) const;
  double scalar(const std::string& k) const;
};

struct OracleResult {
  std::map<std::string, Mat> values;  // vectors as one row, scalars as 1x1

  // Largest |oracle - candidate| over every key the oracle produced. A missing
  // key or mismatched extent is an error.
  double max_abs_diff(const std::map<std::string, Mat>& candidate) const;
};

class UnknownOracle : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

OracleResult oracle_for(const std::string& op_name, const OracleInputs& inputs);
std::vector<std::string> registered_ops();

// Reads FemParams / Gate out of inputs keyed by the parameter names used by
// the main library ("fem.attn_q", "fem.proj_v.weight", "gate.weight", ...).
FemParams fem_params_from(const OracleInputs& in);
Gate gate_from(const OracleInputs& in);

}  // namespace clipfilter::oracle
