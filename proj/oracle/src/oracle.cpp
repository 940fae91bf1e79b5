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

#include "clipfilter/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clipfilter::oracle {

namespace {

bool on(const Vec& mask, std::size_t i) { return mask[i] != 0.0; }

Mat zeros(std::size_t m, std::size_t n) { return Mat(m, Vec(n, 0.0)); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---- primitives ----

Mat matmul(const Mat& a, const Mat& b) {
  if (a.empty() || b.empty() || a[0].size() != b.size()) throw std::invalid_argument("oracle matmul: extents");
  Mat c = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  return c;
}

Mat transpose(const Mat& a) {
  Mat t = zeros(a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

Vec softmax(const Vec& x, const Vec* mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!mask || on(*mask, i)) mx = std::max(mx, x[i]);
  Vec y(x.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask && !on(*mask, i)) continue;
    y[i] = std::exp(x[i] - mx);
    z += y[i];
  }
  for (auto& v : y) v /= z;
  return y;
}

double cosine(const Vec& x, const Vec& y) {
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  return dot / (std::max(std::sqrt(nx), kEps) * std::max(std::sqrt(ny), kEps));
}

Vec cosine_rows_against(const Mat& x, const Vec& y) {
  Vec out;
  for (const auto& row : x) out.push_back(cosine(row, y));
  return out;
}

Mat affine(const Mat& x, const Mat& w, const Vec& b) {
  Mat out = zeros(x.size(), w[0].size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < w[0].size(); ++j) {
      double s = b.empty() ? 0.0 : b[j];
      for (std::size_t k = 0; k < w.size(); ++k) s += x[i][k] * w[k][j];
      out[i][j] = s;
    }
  return out;
}

Mat attention(const Mat& q_in, const Mat& kv_in, const Mat& wq, const Mat& wk, const Mat& wv, const Vec* key_mask) {
  const Mat q = affine(q_in, wq, {});
  const Mat k = affine(kv_in, wk, {});
  const Mat v = affine(kv_in, wv, {});
  const double scale = std::sqrt(static_cast<double>(q[0].size()));
  Mat out = zeros(q.size(), v[0].size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    Vec logits(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q[0].size(); ++c) s += q[i][c] * k[j][c];
      logits[j] = s / scale;
    }
    const Vec w = softmax(logits, key_mask);
    for (std::size_t j = 0; j < k.size(); ++j)
      for (std::size_t c = 0; c < v[0].size(); ++c) out[i][c] += w[j] * v[j][c];
  }
  return out;
}

Vec column_mean(const Mat& x, const Vec& row_mask) {
  Vec out(x[0].size(), 0.0);
  double count = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!on(row_mask, i)) continue;
    count += 1.0;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += x[i][c];
  }
  for (auto& v : out) v /= count;
  return out;
}

std::vector<std::size_t> rank_words(const Vec& scores, const Vec& valid) {
  // selection sort: repeatedly take the best remaining valid word, lowest index on ties
  std::vector<std::size_t> order;
  std::vector<bool> used(scores.size(), false);
  for (std::size_t round = 0; round < scores.size(); ++round) {
    std::size_t best = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (used[i]) continue;
      if (best == scores.size()) {
        best = i;
        continue;
      }
      const bool vi = on(valid, i), vb = on(valid, best);
      if ((vi && !vb) || (vi == vb && vi && scores[i] > scores[best])) best = i;
    }
    used[best] = true;
    order.push_back(best);
  }
  return order;
}

// ---- caption pooling ----

PoolResult pool_captions(const Mat& query, const Cube& captions, const Vec& query_valid, const Mat& caption_valid) {
  const std::size_t lv = captions.size(), lc = captions[0].size(), d = captions[0][0].size();
  const std::size_t lq = query.size();
  PoolResult r{zeros(lv, d), zeros(lv, lc)};
  for (std::size_t v = 0; v < lv; ++v) {
    Vec logits(lc, 0.0);
    for (std::size_t c = 0; c < lc; ++c) {
      double total = 0.0, count = 0.0;
      for (std::size_t k = 0; k < lq; ++k) {
        if (!on(query_valid, k)) continue;
        double dot = 0.0;
        for (std::size_t e = 0; e < d; ++e) dot += captions[v][c][e] * query[k][e];
        total += dot;
        count += 1.0;
      }
      logits[c] = total / count;
    }
    r.weights[v] = softmax(logits, &caption_valid[v]);
    for (std::size_t c = 0; c < lc; ++c)
      for (std::size_t e = 0; e < d; ++e) r.features[v][e] += r.weights[v][c] * captions[v][c][e];
  }
  return r;
}

// ---- feature enhancement ----

HighlightResult word_highlight(const Mat& f_q, const Vec& query_valid, const FemParams& p) {
  HighlightResult r;
  r.f_eq = attention(f_q, f_q, p.attn_q, p.attn_k, p.attn_v, &query_valid);
  const Vec g = column_mean(r.f_eq, query_valid);
  r.scores = cosine_rows_against(r.f_eq, g);
  r.order = rank_words(r.scores, query_valid);
  return r;
}

Vec sentence_pool(const Mat& f_eq, const Vec& scores, const Vec& query_valid) {
  const Vec w = softmax(scores, &query_valid);
  Vec out(f_eq[0].size(), 0.0);
  for (std::size_t k = 0; k < f_eq.size(); ++k)
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[k] * f_eq[k][c];
  return out;
}

SceneSims scene_similarities(const Mat& f_v, const Mat& f_c, const Mat& f_eq, const Vec& query_valid,
                             const FemParams& p) {
  const double root_d = std::sqrt(static_cast<double>(f_eq[0].size()));
  const Mat pv = affine(f_v, p.proj_v.weight, p.proj_v.bias);
  const Mat pc = affine(f_c, p.proj_c.weight, p.proj_c.bias);
  const Mat pq = affine(f_eq, p.proj_q.weight, p.proj_q.bias);
  const std::size_t lv = f_v.size(), lq = f_eq.size();
  SceneSims s{zeros(lv, lq), zeros(lv, lq), {}, {}, zeros(lv, lq), zeros(lv, lq)};
  for (std::size_t i = 0; i < lv; ++i)
    for (std::size_t k = 0; k < lq; ++k) {
      double dv = 0.0, dc = 0.0;
      for (std::size_t e = 0; e < pq[0].size(); ++e) {
        dv += pv[i][e] * pq[k][e];
        dc += pc[i][e] * pq[k][e];
      }
      s.a_vq[i][k] = dv / root_d;
      s.a_cq[i][k] = dc / root_d;
    }
  for (std::size_t i = 0; i < lv; ++i) {
    s.a_vq_row.push_back(softmax(s.a_vq[i], &query_valid));
    s.a_cq_row.push_back(softmax(s.a_cq[i], &query_valid));
  }
  for (std::size_t k = 0; k < lq; ++k) {
    Vec col_v(lv), col_c(lv);
    for (std::size_t i = 0; i < lv; ++i) {
      col_v[i] = s.a_vq[i][k];
      col_c[i] = s.a_cq[i][k];
    }
    const Vec sv = softmax(col_v), sc = softmax(col_c);
    for (std::size_t i = 0; i < lv; ++i) {
      s.a_vq_col[i][k] = sv[i];
      s.a_cq_col[i][k] = sc[i];
    }
  }
  return s;
}

namespace {

// P(base || to_q || base*to_q || base*from_q), then ReLU(Conv1x1(. || sentence))
Mat compose_branch(const Mat& base, const Mat& to_q, const Mat& from_q, const Vec& sentence, const Affine& hat,
                   const Affine& conv) {
  const std::size_t lv = base.size(), d = base[0].size();
  Mat cat = zeros(lv, 4 * d);
  for (std::size_t i = 0; i < lv; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      cat[i][c] = base[i][c];
      cat[i][d + c] = to_q[i][c];
      cat[i][2 * d + c] = base[i][c] * to_q[i][c];
      cat[i][3 * d + c] = base[i][c] * from_q[i][c];
    }
  const Mat fused = affine(cat, hat.weight, hat.bias);
  Mat with_sentence = zeros(lv, 2 * d);
  for (std::size_t i = 0; i < lv; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      with_sentence[i][c] = fused[i][c];
      with_sentence[i][d + c] = sentence[c];
    }
  Mat out = affine(with_sentence, conv.weight, conv.bias);
  for (auto& row : out)
    for (auto& v : row) v = std::max(v, 0.0);
  return out;
}

}  // namespace

SceneOut scene_compose(const Mat& f_v, const Mat& f_c, const Mat& f_eq, const Vec& f_eq_sent, const SceneSims& s,
                       const FemParams& p) {
  const Mat v2q = matmul(s.a_vq_row, f_eq);
  const Mat c2q = matmul(s.a_cq_row, f_eq);
  const Mat q2v = matmul(matmul(s.a_vq_row, transpose(s.a_vq_col)), f_v);
  const Mat q2c = matmul(matmul(s.a_cq_row, transpose(s.a_cq_col)), f_c);
  return {compose_branch(f_v, v2q, q2v, f_eq_sent, p.proj_hat_v, p.conv_v),
          compose_branch(f_c, c2q, q2c, f_eq_sent, p.proj_hat_c, p.conv_c)};
}

CrossOut cross_enhance(const Mat& f_qv, const Mat& f_qc, const FemParams& p) {
  return {attention(f_qv, f_qc, p.cross_q, p.cross_k, p.cross_v),
          attention(f_qc, f_qv, p.cross_q, p.cross_k, p.cross_v)};
}

FemOut fem_forward(const Mat& f_q, const Mat& f_v, const Mat& f_c, const Vec& query_valid, const FemParams& p) {
  FemOut out;
  out.words = word_highlight(f_q, query_valid, p);
  out.f_eq_sent = sentence_pool(out.words.f_eq, out.words.scores, query_valid);
  out.sims = scene_similarities(f_v, f_c, out.words.f_eq, query_valid, p);
  const auto scene = scene_compose(f_v, f_c, out.words.f_eq, out.f_eq_sent, out.sims, p);
  const auto cross = cross_enhance(scene.f_qv, scene.f_qc, p);
  out.f_ev = cross.f_ev;
  out.f_ec = cross.f_ec;
  return out;
}

// ---- ranking-based filtering ----

RelevanceOut relevance_similarities(const Mat& f_ev, const Mat& f_ec, const Mat& f_eq, const Vec& query_valid) {
  RelevanceOut r{zeros(f_ev.size(), f_eq.size()), zeros(f_ev.size(), f_eq.size())};
  for (std::size_t i = 0; i < f_ev.size(); ++i)
    for (std::size_t k = 0; k < f_eq.size(); ++k) {
      if (!on(query_valid, k)) continue;
      r.s_qv[i][k] = cosine(f_ev[i], f_eq[k]);
      r.s_qc[i][k] = cosine(f_ec[i], f_eq[k]);
    }
  return r;
}

Mat fuse(const Mat& s_qv, const Mat& s_qc, const Gate& gate) {
  Mat out = zeros(s_qv.size(), s_qv[0].size());
  for (std::size_t i = 0; i < s_qv.size(); ++i)
    for (std::size_t k = 0; k < s_qv[0].size(); ++k) {
      const double w = gate.learned ? sigmoid(gate.w_qv * s_qv[i][k] + gate.w_qc * s_qc[i][k] + gate.bias) : 0.5;
      out[i][k] = w * s_qv[i][k] + (1.0 - w) * s_qc[i][k];
    }
  return out;
}

Mat filter_closed_form(const Mat& f_ev, const Mat& s_qvc, const std::vector<std::size_t>& words) {
  Mat out = f_ev;
  for (std::size_t i = 0; i < f_ev.size(); ++i) {
    double gain = 1.0;
    for (auto w : words) gain *= 1.0 + s_qvc[i][w];
    for (auto& v : out[i]) v *= gain;
  }
  return out;
}

RfmOut rfm_forward(const FemOut& fem, const Vec& query_valid, const Gate& gate, std::size_t n) {
  RfmOut r;
  r.sims = relevance_similarities(fem.f_ev, fem.f_ec, fem.words.f_eq, query_valid);
  r.s_qvc = fuse(r.sims.s_qv, r.sims.s_qc, gate);
  for (auto w : fem.words.order) {
    if (r.words.size() == n) break;
    if (on(query_valid, w)) r.words.push_back(w);
  }
  if (r.words.size() < n) throw std::invalid_argument("oracle rfm_forward: N exceeds valid words");
  r.f_fv = filter_closed_form(fem.f_ev, r.s_qvc, r.words);
  return r;
}

// ---- alignment losses ----

double loss_query_video(const Mat& gv, const Mat& gq) {
  const std::size_t b = gv.size();
  double total = 0.0;
  for (std::size_t j = 0; j < b; ++j) {
    double denom = 0.0;
    for (std::size_t i = 0; i < b; ++i) denom += std::exp(cosine(gv[i], gq[j]));
    total += std::log(std::exp(cosine(gv[j], gq[j])) / denom);
  }
  return -total / static_cast<double>(b);
}

double loss_query_clip(const Mat& s_qv, const Vec& relevance, const Vec& query_valid) {
  double loss = 0.0;
  for (std::size_t i = 0; i < s_qv.size(); ++i) {
    double g = 0.0, count = 0.0;
    for (std::size_t k = 0; k < s_qv[i].size(); ++k) {
      if (!on(query_valid, k)) continue;
      g += sigmoid(s_qv[i][k]);
      count += 1.0;
    }
    g = std::clamp(g / count, 1e-12, 1.0 - 1e-12);
    loss -= relevance[i] * std::log(g) + (1.0 - relevance[i]) * std::log(1.0 - g);
  }
  return loss;
}

double loss_caption_clip(const std::vector<Mat>& visual, const std::vector<Mat>& captions) {
  const std::size_t b = visual.size();
  double total = 0.0;
  for (std::size_t k = 0; k < b; ++k) {
    double num = 0.0, denom = 0.0;
    for (std::size_t j = 0; j < captions[k].size(); ++j) num += std::exp(cosine(visual[k][j], captions[k][j]));
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < captions[k].size() && j < visual[i].size(); ++j)
        denom += std::exp(cosine(visual[i][j], captions[k][j]));
    total += std::log(num / denom);
  }
  return -total / static_cast<double>(b);
}

double loss_total(double l_qv, double l_qc, double l_cc, double w_qv, double w_qc, double w_cc) {
  return w_qv * l_qv + w_qc * l_qc + w_cc * l_cc;
}

}  // namespace clipfilter::oracle
