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

#include "oracle_pipeline.hpp"

#include <cmath>

#include "cases.hpp"

namespace clipfilter::testing {

namespace {

double l1(const Mat& m) {
  double s = 0.0;
  for (const auto& row : m)
    for (double v : row) s += std::abs(v);
  return s;
}

}  // namespace

RunReport oracle_run(const Batch& batch, const ModelParams& params, const RunConfig& config) {
  oracle::OracleInputs pin;
  add_params(pin, params);
  pin.scalars["learned"] = config.fusion == FusionMode::learned ? 1.0 : 0.0;
  const auto fem_p = oracle::fem_params_from(pin);
  const auto gate = oracle::gate_from(pin);
  auto project = [&](const Mat& x, const std::string& name) {
    return oracle::affine(x, pin.mat(name + ".weight"), pin.vec(name + ".bias"));
  };

  RunReport report;
  Mat video_globals, query_globals;
  std::vector<Mat> visual_feats, caption_feats;
  double l_qc = 0.0;
  for (const auto& sample : batch.samples) {
    const auto qv = to_vec(sample.query_valid);
    const auto f_q = project(to_mat(sample.query), "input.query");
    const auto f_v = project(to_mat(sample.visual), "input.visual");
    oracle::Cube caps = to_cube(sample.captions);
    for (auto& clip : caps) clip = project(clip, "input.caption");
    const auto pooled = oracle::pool_captions(f_q, caps, qv, to_mat(sample.caption_valid));
    const auto fem = oracle::fem_forward(f_q, f_v, pooled.features, qv, fem_p);

    std::size_t n = config.iterations;
    const auto valid = count_valid(sample.query_valid);
    if (n > valid) {
      report.warnings.push_back("sample '" + sample.id + "': iterations clamped from " + std::to_string(n) +
                                " to " + std::to_string(valid) + " (valid query words)");
      n = valid;
    }
    const auto rfm = oracle::rfm_forward(fem, qv, gate, n);

    SampleReport s;
    s.id = sample.id;
    for (auto w : rfm.words) s.top_words.emplace_back(w, fem.words.scores[w]);
    s.saliency = oracle::cosine_rows_against(rfm.f_fv, fem.f_eq_sent);
    for (std::size_t j = 0; j <= n; ++j) {
      const std::vector<std::size_t> prefix(rfm.words.begin(), rfm.words.begin() + static_cast<std::ptrdiff_t>(j));
      s.trace_norms.push_back(l1(oracle::filter_closed_form(fem.f_ev, rfm.s_qvc, prefix)));
    }
    report.samples.push_back(std::move(s));

    video_globals.push_back(oracle::column_mean(f_v, oracle::Vec(f_v.size(), 1.0)));
    query_globals.push_back(oracle::column_mean(f_q, qv));
    visual_feats.push_back(f_v);
    caption_feats.push_back(pooled.features);
    report.losses.l_qc_per_sample.push_back(
        oracle::loss_query_clip(rfm.sims.s_qv, to_vec(sample.relevance_mask), qv));
    l_qc += report.losses.l_qc_per_sample.back();
  }
  auto& L = report.losses;
  L.l_qv = oracle::loss_query_video(video_globals, query_globals);
  L.l_qc = l_qc / static_cast<double>(batch.size());
  L.l_cc = oracle::loss_caption_clip(visual_feats, caption_feats);
  L.l_ma = oracle::loss_total(L.l_qv, L.l_qc, L.l_cc, config.weights.qv, config.weights.qc, config.weights.cc);
  return report;
}

}  // namespace clipfilter::testing
