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

#include "clipfilter/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"

namespace clipfilter {

void validate(const RunConfig& config, bool training) {
  validate(config.weights);
  if (training) {
    if (config.train_steps < 1) throw ContractError("training needs at least one step");
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
      throw ContractError("learning rate must be finite and non-negative");
    }
  }
}

LossReport BatchForward::losses() const {
  LossReport r;
  r.l_qv = l_qv.value().item();
  r.l_qc = l_qc.value().item();
  r.l_cc = l_cc.value().item();
  r.l_ma = l_ma.value().item();
  for (const auto& v : l_qc_per_sample) r.l_qc_per_sample.push_back(v.value().item());
  return r;
}

ProjectedSample project_inputs(Tape& tape, const Sample& sample, const InputWeights<Var>& w,
                               bool features_require_grad) {
  auto q = tape.leaf(sample.query, features_require_grad);
  auto v = tape.leaf(sample.visual, features_require_grad);
  auto c = tape.leaf(sample.captions, features_require_grad);
  const auto lv = sample.num_clips(), lc = sample.caption_length(), d = sample.dim();
  auto tokens = linear(reshape(c, {lv * lc, d}), w.caption.weight, &w.caption.bias);
  return {q, v, c, linear(q, w.query.weight, &w.query.bias), linear(v, w.visual.weight, &w.visual.bias),
          reshape(tokens, {lv, lc, d})};
}

Var saliency_head(const Var& f_fv, const Var& f_eq_sent) { return cosine_sim(f_fv, f_eq_sent); }

BatchForward forward_batch(Tape& tape, const Batch& batch, const BoundParams& params, const ForwardOptions& options) {
  if (batch.samples.empty()) throw ContractError("empty batch");
  BatchForward out;
  FusionGate gate{options.fusion, params.gate};
  std::vector<Var> video_globals, query_globals, visual_feats, caption_feats;

  for (const auto& sample : batch.samples) {
    SampleForward f;
    f.id = sample.id;
    auto proj = project_inputs(tape, sample, params.input, options.features_require_grad);
    f.leaf_query = proj.leaf_query;
    f.leaf_visual = proj.leaf_visual;
    f.leaf_captions = proj.leaf_captions;
    f.query = proj.query;
    f.visual = proj.visual;
    f.captions = proj.captions;
    f.pooled = pool_captions(f.query, f.captions, sample.query_valid, sample.caption_valid);
    f.fem = fem_forward(f.query, f.visual, f.pooled.features, sample.query_valid, params.fem);

    f.iterations = options.iterations;
    const auto valid = sample.valid_words();
    if (f.iterations > valid) {
      out.warnings.push_back("sample '" + sample.id + "': iterations clamped from " +
                             std::to_string(options.iterations) + " to " + std::to_string(valid) +
                             " (valid query words)");
      f.iterations = valid;
    }
    f.rfm = rfm_forward(f.fem, gate, f.iterations);
    f.saliency = saliency_head(f.rfm.f_fv, f.fem.f_eq_sent);

    video_globals.push_back(gap(f.visual));
    query_globals.push_back(gap(f.query, &sample.query_valid));
    visual_feats.push_back(f.visual);
    caption_feats.push_back(f.pooled.features);
    out.l_qc_per_sample.push_back(loss_query_clip(f.rfm.s_qv, sample.relevance_mask, sample.query_valid));
    out.samples.push_back(std::move(f));
  }

  out.l_qv = loss_query_video(video_globals, query_globals);
  out.l_qc = mean_of(out.l_qc_per_sample);
  out.l_cc = loss_caption_clip(visual_feats, caption_feats);
  out.l_ma = loss_total(out.l_qv, out.l_qc, out.l_cc, options.weights);
  if (!std::isfinite(out.l_ma.value().item())) throw NumericalError("modal alignment loss is not finite");
  return out;
}

LossReport evaluate_losses(const Batch& batch, const ModelParams& params, const ForwardOptions& options) {
  Tape tape;
  return forward_batch(tape, batch, bind(tape, params, false), options).losses();
}

std::vector<std::vector<double>> query_video_similarity(const Batch& batch, const ModelParams& params) {
  Tape tape;
  auto bound = bind(tape, params, false);
  std::vector<Var> gv, gq;
  for (const auto& s : batch.samples) {
    auto proj = project_inputs(tape, s, bound.input);
    gv.push_back(gap(proj.visual));
    gq.push_back(gap(proj.query, &s.query_valid));
  }
  std::vector<std::vector<double>> sims(gv.size(), std::vector<double>(gq.size()));
  for (std::size_t i = 0; i < gv.size(); ++i) {
    for (std::size_t j = 0; j < gq.size(); ++j) sims[i][j] = cosine_sim(gv[i], gq[j]).value().item();
  }
  return sims;
}

std::size_t matched_pairs_on_top(const std::vector<std::vector<double>>& sims) {
  std::size_t hits = 0;
  const auto b = sims.size();
  for (std::size_t j = 0; j < b; ++j) {
    bool top = true;
    for (std::size_t i = 0; i < b; ++i) {
      if (i != j && sims[i][j] >= sims[j][j]) top = false;
    }
    hits += top ? 1 : 0;
  }
  return hits;
}

double l1_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += std::abs(v);
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<std::pair<std::string, std::string>> echo(const RunConfig& c, bool training) {
  using nlohmann::json;
  std::vector<std::pair<std::string, std::string>> out = {
      {"fixture", json(c.fixture_path.filename().string()).dump()},
      {"seed", json(c.seed).dump()},
      {"iters", json(c.iterations).dump()},
      {"fusion", json(std::string(to_string(c.fusion))).dump()},
      {"init", json(std::string(to_string(c.init))).dump()},
      {"lambda_qv", json(c.weights.qv).dump()},
      {"lambda_qc", json(c.weights.qc).dump()},
      {"lambda_cc", json(c.weights.cc).dump()},
  };
  if (training) {
    out.emplace_back("steps", json(c.train_steps).dump());
    out.emplace_back("lr", json(c.learning_rate).dump());
  }
  return out;
}

ForwardOptions options_of(const RunConfig& config) {
  ForwardOptions o;
  o.fusion = config.fusion;
  o.iterations = config.iterations;
  o.weights = config.weights;
  return o;
}

}  // namespace

RunReport run(const Batch& batch, const ModelParams& params, const RunConfig& config) {
  validate(config, false);
  const auto start = Clock::now();
  Tape tape;
  auto fwd = forward_batch(tape, batch, bind(tape, params, false), options_of(config));

  RunReport report;
  report.config_echo = echo(config, false);
  for (const auto& f : fwd.samples) {
    SampleReport s;
    s.id = f.id;
    for (auto w : f.rfm.selected_words) s.top_words.emplace_back(w, f.fem.highlight.scores[w]);
    s.saliency = f.saliency.value().values();
    for (const auto& x : f.rfm.trace) s.trace_norms.push_back(l1_norm(x.value()));
    report.samples.push_back(std::move(s));
  }
  report.losses = fwd.losses();
  report.warnings = fwd.warnings;
  report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

RunReport cmd_run(const RunConfig& config) {
  auto batch = load_fixture(config.fixture_path);
  auto params = init_params(batch.d, config.init, config.seed);
  return run(batch, params, config);
}

TrainResult train(const Batch& batch, ModelParams params, const RunConfig& config) {
  validate(config, true);
  const auto options = options_of(config);
  TrainResult result;
  for (std::size_t step = 0;; ++step) {
    Tape tape;
    auto bound = bind(tape, params, true);
    auto fwd = forward_batch(tape, batch, bound, options);
    const double loss = fwd.l_ma.value().item();
    if (!std::isfinite(loss)) throw NumericalError("training diverged at step " + std::to_string(step));
    result.loss_series.push_back(loss);
    if (step == config.train_steps) break;

    tape.backward(fwd.l_ma);
    std::vector<Var*> vars;
    bound.visit([&vars](const std::string&, Var& v) { vars.push_back(&v); });
    auto tensors = named_tensors(params);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const auto g = vars[i]->grad();
      auto dst = tensors[i].second->data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= config.learning_rate * g[k];
    }
  }
  result.params = params;
  result.report = run(batch, params, config);
  result.report.config_echo = echo(config, true);
  return result;
}

TrainResult cmd_train(const RunConfig& config) {
  auto batch = load_fixture(config.fixture_path);
  return train(batch, init_params(batch.d, config.init, config.seed), config);
}

std::vector<SweepRow> sweep_iterations(const Batch& batch, const ModelParams& params, const RunConfig& config,
                                       const std::vector<std::size_t>& n_values) {
  std::vector<SweepRow> rows;
  for (auto n : n_values) {
    auto cfg = config;
    cfg.iterations = n;
    SweepRow row;
    row.iterations = n;
    row.report = run(batch, params, cfg);
    double total = 0.0;
    for (const auto& s : row.report.samples) total += s.trace_norms.back();
    row.mean_filtered_l1 = total / static_cast<double>(row.report.samples.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> cmd_sweep_iters(const RunConfig& config, const std::vector<std::size_t>& n_values) {
  auto batch = load_fixture(config.fixture_path);
  return sweep_iterations(batch, init_params(batch.d, config.init, config.seed), config, n_values);
}

}  // namespace clipfilter
