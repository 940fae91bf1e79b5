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

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "clipfilter/align_loss.hpp"
#include "clipfilter/fem.hpp"
#include "clipfilter/fixtures.hpp"
#include "clipfilter/params.hpp"
#include "clipfilter/rfm.hpp"

namespace clipfilter {

// A loss or feature became NaN/Inf.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::filesystem::path fixture_path;
  std::uint64_t seed = 0;
  std::size_t iterations = kDefaultIterations;
  FusionMode fusion = FusionMode::learned;
  LossWeights weights;
  InitMode init = InitMode::identity;
  std::size_t train_steps = 0;
  double learning_rate = 0.05;
  std::filesystem::path output_path;
};

void validate(const RunConfig& config, bool training);

struct SampleForward {
  std::string id;
  Var leaf_query, leaf_visual, leaf_captions;  // fixture features as tape leaves
  Var query, visual, captions;                 // after input projection
  PooledCaptions pooled;
  FemOutput fem;
  RfmOutput rfm;
  Var saliency;                 // [L_v]
  std::size_t iterations = 0;   // after clamping to the valid word count
};

struct BatchForward {
  std::vector<SampleForward> samples;
  Var l_qv, l_qc, l_cc, l_ma;
  std::vector<Var> l_qc_per_sample;
  std::vector<std::string> warnings;

  LossReport losses() const;
};

// Input projections for one sample's features.
struct ProjectedSample {
  Var leaf_query, leaf_visual, leaf_captions;
  Var query, visual, captions;
};
ProjectedSample project_inputs(Tape& tape, const Sample& sample, const InputWeights<Var>& w,
                               bool features_require_grad = false);

// Per-clip score cos(f_fv[i], f_eq_sent); a readable stand-in for a prediction head.
Var saliency_head(const Var& f_fv, const Var& f_eq_sent);

struct ForwardOptions {
  FusionMode fusion = FusionMode::learned;
  std::size_t iterations = kDefaultIterations;
  LossWeights weights;
  bool features_require_grad = false;
};

// pool_captions -> fem_forward -> rfm_forward per sample, then the batch losses.
// Iterations are clamped per sample to its valid word count, with a warning.
BatchForward forward_batch(Tape& tape, const Batch& batch, const BoundParams& params, const ForwardOptions& options);

// Full-forward loss without gradients.
LossReport evaluate_losses(const Batch& batch, const ModelParams& params, const ForwardOptions& options);

// sims[i][j] = Sim(G_v_i, G_q_j) after input projection.
std::vector<std::vector<double>> query_video_similarity(const Batch& batch, const ModelParams& params);
// Number of queries j whose matched video i = j has the largest similarity.
std::size_t matched_pairs_on_top(const std::vector<std::vector<double>>& sims);

struct SampleReport {
  std::string id;
  std::vector<std::pair<std::size_t, double>> top_words;
  std::vector<double> saliency;
  std::vector<double> trace_norms;
};

struct RunReport {
  std::vector<std::pair<std::string, std::string>> config_echo;  // key, JSON-encoded value
  std::vector<SampleReport> samples;
  LossReport losses;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;  // not serialized
};

RunReport run(const Batch& batch, const ModelParams& params, const RunConfig& config);
RunReport cmd_run(const RunConfig& config);

struct TrainResult {
  std::vector<double> loss_series;  // L_ma before each step, plus the final value
  ModelParams params;
  RunReport report;                 // forward report with the trained parameters
};

TrainResult train(const Batch& batch, ModelParams params, const RunConfig& config);
TrainResult cmd_train(const RunConfig& config);

struct SweepRow {
  std::size_t iterations = 0;
  RunReport report;
  double mean_filtered_l1 = 0.0;  // mean over samples of the last trace norm
};

std::vector<SweepRow> sweep_iterations(const Batch& batch, const ModelParams& params, const RunConfig& config,
                                       const std::vector<std::size_t>& n_values);
std::vector<SweepRow> cmd_sweep_iters(const RunConfig& config, const std::vector<std::size_t>& n_values);

double l1_norm(const Tensor& t);

}  // namespace clipfilter
