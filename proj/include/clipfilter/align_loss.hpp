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

#include <vector>

#include "clipfilter/autodiff.hpp"

namespace clipfilter {

// Balancing weights for the query-video, query-clip and caption-clip terms.
struct LossWeights {
  double qv = 0.3;
  double qc = 0.5;
  double cc = 1.5;
};

void validate(const LossWeights& weights);

struct LossReport {
  double l_qv = 0.0;
  double l_qc = 0.0;
  double l_cc = 0.0;
  double l_ma = 0.0;
  std::vector<double> l_qc_per_sample;
};

// InfoNCE over global features, temperature 1: for every query j the matched
// video competes against all videos i in the batch. Inputs are GAP vectors [d].
Var loss_query_video(const std::vector<Var>& video_globals, const std::vector<Var>& query_globals);

// Binary cross-entropy of the per-clip score mean_k sigmoid(s_qv[i, k]) (valid
// words only) against the relevance mask. Summed over clips.
Var loss_query_clip(const Var& s_qv, const Mask& relevance, const Mask& query_valid);

inline constexpr double kProbabilityClamp = 1e-12;

// Clip-level caption/visual contrast: for video k, the positives are its own
// index-aligned (clip, caption) pairs; the denominator adds the index-aligned
// pairs of every other video's clips against k's captions. When clip counts
// differ, only the indices both videos share are paired.
Var loss_caption_clip(const std::vector<Var>& visual, const std::vector<Var>& captions);

Var loss_total(const Var& l_qv, const Var& l_qc, const Var& l_cc, const LossWeights& weights);

// Arithmetic mean of scalar Vars.
Var mean_of(const std::vector<Var>& scalars);

}  // namespace clipfilter
