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

#include "clipfilter/autodiff.hpp"
#include "clipfilter/tensor.hpp"

namespace clipfilter {

// One query/video item. Extents: query [L_q x d], visual [L_v x d],
// captions [L_v x L_c x d] (token features per clip).
struct Sample {
  std::string id;
  Tensor query;
  Mask query_valid;
  Tensor visual;
  Tensor captions;
  std::vector<Mask> caption_valid;  // [L_v][L_c]
  Mask relevance_mask;              // [L_v]

  std::size_t num_words() const { return query.dim(0); }
  std::size_t num_clips() const { return visual.dim(0); }
  std::size_t caption_length() const { return captions.dim(1); }
  std::size_t dim() const { return query.dim(1); }
  std::size_t valid_words() const { return count_valid(query_valid); }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Batch {
  std::size_t d = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  friend bool operator==(const Batch&, const Batch&) = default;
};

// Parse or invariant failure in a fixture; the message names the sample and field.
class FixtureError : public std::runtime_error {
 public:
  FixtureError(const std::string& sample, const std::string& field, const std::string& detail);
  const std::string& sample() const { return sample_; }
  const std::string& field() const { return field_; }

 private:
  std::string sample_;
  std::string field_;
};

// Throws FixtureError on the first broken invariant.
void validate(const Batch& batch);

Batch parse_fixture(const std::string& text);
std::string serialize_fixture(const Batch& batch);
Batch load_fixture(const std::filesystem::path& path);
void save_fixture(const Batch& batch, const std::filesystem::path& path);

struct SynthesisSpec {
  std::uint64_t seed = 0;
  std::size_t batch = 1;
  std::size_t words = 1;     // L_q
  std::size_t clips = 1;     // L_v
  std::size_t tokens = 1;    // L_c
  std::size_t dim = 1;       // d
  double alignment = 0.0;    // in [0, 1]
};

// Query words are i.i.d. N(0, I); their mean is the query centroid. Relevant
// clips and all of their caption tokens are alignment * centroid +
// (1 - alignment) * noise; other clips and tokens are independent N(0, I).
// One contiguous relevant window of max(1, L_v / 3) clips per sample.
Batch synthesize(const SynthesisSpec& spec);

struct PooledCaptions {
  Var features;  // F_c [L_v x d]
  Var weights;   // A [L_v x L_c]
};

// Query-guided weighted sum of caption tokens: raw dot-product similarity of
// every token against every query word, averaged over valid words, softmaxed
// over each clip's valid tokens, then used to weight the tokens.
PooledCaptions pool_captions(const Var& query, const Var& captions, const Mask& query_valid,
                             const std::vector<Mask>& caption_valid);

// Convenience overload on a fixture sample (no gradients).
Tensor pool_captions(const Sample& sample);

}  // namespace clipfilter
