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

// Shared test helpers: conversions between engine tensors and oracle nested
// vectors, random instance generators, and one engine-side runner per
// registered oracle op.

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "clipfilter/autodiff.hpp"
#include "clipfilter/fixtures.hpp"
#include "clipfilter/oracle/oracle.hpp"
#include "clipfilter/params.hpp"

namespace clipfilter::testing {

using oracle::Cube;
using oracle::Mat;
using oracle::Vec;

Mat to_mat(const Tensor& t);  // rank 1 -> single row
Vec to_vec(const Tensor& t);
Cube to_cube(const Tensor& t);
Vec to_vec(const Mask& m);
Mat to_mat(const std::vector<Mask>& m);
Tensor from_mat(const Mat& m);
Mat indices_row(const std::vector<std::size_t>& idx);

std::size_t extent(std::mt19937_64& rng, std::size_t lo, std::size_t hi);
Tensor random_tensor(std::mt19937_64& rng, Shape shape, double scale = 1.0);
Mask random_mask(std::mt19937_64& rng, std::size_t n);  // at least one entry set

// Places every parameter into oracle inputs under its library name.
void add_params(oracle::OracleInputs& in, const ModelParams& params);

struct EngineCase {
  oracle::OracleInputs inputs;
  std::map<std::string, Mat> engine;
};

struct CaseSpec {
  std::function<EngineCase(std::mt19937_64&)> make;
  double tolerance;  // max |engine - oracle|
};

// Keyed by oracle op name; every registered oracle has exactly one entry.
const std::map<std::string, CaseSpec>& engine_cases();

// Random batch with arbitrary masks, for gradient checks and property sweeps.
Batch random_batch(std::mt19937_64& rng, std::size_t max_b, std::size_t max_lv, std::size_t max_lq,
                   std::size_t max_lc, std::size_t max_d);

}  // namespace clipfilter::testing
