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

#include "clipfilter/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace clipfilter {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

FixtureError::FixtureError(const std::string& sample, const std::string& field, const std::string& detail)
    : std::runtime_error(sample.empty() ? "field '" + field + "': " + detail
                                        : "sample '" + sample + "', field '" + field + "': " + detail),
      sample_(sample),
      field_(field) {}

// ---- validation ----

namespace {

void check_mask(const Mask& mask, const std::string& id, const std::string& field) {
  for (auto m : mask) {
    if (m > 1) throw FixtureError(id, field, "entries must be 0 or 1");
  }
}

}  // namespace

void validate(const Batch& batch) {
  if (batch.d == 0) throw FixtureError("", "d", "must be >= 1");
  if (batch.samples.empty()) throw FixtureError("", "samples", "batch must hold at least one sample");
  std::set<std::string> ids;
  for (const auto& s : batch.samples) {
    const auto& id = s.id;
    if (!ids.insert(id).second) throw FixtureError(id, "id", "duplicate sample id");
    if (s.query.rank() != 2 || s.query.dim(1) != batch.d) {
      throw FixtureError(id, "query", "expected [L_q x " + std::to_string(batch.d) + "], got " +
                                          shape_string(s.query.shape()));
    }
    if (s.visual.rank() != 2 || s.visual.dim(1) != batch.d) {
      throw FixtureError(id, "visual", "expected [L_v x " + std::to_string(batch.d) + "], got " +
                                           shape_string(s.visual.shape()));
    }
    const auto lv = s.visual.dim(0);
    if (s.captions.rank() != 3 || s.captions.dim(0) != lv || s.captions.dim(2) != batch.d) {
      throw FixtureError(id, "captions", "expected [" + std::to_string(lv) + " x L_c x " +
                                             std::to_string(batch.d) + "], got " +
                                             shape_string(s.captions.shape()));
    }
    if (!s.query.all_finite()) throw FixtureError(id, "query", "non-finite value");
    if (!s.visual.all_finite()) throw FixtureError(id, "visual", "non-finite value");
    if (!s.captions.all_finite()) throw FixtureError(id, "captions", "non-finite value");

    if (s.query_valid.size() != s.query.dim(0)) throw FixtureError(id, "query_valid", "length must equal L_q");
    check_mask(s.query_valid, id, "query_valid");
    if (count_valid(s.query_valid) == 0) throw FixtureError(id, "query_valid", "no valid query word");

    if (s.relevance_mask.size() != lv) throw FixtureError(id, "relevance_mask", "length must equal L_v");
    check_mask(s.relevance_mask, id, "relevance_mask");

    if (s.caption_valid.size() != lv) throw FixtureError(id, "caption_valid", "must have L_v rows");
    for (const auto& row : s.caption_valid) {
      if (row.size() != s.captions.dim(1)) throw FixtureError(id, "caption_valid", "rows must have length L_c");
      check_mask(row, id, "caption_valid");
      if (count_valid(row) == 0) throw FixtureError(id, "caption_valid", "a clip has no valid caption token");
    }
  }
}

// ---- parsing ----

namespace {

const std::set<std::string> kTopFields = {"d", "samples"};
const std::set<std::string> kSampleFields = {"id",     "query",    "query_valid",    "visual",
                                             "captions", "caption_valid", "relevance_mask"};

const json& require(const json& obj, const std::string& key, const std::string& id) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FixtureError(id, key, "missing");
  return *it;
}

double number(const json& v, const std::string& id, const std::string& field) {
  if (!v.is_number()) throw FixtureError(id, field, "expected a number");
  return v.get<double>();
}

std::vector<double> vector_of(const json& v, const std::string& id, const std::string& field) {
  if (!v.is_array() || v.empty()) throw FixtureError(id, field, "expected a non-empty array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(number(x, id, field));
  return out;
}

Tensor matrix_of(const json& v, std::size_t d, const std::string& id, const std::string& field) {
  if (!v.is_array() || v.empty()) throw FixtureError(id, field, "expected a non-empty array of rows");
  std::vector<double> data;
  for (const auto& row : v) {
    auto r = vector_of(row, id, field);
    if (r.size() != d) {
      throw FixtureError(id, field, "row length " + std::to_string(r.size()) + " != d=" + std::to_string(d));
    }
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({v.size(), d}, std::move(data));
}

Mask mask_of(const json& v, const std::string& id, const std::string& field) {
  if (!v.is_array() || v.empty()) throw FixtureError(id, field, "expected a non-empty array");
  Mask out;
  for (const auto& x : v) {
    if (!x.is_number_integer() || (x.get<std::int64_t>() != 0 && x.get<std::int64_t>() != 1)) {
      throw FixtureError(id, field, "entries must be 0 or 1, got " + x.dump());
    }
    out.push_back(static_cast<std::uint8_t>(x.get<std::int64_t>()));
  }
  return out;
}

Sample sample_of(const json& js, std::size_t d, std::size_t index) {
  std::string id = "#" + std::to_string(index);
  if (!js.is_object()) throw FixtureError(id, "samples", "each sample must be an object");
  if (auto it = js.find("id"); it != js.end()) {
    if (!it->is_string()) throw FixtureError(id, "id", "expected a string");
    id = it->get<std::string>();
  }
  for (const auto& [key, _] : js.items()) {
    if (!kSampleFields.count(key)) throw FixtureError(id, key, "unknown field");
  }
  Sample s;
  s.id = require(js, "id", id).get<std::string>();
  s.query = matrix_of(require(js, "query", id), d, id, "query");
  s.query_valid = mask_of(require(js, "query_valid", id), id, "query_valid");
  s.visual = matrix_of(require(js, "visual", id), d, id, "visual");

  const auto& caps = require(js, "captions", id);
  if (!caps.is_array() || caps.empty()) throw FixtureError(id, "captions", "expected [L_v][L_c][d]");
  std::size_t lc = 0;
  std::vector<double> data;
  for (const auto& clip : caps) {
    auto m = matrix_of(clip, d, id, "captions");
    if (lc == 0) lc = m.dim(0);
    if (m.dim(0) != lc) throw FixtureError(id, "captions", "every clip needs the same L_c (pad and mask)");
    data.insert(data.end(), m.values().begin(), m.values().end());
  }
  s.captions = Tensor({caps.size(), lc, d}, std::move(data));

  const auto& cv = require(js, "caption_valid", id);
  if (!cv.is_array()) throw FixtureError(id, "caption_valid", "expected [L_v][L_c]");
  for (const auto& row : cv) s.caption_valid.push_back(mask_of(row, id, "caption_valid"));
  s.relevance_mask = mask_of(require(js, "relevance_mask", id), id, "relevance_mask");
  return s;
}

}  // namespace

Batch parse_fixture(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FixtureError("", "<document>", e.what());
  }
  if (!doc.is_object()) throw FixtureError("", "<document>", "top level must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (!kTopFields.count(key)) throw FixtureError("", key, "unknown field");
  }
  const auto& dj = require(doc, "d", "");
  if (!dj.is_number_integer() || dj.get<std::int64_t>() < 1) throw FixtureError("", "d", "must be an integer >= 1");
  Batch batch;
  batch.d = dj.get<std::size_t>();
  const auto& samples = require(doc, "samples", "");
  if (!samples.is_array()) throw FixtureError("", "samples", "expected an array");
  for (std::size_t i = 0; i < samples.size(); ++i) batch.samples.push_back(sample_of(samples[i], batch.d, i));
  validate(batch);
  return batch;
}

namespace {

ordered_json rows_json(const Tensor& t) {
  ordered_json out = ordered_json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) out.push_back(t.row(i));
  return out;
}

ordered_json mask_json(const Mask& m) {
  ordered_json out = ordered_json::array();
  for (auto v : m) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace

std::string serialize_fixture(const Batch& batch) {
  ordered_json doc;
  doc["d"] = batch.d;
  doc["samples"] = ordered_json::array();
  for (const auto& s : batch.samples) {
    ordered_json js;
    js["id"] = s.id;
    js["query"] = rows_json(s.query);
    js["query_valid"] = mask_json(s.query_valid);
    js["visual"] = rows_json(s.visual);
    ordered_json caps = ordered_json::array();
    const auto lc = s.captions.dim(1);
    for (std::size_t v = 0; v < s.captions.dim(0); ++v) {
      ordered_json clip = ordered_json::array();
      for (std::size_t c = 0; c < lc; ++c) clip.push_back(s.captions.row(v * lc + c));
      caps.push_back(std::move(clip));
    }
    js["captions"] = std::move(caps);
    ordered_json cv = ordered_json::array();
    for (const auto& row : s.caption_valid) cv.push_back(mask_json(row));
    js["caption_valid"] = std::move(cv);
    js["relevance_mask"] = mask_json(s.relevance_mask);
    doc["samples"].push_back(std::move(js));
  }
  return doc.dump(1) + "\n";
}

Batch load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FixtureError("", "<document>", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_fixture(buf.str());
}

void save_fixture(const Batch& batch, const std::filesystem::path& path) {
  validate(batch);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_fixture(batch);
}

// ---- synthesis ----

Batch synthesize(const SynthesisSpec& spec) {
  if (spec.batch == 0 || spec.words == 0 || spec.clips == 0 || spec.tokens == 0 || spec.dim == 0) {
    throw ContractError("synthesize: every extent must be >= 1");
  }
  if (!(spec.alignment >= 0.0 && spec.alignment <= 1.0)) {
    throw ContractError("synthesize: alignment must lie in [0, 1]");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = spec.dim;
  const double a = spec.alignment;

  Batch batch;
  batch.d = d;
  for (std::size_t b = 0; b < spec.batch; ++b) {
    Sample s;
    s.id = "syn-" + std::to_string(spec.seed) + "-" + std::to_string(b);
    s.query = Tensor({spec.words, d});
    for (auto& v : s.query.data()) v = normal(rng);
    std::vector<double> centroid(d, 0.0);
    for (std::size_t k = 0; k < spec.words; ++k) {
      for (std::size_t c = 0; c < d; ++c) centroid[c] += s.query(k, c) / static_cast<double>(spec.words);
    }
    s.query_valid.assign(spec.words, 1);

    const std::size_t window = std::max<std::size_t>(1, spec.clips / 3);
    std::uniform_int_distribution<std::size_t> start_dist(0, spec.clips - window);
    const auto start = start_dist(rng);
    s.relevance_mask.assign(spec.clips, 0);
    for (std::size_t i = start; i < start + window; ++i) s.relevance_mask[i] = 1;

    auto draw = [&](std::span<double> row, bool relevant) {
      for (std::size_t c = 0; c < d; ++c) {
        const double noise = normal(rng);
        row[c] = relevant ? a * centroid[c] + (1.0 - a) * noise : noise;
      }
    };
    s.visual = Tensor({spec.clips, d});
    s.captions = Tensor({spec.clips, spec.tokens, d});
    for (std::size_t i = 0; i < spec.clips; ++i) {
      const bool rel = s.relevance_mask[i] != 0;
      draw(s.visual.data().subspan(i * d, d), rel);
      for (std::size_t t = 0; t < spec.tokens; ++t) {
        draw(s.captions.data().subspan((i * spec.tokens + t) * d, d), rel);
      }
    }
    s.caption_valid.assign(spec.clips, Mask(spec.tokens, 1));
    batch.samples.push_back(std::move(s));
  }
  return batch;
}

// ---- caption pooling ----

PooledCaptions pool_captions(const Var& query, const Var& captions, const Mask& query_valid,
                             const std::vector<Mask>& caption_valid) {
  const auto& cv = captions.value();
  if (cv.rank() != 3) throw DimensionError("captions must be [L_v x L_c x d]");
  const auto lv = cv.dim(0), lc = cv.dim(1), d = cv.dim(2);
  if (query.value().rank() != 2 || query.value().dim(1) != d) {
    throw DimensionError("query " + shape_string(query.shape()) + " incompatible with captions " +
                         shape_string(cv.shape()));
  }
  if (caption_valid.size() != lv) throw DimensionError("caption_valid must have L_v rows");
  Tensor token_mask({lv, lc});
  for (std::size_t v = 0; v < lv; ++v) {
    if (caption_valid[v].size() != lc) throw DimensionError("caption_valid rows must have length L_c");
    if (count_valid(caption_valid[v]) == 0) {
      throw ContractError("clip " + std::to_string(v) + " has no valid caption token");
    }
    for (std::size_t c = 0; c < lc; ++c) token_mask(v, c) = caption_valid[v][c] ? 1.0 : 0.0;
  }

  auto tokens = reshape(captions, {lv * lc, d});
  auto sim = matmul(tokens, transpose(query));            // [L_v*L_c x L_q]
  auto avg = reshape(mean(sim, 1, &query_valid), {lv, lc});
  auto weights = softmax(avg, 1, &token_mask);
  auto weighted = mul_col(tokens, reshape(weights, {lv * lc}));
  auto features = sum(reshape(weighted, {lv, lc, d}), 1);
  return {features, weights};
}

Tensor pool_captions(const Sample& sample) {
  Tape tape;
  auto q = tape.constant(sample.query);
  auto c = tape.constant(sample.captions);
  return pool_captions(q, c, sample.query_valid, sample.caption_valid).features.value();
}

}  // namespace clipfilter
