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

#include "cases.hpp"

#include "clipfilter/align_loss.hpp"
#include "clipfilter/fem.hpp"
#include "clipfilter/pipeline.hpp"
#include "clipfilter/rfm.hpp"

namespace clipfilter::testing {

Mat to_mat(const Tensor& t) {
  Mat m;
  for (std::size_t i = 0; i < t.rows(); ++i) m.push_back(t.row(i));
  return m;
}

Vec to_vec(const Tensor& t) { return t.values(); }

Cube to_cube(const Tensor& t) {
  Cube c(t.dim(0), Mat(t.dim(1), Vec(t.dim(2))));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j)
      for (std::size_t k = 0; k < t.dim(2); ++k) c[i][j][k] = t(i, j, k);
  return c;
}

Vec to_vec(const Mask& m) {
  Vec v;
  for (auto x : m) v.push_back(x ? 1.0 : 0.0);
  return v;
}

Mat to_mat(const std::vector<Mask>& m) {
  Mat out;
  for (const auto& row : m) out.push_back(to_vec(row));
  return out;
}

Tensor from_mat(const Mat& m) { return Tensor::from_rows(m); }

Mat indices_row(const std::vector<std::size_t>& idx) {
  Vec v;
  for (auto i : idx) v.push_back(static_cast<double>(i));
  return Mat{v};
}

std::size_t extent(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor random_tensor(std::mt19937_64& rng, Shape shape, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = normal(rng);
  return t;
}

Mask random_mask(std::mt19937_64& rng, std::size_t n) {
  std::bernoulli_distribution keep(0.7);
  Mask m(n);
  for (auto& v : m) v = keep(rng) ? 1 : 0;
  m[extent(rng, 0, n - 1)] = 1;
  return m;
}

void add_params(oracle::OracleInputs& in, const ModelParams& params) {
  for (const auto& [name, t] : named_tensors(params)) {
    if (t->rank() == 2) in.mats[name] = to_mat(*t);
    else in.vecs[name] = to_vec(*t);
  }
}

Batch random_batch(std::mt19937_64& rng, std::size_t max_b, std::size_t max_lv, std::size_t max_lq,
                   std::size_t max_lc, std::size_t max_d) {
  Batch batch;
  batch.d = extent(rng, 1, max_d);
  const auto b = extent(rng, 1, max_b);
  for (std::size_t i = 0; i < b; ++i) {
    Sample s;
    s.id = "r" + std::to_string(i);
    const auto lq = extent(rng, 1, max_lq), lv = extent(rng, 1, max_lv), lc = extent(rng, 1, max_lc);
    s.query = random_tensor(rng, {lq, batch.d});
    s.query_valid = random_mask(rng, lq);
    s.visual = random_tensor(rng, {lv, batch.d});
    s.captions = random_tensor(rng, {lv, lc, batch.d});
    for (std::size_t v = 0; v < lv; ++v) s.caption_valid.push_back(random_mask(rng, lc));
    s.relevance_mask.resize(lv);
    for (auto& m : s.relevance_mask) m = static_cast<std::uint8_t>(extent(rng, 0, 1));
    batch.samples.push_back(std::move(s));
  }
  return batch;
}

namespace {

constexpr std::size_t kMax = 8;
constexpr double kLinearTol = 1e-12;
constexpr double kTol = 1e-10;

ModelParams random_params(std::mt19937_64& rng, std::size_t d) { return init_params(d, InitMode::random, rng()); }

struct FemFixture {
  std::size_t d, lq, lv;
  Tensor f_q, f_v, f_c;
  Mask valid;
  ModelParams params;
};

FemFixture fem_fixture(std::mt19937_64& rng) {
  FemFixture f;
  f.d = extent(rng, 1, kMax);
  f.lq = extent(rng, 1, kMax);
  f.lv = extent(rng, 1, kMax);
  f.f_q = random_tensor(rng, {f.lq, f.d});
  f.f_v = random_tensor(rng, {f.lv, f.d});
  f.f_c = random_tensor(rng, {f.lv, f.d});
  f.valid = random_mask(rng, f.lq);
  f.params = random_params(rng, f.d);
  return f;
}

oracle::OracleInputs fem_inputs(const FemFixture& f) {
  oracle::OracleInputs in;
  in.mats["f_q"] = to_mat(f.f_q);
  in.mats["f_v"] = to_mat(f.f_v);
  in.mats["f_c"] = to_mat(f.f_c);
  in.vecs["query_valid"] = to_vec(f.valid);
  add_params(in, f.params);
  return in;
}

void add_gate(oracle::OracleInputs& in, const FusionGate& gate) {
  in.scalars["learned"] = gate.mode == FusionMode::learned ? 1.0 : 0.0;
}

FusionGate random_gate(std::mt19937_64& rng, const BoundParams& bound) {
  return FusionGate{extent(rng, 0, 1) ? FusionMode::learned : FusionMode::average, bound.gate};
}

std::map<std::string, CaseSpec> build_cases() {
  std::map<std::string, CaseSpec> cases;

  cases["matmul"] = {[](std::mt19937_64& rng) {
                       const auto m = extent(rng, 1, kMax), k = extent(rng, 1, kMax), n = extent(rng, 1, kMax);
                       Tape tape;
                       auto a = tape.constant(random_tensor(rng, {m, k}));
                       auto b = tape.constant(random_tensor(rng, {k, n}));
                       EngineCase c;
                       c.inputs.mats = {{"a", to_mat(a.value())}, {"b", to_mat(b.value())}};
                       c.engine["out"] = to_mat(matmul(a, b).value());
                       return c;
                     },
                     kLinearTol};

  cases["softmax"] = {[](std::mt19937_64& rng) {
                        const auto n = extent(rng, 1, kMax);
                        Tape tape;
                        auto x = tape.constant(random_tensor(rng, {n}, 5.0));
                        EngineCase c;
                        c.inputs.vecs["x"] = to_vec(x.value());
                        if (extent(rng, 0, 1)) {
                          const auto mask = random_mask(rng, n);
                          const auto mt = column_mask(mask, 1).reshaped({n});
                          c.inputs.vecs["mask"] = to_vec(mask);
                          c.engine["out"] = to_mat(softmax(x, 0, &mt).value());
                        } else {
                          c.engine["out"] = to_mat(softmax(x, 0).value());
                        }
                        return c;
                      },
                      kTol};

  cases["cosine_sim"] = {[](std::mt19937_64& rng) {
                           const auto m = extent(rng, 1, kMax), d = extent(rng, 1, kMax);
                           Tape tape;
                           auto x = tape.constant(random_tensor(rng, {m, d}));
                           auto y = tape.constant(random_tensor(rng, {d}));
                           EngineCase c;
                           c.inputs.mats["x"] = to_mat(x.value());
                           c.inputs.vecs["y"] = to_vec(y.value());
                           c.engine["out"] = to_mat(cosine_sim(x, y).value());
                           return c;
                         },
                         kTol};

  cases["input_projection"] = {[](std::mt19937_64& rng) {
                                 const auto m = extent(rng, 1, kMax), d = extent(rng, 1, kMax);
                                 Tape tape;
                                 auto x = tape.constant(random_tensor(rng, {m, d}));
                                 auto w = tape.constant(random_tensor(rng, {d, d}));
                                 auto b = tape.constant(random_tensor(rng, {d}));
                                 EngineCase c;
                                 c.inputs.mats = {{"x", to_mat(x.value())}, {"weight", to_mat(w.value())}};
                                 c.inputs.vecs["bias"] = to_vec(b.value());
                                 c.engine["out"] = to_mat(linear(x, w, &b).value());
                                 return c;
                               },
                               kLinearTol};

  cases["pool_captions"] = {[](std::mt19937_64& rng) {
                              const auto d = extent(rng, 1, kMax), lq = extent(rng, 1, kMax);
                              const auto lv = extent(rng, 1, kMax), lc = extent(rng, 1, kMax);
                              Tape tape;
                              auto q = tape.constant(random_tensor(rng, {lq, d}));
                              auto caps = tape.constant(random_tensor(rng, {lv, lc, d}));
                              const auto qv = random_mask(rng, lq);
                              std::vector<Mask> cv;
                              for (std::size_t v = 0; v < lv; ++v) cv.push_back(random_mask(rng, lc));
                              auto r = pool_captions(q, caps, qv, cv);
                              EngineCase c;
                              c.inputs.mats = {{"query", to_mat(q.value())}, {"caption_valid", to_mat(cv)}};
                              c.inputs.cubes["captions"] = to_cube(caps.value());
                              c.inputs.vecs["query_valid"] = to_vec(qv);
                              c.engine = {{"features", to_mat(r.features.value())}, {"weights", to_mat(r.weights.value())}};
                              return c;
                            },
                            kTol};

  cases["word_highlight"] = {[](std::mt19937_64& rng) {
                               auto f = fem_fixture(rng);
                               Tape tape;
                               auto w = bind(tape, f.params, false);
                               auto r = word_highlight(tape.constant(f.f_q), f.valid, w.fem);
                               EngineCase c{fem_inputs(f), {}};
                               c.engine = {{"f_eq", to_mat(r.f_eq.value())},
                                           {"scores", Mat{r.highlight.scores}},
                                           {"order", indices_row(r.highlight.order)}};
                               return c;
                             },
                             kTol};

  cases["sentence_pool"] = {[](std::mt19937_64& rng) {
                              const auto lq = extent(rng, 1, kMax), d = extent(rng, 1, kMax);
                              Tape tape;
                              auto f_eq = tape.constant(random_tensor(rng, {lq, d}));
                              auto scores = tape.constant(random_tensor(rng, {lq}));
                              const auto valid = random_mask(rng, lq);
                              EngineCase c;
                              c.inputs.mats["f_eq"] = to_mat(f_eq.value());
                              c.inputs.vecs = {{"scores", to_vec(scores.value())}, {"query_valid", to_vec(valid)}};
                              c.engine["out"] = to_mat(sentence_pool(f_eq, scores, valid).value());
                              return c;
                            },
                            kTol};

  cases["scene_similarities"] = {[](std::mt19937_64& rng) {
                                   auto f = fem_fixture(rng);
                                   Tape tape;
                                   auto w = bind(tape, f.params, false);
                                   auto f_eq = tape.constant(f.f_q);
                                   auto s = scene_similarities(tape.constant(f.f_v), tape.constant(f.f_c), f_eq,
                                                               f.valid, w.fem);
                                   EngineCase c{fem_inputs(f), {}};
                                   c.inputs.mats["f_eq"] = to_mat(f.f_q);
                                   c.engine = {{"a_vq", to_mat(s.a_vq.value())},         {"a_cq", to_mat(s.a_cq.value())},
                                               {"a_vq_row", to_mat(s.a_vq_row.value())}, {"a_cq_row", to_mat(s.a_cq_row.value())},
                                               {"a_vq_col", to_mat(s.a_vq_col.value())}, {"a_cq_col", to_mat(s.a_cq_col.value())}};
                                   return c;
                                 },
                                 kTol};

  cases["scene_compose"] = {[](std::mt19937_64& rng) {
                              auto f = fem_fixture(rng);
                              Tape tape;
                              auto w = bind(tape, f.params, false);
                              auto f_v = tape.constant(f.f_v), f_c = tape.constant(f.f_c), f_eq = tape.constant(f.f_q);
                              auto sent = tape.constant(random_tensor(rng, {f.d}));
                              auto sims = scene_similarities(f_v, f_c, f_eq, f.valid, w.fem);
                              auto r = scene_compose(f_v, f_c, f_eq, sent, sims, w.fem);
                              EngineCase c{fem_inputs(f), {}};
                              c.inputs.mats["f_eq"] = to_mat(f.f_q);
                              c.inputs.vecs["f_eq_sent"] = to_vec(sent.value());
                              c.engine = {{"f_qv", to_mat(r.f_qv.value())}, {"f_qc", to_mat(r.f_qc.value())}};
                              return c;
                            },
                            kTol};

  cases["cross_enhance"] = {[](std::mt19937_64& rng) {
                              auto f = fem_fixture(rng);
                              Tape tape;
                              auto w = bind(tape, f.params, false);
                              auto r = cross_enhance(tape.constant(f.f_v), tape.constant(f.f_c), w.fem);
                              EngineCase c;
                              add_params(c.inputs, f.params);
                              c.inputs.mats["f_qv"] = to_mat(f.f_v);
                              c.inputs.mats["f_qc"] = to_mat(f.f_c);
                              c.engine = {{"f_ev", to_mat(r.f_ev.value())}, {"f_ec", to_mat(r.f_ec.value())}};
                              return c;
                            },
                            kTol};

  cases["fem_forward"] = {[](std::mt19937_64& rng) {
                            auto f = fem_fixture(rng);
                            Tape tape;
                            auto w = bind(tape, f.params, false);
                            auto r = fem_forward(tape.constant(f.f_q), tape.constant(f.f_v), tape.constant(f.f_c),
                                                 f.valid, w.fem);
                            EngineCase c{fem_inputs(f), {}};
                            c.engine = {{"f_eq", to_mat(r.f_eq.value())},
                                        {"scores", Mat{r.highlight.scores}},
                                        {"order", indices_row(r.highlight.order)},
                                        {"f_eq_sent", to_mat(r.f_eq_sent.value())},
                                        {"f_ev", to_mat(r.f_ev.value())},
                                        {"f_ec", to_mat(r.f_ec.value())},
                                        {"a_vq_row", to_mat(r.a_vq_row.value())},
                                        {"a_cq_row", to_mat(r.a_cq_row.value())},
                                        {"a_vq_col", to_mat(r.a_vq_col.value())},
                                        {"a_cq_col", to_mat(r.a_cq_col.value())}};
                            return c;
                          },
                          kTol};

  cases["relevance_similarities"] = {[](std::mt19937_64& rng) {
                                       const auto lv = extent(rng, 1, kMax), lq = extent(rng, 1, kMax);
                                       const auto d = extent(rng, 1, kMax);
                                       Tape tape;
                                       auto ev = tape.constant(random_tensor(rng, {lv, d}));
                                       auto ec = tape.constant(random_tensor(rng, {lv, d}));
                                       auto eq = tape.constant(random_tensor(rng, {lq, d}));
                                       const auto valid = random_mask(rng, lq);
                                       auto r = relevance_similarities(ev, ec, eq, valid);
                                       EngineCase c;
                                       c.inputs.mats = {{"f_ev", to_mat(ev.value())},
                                                        {"f_ec", to_mat(ec.value())},
                                                        {"f_eq", to_mat(eq.value())}};
                                       c.inputs.vecs["query_valid"] = to_vec(valid);
                                       c.engine = {{"s_qv", to_mat(r.s_qv.value())}, {"s_qc", to_mat(r.s_qc.value())}};
                                       return c;
                                     },
                                     kTol};

  cases["fuse"] = {[](std::mt19937_64& rng) {
                     const auto lv = extent(rng, 1, kMax), lq = extent(rng, 1, kMax);
                     Tape tape;
                     auto params = random_params(rng, 1);
                     params.gate.weight = random_tensor(rng, {2}, 2.0);
                     params.gate.bias = random_tensor(rng, {1});
                     auto bound = bind(tape, params, false);
                     auto gate = random_gate(rng, bound);
                     auto sqv = tape.constant(random_tensor(rng, {lv, lq}));
                     auto sqc = tape.constant(random_tensor(rng, {lv, lq}));
                     EngineCase c;
                     add_params(c.inputs, params);
                     add_gate(c.inputs, gate);
                     c.inputs.mats = {{"s_qv", to_mat(sqv.value())}, {"s_qc", to_mat(sqc.value())}};
                     c.engine["out"] = to_mat(fuse(sqv, sqc, gate).value());
                     return c;
                   },
                   kTol};

  cases["iterative_filter"] = {[](std::mt19937_64& rng) {
                                 const auto lv = extent(rng, 1, kMax), lq = extent(rng, 1, kMax);
                                 const auto d = extent(rng, 1, kMax);
                                 Tape tape;
                                 auto ev = tape.constant(random_tensor(rng, {lv, d}));
                                 Tensor s(Shape{lv, lq});
                                 std::uniform_real_distribution<double> unit(-1.0, 1.0);
                                 for (auto& v : s.data()) v = unit(rng);
                                 auto sqvc = tape.constant(s);
                                 WordHighlight h;
                                 h.valid = random_mask(rng, lq);
                                 for (std::size_t k = 0; k < lq; ++k) h.scores.push_back(unit(rng));
                                 h.order = rank_descending(h.scores, h.valid);
                                 const auto n = extent(rng, 0, count_valid(h.valid));
                                 auto r = iterative_filter(ev, sqvc, h, n);
                                 EngineCase c;
                                 c.inputs.mats = {{"f_ev", to_mat(ev.value())}, {"s_qvc", to_mat(s)}};
                                 c.inputs.vecs = {{"scores", h.scores}, {"query_valid", to_vec(h.valid)}};
                                 c.inputs.scalars["n"] = static_cast<double>(n);
                                 c.engine = {{"f_fv", to_mat(r.f_fv.value())}, {"selected", indices_row(r.selected_words)}};
                                 return c;
                               },
                               kTol};

  cases["rfm_forward"] = {[](std::mt19937_64& rng) {
                            auto f = fem_fixture(rng);
                            Tape tape;
                            auto w = bind(tape, f.params, false);
                            auto gate = random_gate(rng, w);
                            auto fem = fem_forward(tape.constant(f.f_q), tape.constant(f.f_v), tape.constant(f.f_c),
                                                   f.valid, w.fem);
                            const auto n = extent(rng, 0, count_valid(f.valid));
                            auto r = rfm_forward(fem, gate, n);
                            EngineCase c{fem_inputs(f), {}};
                            add_gate(c.inputs, gate);
                            c.inputs.scalars["n"] = static_cast<double>(n);
                            c.engine = {{"s_qv", to_mat(r.s_qv.value())},
                                        {"s_qc", to_mat(r.s_qc.value())},
                                        {"s_qvc", to_mat(r.s_qvc.value())},
                                        {"f_fv", to_mat(r.f_fv.value())},
                                        {"selected", indices_row(r.selected_words)}};
                            return c;
                          },
                          kTol};

  cases["loss_query_video"] = {[](std::mt19937_64& rng) {
                                 const auto b = extent(rng, 1, kMax), d = extent(rng, 1, kMax);
                                 Tape tape;
                                 std::vector<Var> gv, gq;
                                 EngineCase c;
                                 for (std::size_t i = 0; i < b; ++i) {
                                   gv.push_back(tape.constant(random_tensor(rng, {d})));
                                   gq.push_back(tape.constant(random_tensor(rng, {d})));
                                   c.inputs.mats["video_globals"].push_back(to_vec(gv.back().value()));
                                   c.inputs.mats["query_globals"].push_back(to_vec(gq.back().value()));
                                 }
                                 c.engine["out"] = to_mat(loss_query_video(gv, gq).value());
                                 return c;
                               },
                               kTol};

  cases["loss_query_clip"] = {[](std::mt19937_64& rng) {
                                const auto lv = extent(rng, 1, kMax), lq = extent(rng, 1, kMax);
                                Tape tape;
                                auto s = tape.constant(random_tensor(rng, {lv, lq}));
                                Mask rel(lv);
                                for (auto& m : rel) m = static_cast<std::uint8_t>(extent(rng, 0, 1));
                                const auto valid = random_mask(rng, lq);
                                EngineCase c;
                                c.inputs.mats["s_qv"] = to_mat(s.value());
                                c.inputs.vecs = {{"relevance", to_vec(rel)}, {"query_valid", to_vec(valid)}};
                                c.engine["out"] = to_mat(loss_query_clip(s, rel, valid).value());
                                return c;
                              },
                              kTol};

  cases["loss_caption_clip"] = {[](std::mt19937_64& rng) {
                                  const auto b = extent(rng, 1, kMax), d = extent(rng, 1, kMax);
                                  Tape tape;
                                  std::vector<Var> fv, fc;
                                  EngineCase c;
                                  for (std::size_t i = 0; i < b; ++i) {
                                    const auto lv = extent(rng, 1, kMax);
                                    fv.push_back(tape.constant(random_tensor(rng, {lv, d})));
                                    fc.push_back(tape.constant(random_tensor(rng, {lv, d})));
                                    c.inputs.lists["visual"].push_back(to_mat(fv.back().value()));
                                    c.inputs.lists["captions"].push_back(to_mat(fc.back().value()));
                                  }
                                  c.engine["out"] = to_mat(loss_caption_clip(fv, fc).value());
                                  return c;
                                },
                                kTol};

  cases["loss_total"] = {[](std::mt19937_64& rng) {
                           std::uniform_real_distribution<double> u(0.0, 3.0);
                           Tape tape;
                           const double a = u(rng), b = u(rng), cc = u(rng);
                           const LossWeights w{u(rng), u(rng), u(rng)};
                           auto out = loss_total(tape.constant(Tensor::scalar(a)), tape.constant(Tensor::scalar(b)),
                                                 tape.constant(Tensor::scalar(cc)), w);
                           EngineCase c;
                           c.inputs.scalars = {{"l_qv", a}, {"l_qc", b}, {"l_cc", cc},
                                               {"w_qv", w.qv}, {"w_qc", w.qc}, {"w_cc", w.cc}};
                           c.engine["out"] = to_mat(out.value());
                           return c;
                         },
                         kLinearTol};

  return cases;
}

}  // namespace

const std::map<std::string, CaseSpec>& engine_cases() {
  static const auto cases = build_cases();
  return cases;
}

}  // namespace clipfilter::testing
