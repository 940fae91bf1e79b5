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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "cases.hpp"
#include "clipfilter/report.hpp"
#include "gradcheck.hpp"

using namespace clipfilter;
using namespace clipfilter::testing;

namespace {

// Pinned thresholds.
constexpr int kOracleInstances = 100;
constexpr double kOracleBudgetSeconds = 60.0;
constexpr int kGradBatches = 10;
constexpr double kGradRelTol = 1e-5;
constexpr double kGradBudgetSeconds = 120.0;
constexpr int kFilterInstances = 100;
constexpr double kClosedFormTol = 1e-12;
constexpr int kStochasticInstances = 100;
constexpr double kSoftmaxSumTol = 1e-9;
constexpr double kPoolSumTol = 1e-12;
constexpr double kDegenerateZeroTol = 1e-12;
constexpr double kTwoLn2Tol = 1e-9;
constexpr std::size_t kTrainSteps = 500;
constexpr double kTrainLearningRate = 0.05;
constexpr double kRequiredReduction = 0.5;
constexpr std::size_t kRequiredMatched = 3;
constexpr double kTrainBudgetSeconds = 300.0;

const std::filesystem::path kData = CLIPFILTER_TEST_DATA;

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20260101);
  bool ok = true;
  std::string worst_op;
  double worst_ratio = 0.0;
  for (const auto& [name, spec] : engine_cases()) {
    for (int rep = 0; rep < kOracleInstances; ++rep) {
      auto c = spec.make(rng);
      const double diff = oracle::oracle_for(name, c.inputs).max_abs_diff(c.engine);
      if (!(diff <= spec.tolerance)) ok = false;
      if (diff / spec.tolerance > worst_ratio) worst_ratio = diff / spec.tolerance, worst_op = name;
    }
  }
  const double secs = since(start);
  ok = ok && secs < kOracleBudgetSeconds;
  return {ok, std::to_string(engine_cases().size()) + " ops x " + std::to_string(kOracleInstances) +
                  ", worst diff/tol " + fmt(worst_ratio) + " (" + worst_op + "), " + fmt(secs) + " s"};
}

Outcome gradient_correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(777);
  double worst = 0.0, worst_leaf = 0.0;
  std::string where;
  for (int b = 0; b < kGradBatches; ++b) {
    auto batch = random_batch(rng, 3, 3, 3, 2, 4);
    auto params = init_params(batch.d, InitMode::random, rng());
    ForwardOptions opts;
    opts.fusion = b % 2 ? FusionMode::average : FusionMode::learned;
    auto check = gradient_check(batch, params, opts);
    worst = std::max(worst, check.overall());
    if (check.worst() > worst_leaf) worst_leaf = check.worst(), where = check.worst_leaf();
  }
  const double secs = since(start);
  return {worst <= kGradRelTol && secs < kGradBudgetSeconds,
          "worst relative error " + fmt(worst) + " over all leaves (per-leaf diagnostic " + fmt(worst_leaf) +
              " at " + where + "), " + fmt(secs) + " s"};
}

Outcome filter_identity() {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> u(-1, 1);
  bool identity = true, zero = true;
  double worst = 0.0;
  for (int rep = 0; rep < kFilterInstances; ++rep) {
    const auto lv = extent(rng, 1, 8), lq = extent(rng, 1, 8), d = extent(rng, 1, 8);
    Tape tape;
    auto ev = tape.constant(random_tensor(rng, {lv, d}));
    Tensor s(Shape{lv, lq});
    for (auto& v : s.data()) v = u(rng);
    WordHighlight h;
    h.valid = random_mask(rng, lq);
    for (std::size_t k = 0; k < lq; ++k) h.scores.push_back(u(rng));
    h.order = rank_descending(h.scores, h.valid);
    const auto n = extent(rng, 1, count_valid(h.valid));

    identity = identity && iterative_filter(ev, tape.constant(s), h, 0).f_fv.value() == ev.value();
    zero = zero && iterative_filter(ev, tape.constant(Tensor(Shape{lv, lq})), h, n).f_fv.value() == ev.value();
    auto r = iterative_filter(ev, tape.constant(s), h, n);
    auto closed = oracle::filter_closed_form(to_mat(ev.value()), to_mat(s), r.selected_words);
    worst = std::max(worst, max_abs_diff(r.f_fv.value(), Tensor::from_rows(closed)));
  }
  return {identity && zero && worst <= kClosedFormTol,
          std::string("N=0 exact: ") + (identity ? "yes" : "no") + ", zero columns exact: " + (zero ? "yes" : "no") +
              ", closed form worst " + fmt(worst)};
}

Outcome stochasticity() {
  std::mt19937_64 rng(4242);
  double soft = 0.0, pool = 0.0;
  std::size_t envelope_breaks = 0;
  for (int rep = 0; rep < kStochasticInstances; ++rep) {
    auto batch = random_batch(rng, 1, 8, 8, 8, 8);
    const auto& s = batch.samples[0];
    Tape tape;
    auto p = bind(tape, init_params(batch.d, InitMode::random, rng()), false);
    auto pooled = pool_captions(tape.constant(s.query), tape.constant(s.captions), s.query_valid, s.caption_valid);
    const auto& w = pooled.weights.value();
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double t = 0.0;
      for (std::size_t k = 0; k < w.cols(); ++k) t += w(i, k);
      pool = std::max(pool, std::abs(t - 1.0));
    }
    auto fem = fem_forward(tape.constant(s.query), tape.constant(s.visual), pooled.features, s.query_valid, p.fem);
    for (const auto* m : {&fem.a_vq_row, &fem.a_cq_row}) {
      const auto& a = m->value();
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double t = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) t += a(i, j);
        soft = std::max(soft, std::abs(t - 1.0));
      }
    }
    for (const auto* m : {&fem.a_vq_col, &fem.a_cq_col}) {
      const auto& a = m->value();
      for (std::size_t j = 0; j < a.cols(); ++j) {
        double t = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, j);
        soft = std::max(soft, std::abs(t - 1.0));
      }
    }
    std::normal_distribution<double> normal(0.0, 3.0);
    FusionGate gate{FusionMode::learned, {tape.constant(Tensor::vector({normal(rng), normal(rng)})),
                                          tape.constant(Tensor::vector({normal(rng)}))}};
    auto rel = relevance_similarities(fem.f_ev, fem.f_ec, fem.f_eq, s.query_valid);
    auto fused = fuse(rel.s_qv, rel.s_qc, gate).value();
    for (std::size_t i = 0; i < fused.size(); ++i) {
      const double a = rel.s_qv.value()[i], b = rel.s_qc.value()[i];
      if (fused[i] < std::min(a, b) || fused[i] > std::max(a, b)) ++envelope_breaks;
    }
  }
  return {soft <= kSoftmaxSumTol && pool <= kPoolSumTol && envelope_breaks == 0,
          "softmax sum dev " + fmt(soft) + ", pooling sum dev " + fmt(pool) + ", envelope breaks " +
              std::to_string(envelope_breaks)};
}

Outcome degenerate_losses() {
  std::mt19937_64 rng(99);
  double worst_zero = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    auto batch = random_batch(rng, 1, 6, 4, 3, 5);
    auto params = init_params(batch.d, InitMode::random, rng());
    auto losses = evaluate_losses(batch, params, ForwardOptions{});
    worst_zero = std::max({worst_zero, std::abs(losses.l_qv), std::abs(losses.l_cc)});
  }
  Tape tape;
  const double bce = loss_query_clip(tape.constant(Tensor(Shape{2, 1})), {1, 1}, {1}).value().item();
  const double dev = std::abs(bce - 2.0 * std::log(2.0));
  return {worst_zero <= kDegenerateZeroTol && dev <= kTwoLn2Tol,
          "B=1 worst |L_qv|,|L_cc| " + fmt(worst_zero) + ", |L_qc - 2 ln 2| " + fmt(dev)};
}

Outcome toy_training() {
  const auto start = Clock::now();
  auto batch = synthesize({.seed = 7, .batch = 4, .words = 4, .clips = 6, .tokens = 2, .dim = 8, .alignment = 0.9});
  RunConfig cfg;
  cfg.train_steps = kTrainSteps;
  cfg.learning_rate = kTrainLearningRate;
  auto result = train(batch, init_params(batch.d, cfg.init, cfg.seed), cfg);
  const double first = result.loss_series.front(), last = result.loss_series.back();
  const double reduction = 1.0 - last / first;
  const auto matched = matched_pairs_on_top(query_video_similarity(batch, result.params));
  const double secs = since(start);
  return {reduction >= kRequiredReduction && matched >= kRequiredMatched && secs < kTrainBudgetSeconds,
          "L_ma " + fmt(first) + " -> " + fmt(last) + " (reduction " + fmt(100.0 * reduction) + "%, need " +
              fmt(100.0 * kRequiredReduction) + "%), matched pairs " + std::to_string(matched) + "/" +
              std::to_string(batch.size()) + ", " + fmt(secs) + " s"};
}

Outcome iteration_sweep() {
  RunConfig cfg;
  cfg.fixture_path = kData / "positive.json";
  const std::vector<std::size_t> grid = {0, 1, 3, 5, 7};

  // precondition of the fixture: every fused similarity is positive
  auto batch = load_fixture(cfg.fixture_path);
  auto params = init_params(batch.d, cfg.init, cfg.seed);
  Tape tape;
  auto fwd = forward_batch(tape, batch, bind(tape, params, false), ForwardOptions{});
  bool positive = true;
  for (const auto& s : fwd.samples)
    for (double v : s.rfm.s_qvc.value().values()) positive = positive && v > 0.0;

  auto a = cmd_sweep_iters(cfg, grid);
  auto b = cmd_sweep_iters(cfg, grid);
  const bool same = serialize_sweep(a) == serialize_sweep(b);
  bool increasing = true;
  std::string series;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i && !(a[i].mean_filtered_l1 > a[i - 1].mean_filtered_l1)) increasing = false;
    series += (i ? ", " : "") + fmt(a[i].mean_filtered_l1);
  }
  return {positive && same && increasing, std::string("similarities positive: ") + (positive ? "yes" : "no") +
                                              ", deterministic: " + (same ? "yes" : "no") + ", L1 " + series};
}

Outcome determinism() {
  const auto fixture = std::filesystem::temp_directory_path() / "clipfilter_acceptance_det.json";
  save_fixture(synthesize({.seed = 13, .batch = 3, .words = 5, .clips = 4, .tokens = 3, .dim = 6, .alignment = 0.5}),
               fixture);
  RunConfig cfg;
  cfg.fixture_path = fixture;
  cfg.init = InitMode::random;
  cfg.seed = 17;
  const auto a = serialize_report(cmd_run(cfg));
  const auto b = serialize_report(cmd_run(cfg));
  std::filesystem::remove(fixture);
  return {a == b, std::to_string(a.size()) + " report bytes, identical: " + (a == b ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle_equivalence", oracle_equivalence}, {"gradient_correctness", gradient_correctness},
      {"filter_identity", filter_identity},       {"stochasticity", stochasticity},
      {"degenerate_losses", degenerate_losses},   {"toy_training", toy_training},
      {"iteration_sweep", iteration_sweep},       {"determinism", determinism}};

  CLI::App app{"clipfilter acceptance checks"};
  std::string only;
  app.add_option("--criterion", only, "run a single criterion");
  CLI11_PARSE(app, argc, argv);

  bool all = true, found = false;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && only != name) continue;
    found = true;
    Outcome o{false, ""};
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    all = all && o.pass;
  }
  if (!found) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return all ? 0 : 1;
}
