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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clipfilter/fixtures.hpp"
#include "clipfilter/pipeline.hpp"
#include "clipfilter/report.hpp"

namespace {

using namespace clipfilter;

enum ExitCode : int { kOk = 0, kUsage = 1, kFixture = 2, kNumerical = 3 };

struct Flags {
  std::string fixture;
  std::uint64_t seed = 0;
  std::size_t iters = kDefaultIterations;
  std::string fusion = "learned";
  std::string init = "identity";
  double lambda_qv = 0.3, lambda_qc = 0.5, lambda_cc = 1.5;
  std::size_t steps = 500;
  double lr = 0.05;
  std::string out;
};

void add_run_flags(CLI::App* cmd, Flags& f, bool training) {
  cmd->add_option("--fixture", f.fixture, "fixture file")->required();
  cmd->add_option("--seed", f.seed, "parameter seed");
  cmd->add_option("--iters", f.iters, "filtering iterations N");
  cmd->add_option("--fusion", f.fusion, "similarity fusion")->check(CLI::IsMember({"learned", "average"}));
  cmd->add_option("--init", f.init, "parameter initialization")->check(CLI::IsMember({"identity", "random"}));
  cmd->add_option("--lambda-qv", f.lambda_qv, "query-video loss weight");
  cmd->add_option("--lambda-qc", f.lambda_qc, "query-clip loss weight");
  cmd->add_option("--lambda-cc", f.lambda_cc, "caption-clip loss weight");
  if (training) {
    cmd->add_option("--steps", f.steps, "gradient steps");
    cmd->add_option("--lr", f.lr, "learning rate");
  }
  cmd->add_option("--out", f.out, "output path (default: stdout)");
}

RunConfig config_of(const Flags& f) {
  RunConfig c;
  c.fixture_path = f.fixture;
  c.seed = f.seed;
  c.iterations = f.iters;
  c.fusion = parse_fusion_mode(f.fusion);
  c.init = parse_init_mode(f.init);
  c.weights = {f.lambda_qv, f.lambda_qc, f.lambda_cc};
  c.train_steps = f.steps;
  c.learning_rate = f.lr;
  c.output_path = f.out;
  return c;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Important-word-aware clip filtering over feature fixtures"};
  app.require_subcommand(1);

  Flags run_flags, train_flags, sweep_flags;
  auto* run_cmd = app.add_subcommand("run", "forward pipeline and losses on a fixture");
  add_run_flags(run_cmd, run_flags, false);

  auto* train_cmd = app.add_subcommand("train", "full-batch gradient descent on the alignment loss");
  add_run_flags(train_cmd, train_flags, true);

  std::vector<std::size_t> n_values = {0, 1, 3, 5, 7};
  auto* sweep_cmd = app.add_subcommand("sweep-iters", "repeat run over several iteration counts");
  add_run_flags(sweep_cmd, sweep_flags, false);
  sweep_cmd->add_option("--n-values", n_values, "iteration counts")->delimiter(',');

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a fixture against the schema");
  validate_cmd->add_option("--fixture", validate_path, "fixture file")->required();

  SynthesisSpec syn;
  std::string syn_out;
  auto* syn_cmd = app.add_subcommand("synthesize", "write a synthetic fixture");
  syn_cmd->add_option("--seed", syn.seed, "generator seed");
  syn_cmd->add_option("--batch", syn.batch, "samples B");
  syn_cmd->add_option("--lq", syn.words, "query words L_q");
  syn_cmd->add_option("--lv", syn.clips, "clips L_v");
  syn_cmd->add_option("--lc", syn.tokens, "caption tokens L_c");
  syn_cmd->add_option("--dim", syn.dim, "feature dimension d");
  syn_cmd->add_option("--alignment", syn.alignment, "query/clip alignment in [0,1]")->check(CLI::Range(0.0, 1.0));
  syn_cmd->add_option("--out", syn_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) {
      auto config = config_of(run_flags);
      auto report = cmd_run(config);
      emit(serialize_report(report), run_flags.out);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
      std::cerr << "wall time: " << report.wall_seconds << " s\n";
    } else if (*train_cmd) {
      auto config = config_of(train_flags);
      auto result = cmd_train(config);
      emit(serialize_train(result), train_flags.out);
      std::cerr << "L_ma: " << result.loss_series.front() << " -> " << result.loss_series.back() << "\n";
    } else if (*sweep_cmd) {
      auto config = config_of(sweep_flags);
      auto rows = cmd_sweep_iters(config, n_values);
      emit(serialize_sweep(rows), sweep_flags.out);
      std::cerr << format_sweep_table(rows);
    } else if (*validate_cmd) {
      auto batch = load_fixture(validate_path);
      std::cout << "ok: " << batch.size() << " samples, d=" << batch.d << "\n";
    } else if (*syn_cmd) {
      save_fixture(synthesize(syn), syn_out);
    }
  } catch (const FixtureError& e) {
    std::cerr << "fixture error: " << e.what() << "\n";
    return kFixture;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kOk;
}
