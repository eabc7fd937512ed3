// Copyright 2026 The dbsketch Authors.
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

// dbsketch run --experiment approx|synthetic|worst-case|classify [flags]
// dbsketch run --config experiment.json [flags]
//
// Flags given on the command line override the config file.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dbsketch/harness.h"

namespace {

template <typename T>
void Override(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming sketches and sketched linear bandits"};
  app.require_subcommand(1);
  CLI::App* run = app.add_subcommand("run", "Run one experiment and write a CSV");

  std::string config_path;
  std::optional<std::string> experiment;
  std::optional<std::size_t> d, T, K, l0, sketch_size, reps, threads, rank, r;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon, lambda, beta, delta, noise;
  std::optional<std::string> out, policies, path, dataset, idx_labels, stream;
  std::optional<int> target;
  bool theoretical = false;
  bool sweep = false;
  bool normalize_rows = false;

  run->add_option("--config", config_path, "JSON experiment config");
  run->add_option("--experiment", experiment,
                  "approx, synthetic, worst-case or classify");
  run->add_option("--d", d, "Dimension");
  run->add_option("--T", T, "Horizon / stream length");
  run->add_option("--K", K, "Arms per round");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--epsilon", epsilon, "Dyadic error parameter");
  run->add_option("--l0", l0, "Initial dyadic sketch length");
  run->add_option("--sketch-size", sketch_size, "Single-sketch length");
  run->add_option("--lambda", lambda, "Ridge regularizer");
  run->add_option("--beta", beta, "Fixed exploration radius");
  run->add_option("--delta", delta, "Confidence level for theoretical beta");
  run->add_option("--reps", reps, "Repetitions");
  run->add_option("--threads", threads, "Worker threads for repetitions");
  run->add_option("--noise", noise, "Reward noise standard deviation");
  run->add_option("--rank", rank, "Low-rank arms / stream rank");
  run->add_option("--r", r, "Orthonormal directions for worst-case runs");
  run->add_option("--policies", policies, "Comma-separated policy roster");
  run->add_option("--path", path, "Dyadic update path: fast or standard");
  run->add_option("--stream", stream, "approx rows: gaussian, orthonormal, lowrank");
  run->add_option("--dataset", dataset, "classify: CSV file or IDX images");
  run->add_option("--idx-labels", idx_labels, "classify: IDX label file");
  run->add_option("--target", target, "classify: rewarded label");
  run->add_flag("--theoretical-beta", theoretical, "Use the confidence radius");
  run->add_flag("--sweep", sweep, "Expand policies over beta and lambda grids");
  run->add_flag("--normalize-rows", normalize_rows, "approx: unit-norm rows");
  run->add_option("--out", out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    dbsketch::ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = dbsketch::LoadConfigFile(config_path);
    } else if (!experiment) {
      throw dbsketch::InvalidArgument("run needs --config or --experiment");
    }
    if (experiment) cfg.experiment = dbsketch::ParseExperimentKind(*experiment);
    Override(d, cfg.d);
    Override(T, cfg.T);
    Override(K, cfg.K);
    Override(seed, cfg.seed);
    Override(epsilon, cfg.epsilon);
    Override(l0, cfg.l0);
    Override(sketch_size, cfg.sketch_size);
    Override(lambda, cfg.lambda);
    Override(beta, cfg.beta);
    Override(delta, cfg.delta);
    Override(reps, cfg.repetitions);
    Override(threads, cfg.threads);
    Override(noise, cfg.noise);
    Override(rank, cfg.rank);
    Override(r, cfg.r);
    Override(stream, cfg.stream);
    Override(dataset, cfg.dataset);
    Override(idx_labels, cfg.idx_labels);
    Override(target, cfg.target_label);
    Override(out, cfg.output);
    if (path) {
      if (*path == "fast") cfg.path = dbsketch::UpdatePath::kFast;
      else if (*path == "standard") cfg.path = dbsketch::UpdatePath::kStandard;
      else throw dbsketch::InvalidArgument("--path must be fast or standard");
    }
    if (policies) {
      std::vector<dbsketch::PolicySpec> roster;
      std::stringstream ss(*policies);
      std::string name;
      while (std::getline(ss, name, ',')) {
        if (!name.empty()) roster.push_back({dbsketch::ParsePolicyKind(name)});
      }
      cfg.policies = std::move(roster);
    }
    if (theoretical) cfg.beta_mode = dbsketch::BetaMode::kTheoretical;
    if (sweep) cfg.sweep = true;
    if (normalize_rows) cfg.normalize_rows = true;
    if (cfg.output.empty()) throw dbsketch::InvalidArgument("no output path (--out)");

    const dbsketch::MetricsTable table = dbsketch::RunExperiment(cfg);
    dbsketch::EmitCsv(table, cfg.output);
    std::cout << "wrote " << table.rows.size() << " rows to " << cfg.output << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "dbsketch: " << e.what() << "\n";
    return 1;
  }
}
