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

// Experiment runner: sketch-approximation curves and bandit regret curves,
// with CSV output.

#ifndef DBSKETCH_HARNESS_H_
#define DBSKETCH_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dbsketch/bandit.h"
#include "dbsketch/dyadic.h"
#include "dbsketch/environment.h"

namespace dbsketch {

enum class ExperimentKind { kApprox, kSynthetic, kWorstCase, kClassification };

std::string ToString(ExperimentKind kind);
// Accepts approx, synthetic, worst-case and classify (or classification).
ExperimentKind ParseExperimentKind(const std::string& name);

// Per-policy overrides; unset fields fall back to the config-wide values.
struct PolicySpec {
  PolicyKind kind = PolicyKind::kOFUL;
  std::string name;  // column prefix, defaults to the kind name
  std::optional<std::size_t> sketch_size;
  std::optional<std::size_t> l0;
  std::optional<double> epsilon;
  std::optional<double> lambda;
  std::optional<BetaMode> beta_mode;
  std::optional<double> beta;
  std::optional<double> delta;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kSynthetic;
  std::size_t d = 20;
  std::size_t T = 200;
  std::size_t K = 10;
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;
  std::size_t threads = 1;

  // Unset means every policy kind; an explicitly empty roster is rejected.
  std::optional<std::vector<PolicySpec>> policies;
  std::size_t sketch_size = 10;
  std::size_t l0 = 4;
  double epsilon = 2000.0;
  double lambda = 1.0;
  BetaMode beta_mode = BetaMode::kFixed;
  double beta = 0.1;
  double delta = 0.1;
  // Defaults to the standard path for approx runs and the fast path for
  // bandit runs.
  std::optional<UpdatePath> path;
  AlphaRule alpha_rule = AlphaRule::kFull;
  // Expand every policy over the beta and lambda grids.
  bool sweep = false;

  double noise = 0.1;         // R
  double context_norm = 1.0;  // L
  double weight_norm = 1.0;   // H
  bool normalize_arms = false;
  std::size_t rank = 0;       // synthetic: low-rank arms when > 0

  std::size_t r = 0;            // worst-case: 0 means d
  std::vector<double> weights;  // worst-case: empty means uniform

  std::string dataset;     // classify: CSV, or IDX images with idx_labels
  std::string idx_labels;
  int target_label = 0;

  // approx: gaussian, orthonormal or lowrank rows.
  std::string stream = "gaussian";
  bool normalize_rows = false;
  std::size_t dense_cap = 400;

  std::string output;

  void Validate() const;
};

ExperimentConfig ParseConfigJson(const std::string& text);
ExperimentConfig LoadConfigFile(const std::string& path);

inline const std::vector<double> kBetaGrid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
inline const std::vector<double> kLambdaGrid = {2e-4, 2e-3, 2e-2, 2e-1, 2.0,
                                                2e1,  2e2,  2e3,  2e4};

// Rows ordered by t; the first column is t.
struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t ColumnIndex(const std::string& name) const;
  std::vector<double> Column(const std::string& name) const;
};

// The roster after defaults and sweep expansion.
std::vector<PolicySpec> ResolveRoster(const ExperimentConfig& cfg);
PolicyOptions MakePolicyOptions(const ExperimentConfig& cfg,
                                const PolicySpec& spec, std::size_t dim);

// Environment for repetition `rep` (seeded from the master seed).
std::unique_ptr<Environment> MakeEnvironment(const ExperimentConfig& cfg,
                                             std::size_t rep);

// Row t of the approx stream.
Vector ApproxStreamRow(const ExperimentConfig& cfg, std::size_t t);

// Columns t, fd_time_ms, dbs_time_ms, fd_err, fd_bound, dbs_err, dbs_bound.
// The bound columns are the tracked shrink totals.
MetricsTable RunApproxExperiment(const ExperimentConfig& cfg);

// Columns t then <name>_regret, <name>_time_ms per policy: mean cumulative
// regret and mean cumulative milliseconds over the repetitions.
MetricsTable RunBanditExperiment(const ExperimentConfig& cfg);

MetricsTable RunExperiment(const ExperimentConfig& cfg);

// Header plus one line per row; %.10g numbers, LF line endings.
void EmitCsv(const MetricsTable& table, const std::string& path);
MetricsTable ParseCsv(const std::string& path);

}  // namespace dbsketch

#endif  // DBSKETCH_HARNESS_H_
