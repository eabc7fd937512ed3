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

#include "dbsketch/harness.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace dbsketch {
namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string FormatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

BetaMode ParseBetaMode(const std::string& s) {
  if (s == "fixed") return BetaMode::kFixed;
  if (s == "theoretical") return BetaMode::kTheoretical;
  throw InvalidArgument("beta_mode must be 'fixed' or 'theoretical', got '" + s + "'");
}

UpdatePath ParsePath(const std::string& s) {
  if (s == "fast") return UpdatePath::kFast;
  if (s == "standard") return UpdatePath::kStandard;
  throw InvalidArgument("path must be 'fast' or 'standard', got '" + s + "'");
}

AlphaRule ParseAlphaRule(const std::string& s) {
  if (s == "full") return AlphaRule::kFull;
  if (s == "halved") return AlphaRule::kHalved;
  throw InvalidArgument("alpha_rule must be 'full' or 'halved', got '" + s + "'");
}

PolicySpec ParsePolicySpec(const nlohmann::json& j) {
  PolicySpec spec;
  if (j.is_string()) {
    spec.kind = ParsePolicyKind(j.get<std::string>());
    return spec;
  }
  bool has_kind = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      spec.kind = ParsePolicyKind(value.get<std::string>());
      has_kind = true;
    } else if (key == "name") {
      spec.name = value.get<std::string>();
    } else if (key == "sketch_size") {
      spec.sketch_size = value.get<std::size_t>();
    } else if (key == "l0") {
      spec.l0 = value.get<std::size_t>();
    } else if (key == "epsilon") {
      spec.epsilon = value.get<double>();
    } else if (key == "lambda") {
      spec.lambda = value.get<double>();
    } else if (key == "beta_mode") {
      spec.beta_mode = ParseBetaMode(value.get<std::string>());
    } else if (key == "beta") {
      spec.beta = value.get<double>();
    } else if (key == "delta") {
      spec.delta = value.get<double>();
    } else {
      throw InvalidArgument("unknown policy key '" + key + "'");
    }
  }
  if (!has_kind) throw InvalidArgument("policy entry without 'kind'");
  return spec;
}

// Cumulative regret and time for one repetition, [policy][t].
struct RepTrace {
  std::vector<std::vector<double>> regret;
  std::vector<std::vector<double>> time_ms;
};

RepTrace RunRepetition(const ExperimentConfig& cfg,
                       const std::vector<PolicySpec>& roster, std::size_t rep) {
  const auto env = MakeEnvironment(cfg, rep);
  std::vector<Policy> policies;
  policies.reserve(roster.size());
  for (const auto& spec : roster) {
    policies.emplace_back(MakePolicyOptions(cfg, spec, env->dim()));
  }
  RepTrace out;
  out.regret.assign(roster.size(), std::vector<double>(cfg.T));
  out.time_ms.assign(roster.size(), std::vector<double>(cfg.T));
  std::vector<double> regret(roster.size(), 0.0);
  std::vector<double> elapsed(roster.size(), 0.0);
  for (std::size_t t = 0; t < cfg.T; ++t) {
    const Round round = env->RoundAt(t);
    const double best = round.expected.maxCoeff();
    for (std::size_t p = 0; p < policies.size(); ++p) {
      const auto start = Clock::now();
      const Selection pick = policies[p].Select(round.arms);
      const auto i = static_cast<Eigen::Index>(pick.index);
      policies[p].Update(round.arms.row(i).transpose(), round.realized(i));
      elapsed[p] += ElapsedMs(start);
      regret[p] += std::max(0.0, best - round.expected(i));
      out.regret[p][t] = regret[p];
      out.time_ms[p][t] = elapsed[p];
    }
  }
  return out;
}

}  // namespace

std::string ToString(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kApprox: return "approx";
    case ExperimentKind::kSynthetic: return "synthetic";
    case ExperimentKind::kWorstCase: return "worst-case";
    case ExperimentKind::kClassification: return "classify";
  }
  return "unknown";
}

ExperimentKind ParseExperimentKind(const std::string& name) {
  if (name == "approx") return ExperimentKind::kApprox;
  if (name == "synthetic") return ExperimentKind::kSynthetic;
  if (name == "worst-case") return ExperimentKind::kWorstCase;
  if (name == "classify" || name == "classification") {
    return ExperimentKind::kClassification;
  }
  throw InvalidArgument("unknown experiment '" + name +
                        "' (expected approx, synthetic, worst-case or classify)");
}

void ExperimentConfig::Validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v < 1) throw InvalidArgument(std::string(what) + " must be >= 1");
  };
  positive(T, "T");
  positive(repetitions, "repetitions");
  positive(threads, "threads");
  positive(sketch_size, "sketch_size");
  positive(l0, "l0");
  if (experiment != ExperimentKind::kClassification) positive(d, "d");
  if (experiment == ExperimentKind::kSynthetic ||
      experiment == ExperimentKind::kWorstCase) {
    positive(K, "K");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0, 1)");
  if (!(noise >= 0.0)) throw InvalidArgument("noise must be >= 0");
  if (!(context_norm > 0.0)) throw InvalidArgument("context_norm must be positive");
  if (!(weight_norm >= 0.0)) throw InvalidArgument("weight_norm must be >= 0");
  if (policies && policies->empty()) throw InvalidArgument("policy roster is empty");
  if (rank > d) throw InvalidArgument("rank exceeds d");
  if (r > d) throw InvalidArgument("r exceeds d");
  if (experiment == ExperimentKind::kApprox) {
    if (d > dense_cap) {
      throw InvalidArgument("d = " + std::to_string(d) +
                            " exceeds the dense oracle cap " +
                            std::to_string(dense_cap));
    }
    if (stream != "gaussian" && stream != "orthonormal" && stream != "lowrank") {
      throw InvalidArgument("stream must be gaussian, orthonormal or lowrank");
    }
  }
  if (experiment == ExperimentKind::kClassification && dataset.empty()) {
    throw InvalidArgument("classify needs a dataset path");
  }
}

ExperimentConfig ParseConfigJson(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  ExperimentConfig cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "experiment") cfg.experiment = ParseExperimentKind(v.get<std::string>());
      else if (key == "d") cfg.d = v.get<std::size_t>();
      else if (key == "T") cfg.T = v.get<std::size_t>();
      else if (key == "K") cfg.K = v.get<std::size_t>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "repetitions") cfg.repetitions = v.get<std::size_t>();
      else if (key == "threads") cfg.threads = v.get<std::size_t>();
      else if (key == "policies") {
        std::vector<PolicySpec> roster;
        for (const auto& p : v) roster.push_back(ParsePolicySpec(p));
        cfg.policies = std::move(roster);
      }
      else if (key == "sketch_size") cfg.sketch_size = v.get<std::size_t>();
      else if (key == "l0") cfg.l0 = v.get<std::size_t>();
      else if (key == "epsilon") cfg.epsilon = v.get<double>();
      else if (key == "lambda") cfg.lambda = v.get<double>();
      else if (key == "beta_mode") cfg.beta_mode = ParseBetaMode(v.get<std::string>());
      else if (key == "beta") cfg.beta = v.get<double>();
      else if (key == "delta") cfg.delta = v.get<double>();
      else if (key == "path") cfg.path = ParsePath(v.get<std::string>());
      else if (key == "alpha_rule") cfg.alpha_rule = ParseAlphaRule(v.get<std::string>());
      else if (key == "sweep") cfg.sweep = v.get<bool>();
      else if (key == "noise") cfg.noise = v.get<double>();
      else if (key == "context_norm") cfg.context_norm = v.get<double>();
      else if (key == "weight_norm") cfg.weight_norm = v.get<double>();
      else if (key == "normalize_arms") cfg.normalize_arms = v.get<bool>();
      else if (key == "rank") cfg.rank = v.get<std::size_t>();
      else if (key == "r") cfg.r = v.get<std::size_t>();
      else if (key == "weights") cfg.weights = v.get<std::vector<double>>();
      else if (key == "dataset") cfg.dataset = v.get<std::string>();
      else if (key == "idx_labels") cfg.idx_labels = v.get<std::string>();
      else if (key == "target_label") cfg.target_label = v.get<int>();
      else if (key == "stream") cfg.stream = v.get<std::string>();
      else if (key == "normalize_rows") cfg.normalize_rows = v.get<bool>();
      else if (key == "dense_cap") cfg.dense_cap = v.get<std::size_t>();
      else if (key == "output") cfg.output = v.get<std::string>();
      else throw InvalidArgument("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfigJson(ss.str());
}

std::size_t MetricsTable::ColumnIndex(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw InvalidArgument("no column named '" + name + "'");
}

std::vector<double> MetricsTable::Column(const std::string& name) const {
  const std::size_t c = ColumnIndex(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

std::vector<PolicySpec> ResolveRoster(const ExperimentConfig& cfg) {
  std::vector<PolicySpec> base;
  if (cfg.policies) {
    base = *cfg.policies;
  } else {
    for (auto k : {PolicyKind::kOFUL, PolicyKind::kSOFUL, PolicyKind::kCBSCFD,
                   PolicyKind::kDBSLinUCBFD, PolicyKind::kDBSLinUCBRFD}) {
      PolicySpec spec;
      spec.kind = k;
      base.push_back(spec);
    }
  }
  if (base.empty()) throw InvalidArgument("policy roster is empty");
  for (auto& spec : base) {
    if (spec.name.empty()) spec.name = ToString(spec.kind);
  }
  if (!cfg.sweep) return base;
  std::vector<PolicySpec> out;
  for (const auto& spec : base) {
    for (double beta : kBetaGrid) {
      for (double lambda : kLambdaGrid) {
        PolicySpec s = spec;
        s.beta_mode = BetaMode::kFixed;
        s.beta = beta;
        s.lambda = lambda;
        s.name = spec.name + "(beta=" + FormatNumber(beta) +
                 ";lambda=" + FormatNumber(lambda) + ")";
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

PolicyOptions MakePolicyOptions(const ExperimentConfig& cfg,
                                const PolicySpec& spec, std::size_t dim) {
  PolicyOptions o;
  o.kind = spec.kind;
  o.dim = dim;
  o.lambda = spec.lambda.value_or(cfg.lambda);
  o.sketch_size = spec.sketch_size.value_or(cfg.sketch_size);
  o.l0 = spec.l0.value_or(cfg.l0);
  o.epsilon = spec.epsilon.value_or(cfg.epsilon);
  o.path = cfg.path.value_or(UpdatePath::kFast);
  o.alpha_rule = cfg.alpha_rule;
  o.beta.mode = spec.beta_mode.value_or(cfg.beta_mode);
  o.beta.fixed_value = spec.beta.value_or(cfg.beta);
  o.beta.delta = spec.delta.value_or(cfg.delta);
  o.bounds = Bounds{cfg.context_norm, cfg.weight_norm, cfg.noise};
  return o;
}

std::unique_ptr<Environment> MakeEnvironment(const ExperimentConfig& cfg,
                                             std::size_t rep) {
  const std::uint64_t seed = DeriveSeed(cfg.seed, rep);
  switch (cfg.experiment) {
    case ExperimentKind::kSynthetic: {
      GaussianOptions o;
      o.dim = cfg.d;
      o.arms = cfg.K;
      o.noise = cfg.noise;
      o.seed = seed;
      o.normalize_arms = cfg.normalize_arms;
      o.context_norm = cfg.context_norm;
      o.rank = cfg.rank;
      return std::make_unique<GaussianEnvironment>(o);
    }
    case ExperimentKind::kWorstCase: {
      OrthonormalOptions o;
      o.dim = cfg.d;
      o.arms = cfg.K;
      o.r = cfg.r == 0 ? cfg.d : cfg.r;
      o.weights = cfg.weights;
      o.noise = cfg.noise;
      o.seed = seed;
      return std::make_unique<OrthonormalEnvironment>(o);
    }
    case ExperimentKind::kClassification: {
      LabeledData data = cfg.idx_labels.empty()
                             ? LoadLabeledCsv(cfg.dataset)
                             : LoadIdx(cfg.dataset, cfg.idx_labels);
      ScaleToUnitMaxNorm(data);
      return std::make_unique<ClassificationEnvironment>(
          std::move(data), ClassificationOptions{cfg.target_label, seed});
    }
    case ExperimentKind::kApprox:
      break;
  }
  throw InvalidArgument("experiment '" + ToString(cfg.experiment) +
                        "' has no bandit environment");
}

Vector ApproxStreamRow(const ExperimentConfig& cfg, std::size_t t) {
  const auto d = static_cast<Eigen::Index>(cfg.d);
  std::mt19937_64 rng(DeriveSeed(cfg.seed, static_cast<std::uint64_t>(t) + 1));
  std::normal_distribution<double> normal;
  Vector x = Vector::Zero(d);
  if (cfg.stream == "orthonormal") {
    const std::size_t r = cfg.r == 0 ? cfg.d : cfg.r;
    std::uniform_int_distribution<std::size_t> pick(0, r - 1);
    x(static_cast<Eigen::Index>(pick(rng))) = 1.0;
  } else if (cfg.stream == "lowrank") {
    // Rows lie in the span of the first `rank` columns of a fixed rotation.
    const auto k = static_cast<Eigen::Index>(
        cfg.rank > 0 ? cfg.rank : std::min<std::size_t>(10, cfg.d));
    static thread_local std::uint64_t cached_seed = ~std::uint64_t{0};
    static thread_local Matrix basis;
    if (cached_seed != cfg.seed || basis.rows() != d || basis.cols() != k) {
      std::mt19937_64 brng(DeriveSeed(cfg.seed, 0));
      Matrix g(d, k);
      for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(brng);
      Eigen::HouseholderQR<Matrix> qr(g);
      basis = qr.householderQ() * Matrix::Identity(d, k);
      cached_seed = cfg.seed;
    }
    Vector z(k);
    for (Eigen::Index i = 0; i < k; ++i) z(i) = normal(rng);
    x = basis * z;
  } else {
    for (Eigen::Index i = 0; i < d; ++i) x(i) = normal(rng);
  }
  if (cfg.normalize_rows && x.norm() > 0.0) x.normalize();
  return x;
}

MetricsTable RunApproxExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();
  if (cfg.experiment != ExperimentKind::kApprox) {
    throw InvalidArgument("RunApproxExperiment: config is not an approx run");
  }
  const auto d = static_cast<Eigen::Index>(cfg.d);
  SketchState fd(SketchOptions{SketchKind::kFD, cfg.sketch_size, cfg.d,
                               cfg.lambda, cfg.alpha_rule});
  DyadicSketch dbs(DyadicOptions{cfg.d, cfg.l0, cfg.epsilon, cfg.lambda,
                                 SketchKind::kFD, cfg.alpha_rule,
                                 cfg.path.value_or(UpdatePath::kStandard)});
  Matrix gram = Matrix::Zero(d, d);
  MetricsTable table;
  table.columns = {"t",      "fd_time_ms", "dbs_time_ms", "fd_err",
                   "fd_bound", "dbs_err",  "dbs_bound"};
  double fd_ms = 0.0;
  double dbs_ms = 0.0;
  for (std::size_t t = 0; t < cfg.T; ++t) {
    const Vector x = ApproxStreamRow(cfg, t);
    gram.noalias() += x * x.transpose();
    auto start = Clock::now();
    fd.Update(x);
    fd_ms += ElapsedMs(start);
    start = Clock::now();
    dbs.Update(x);
    dbs_ms += ElapsedMs(start);

    const double fd_err = SymmetricEigenRange(gram - fd.ApproxGram()).abs_max();
    const double dbs_err = SymmetricEigenRange(gram - dbs.ApproxGram()).abs_max();
    const auto sums = dbs.shrink_sums();
    const double dbs_bound = std::accumulate(sums.begin(), sums.end(), 0.0);
    table.rows.push_back({static_cast<double>(t + 1), fd_ms, dbs_ms, fd_err,
                          fd.shrink_total(), dbs_err, dbs_bound});
  }
  return table;
}

MetricsTable RunBanditExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();
  const std::vector<PolicySpec> roster = ResolveRoster(cfg);
  std::vector<RepTrace> traces(cfg.repetitions);
  const std::size_t workers = std::min(cfg.threads, cfg.repetitions);
  if (workers <= 1) {
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      traces[rep] = RunRepetition(cfg, roster, rep);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t rep = next++; rep < cfg.repetitions; rep = next++) {
            traces[rep] = RunRepetition(cfg, roster, rep);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  MetricsTable table;
  table.columns.push_back("t");
  for (const auto& spec : roster) {
    table.columns.push_back(spec.name + "_regret");
    table.columns.push_back(spec.name + "_time_ms");
  }
  const double reps = static_cast<double>(cfg.repetitions);
  for (std::size_t t = 0; t < cfg.T; ++t) {
    std::vector<double> row{static_cast<double>(t + 1)};
    for (std::size_t p = 0; p < roster.size(); ++p) {
      double regret = 0.0;
      double ms = 0.0;
      // Merge in repetition order so the sums do not depend on scheduling.
      for (const auto& trace : traces) {
        regret += trace.regret[p][t];
        ms += trace.time_ms[p][t];
      }
      row.push_back(regret / reps);
      row.push_back(ms / reps);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

MetricsTable RunExperiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == ExperimentKind::kApprox) return RunApproxExperiment(cfg);
  return RunBanditExperiment(cfg);
}

void EmitCsv(const MetricsTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw InvalidArgument("EmitCsv: row has " + std::to_string(row.size()) +
                            " values for " + std::to_string(table.columns.size()) +
                            " columns");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << FormatNumber(row[i]);
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

MetricsTable ParseCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read '" + path + "'");
  MetricsTable table;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("'" + path + "' is empty");
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) table.columns.push_back(field);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (row.size() != table.columns.size()) {
      throw InvalidArgument("'" + path + "': row with " +
                            std::to_string(row.size()) + " fields");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace dbsketch
