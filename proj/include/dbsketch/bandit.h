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

// Linear UCB policies over exact, single-sketch and dyadic covariances.
//
// Every policy keeps b = sum r_s x_s exactly and recomputes
// theta_hat = A^{-1} b after each update, where A is lambda I + X^T X (OFUL)
// or its sketched approximation. The arm chosen in a round maximizes
// x^T theta_hat + beta * sqrt(x^T A^{-1} x); ties go to the lowest index.

#ifndef DBSKETCH_BANDIT_H_
#define DBSKETCH_BANDIT_H_

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "dbsketch/dyadic.h"
#include "dbsketch/numerics.h"
#include "dbsketch/sketch.h"

namespace dbsketch {

class Environment;

enum class PolicyKind { kOFUL, kSOFUL, kCBSCFD, kDBSLinUCBFD, kDBSLinUCBRFD };

std::string ToString(PolicyKind kind);
PolicyKind ParsePolicyKind(const std::string& name);

enum class BetaMode { kTheoretical, kFixed };

struct BetaConfig {
  BetaMode mode = BetaMode::kFixed;
  double delta = 0.1;
  double fixed_value = 0.1;

  void Validate() const;
};

struct Bounds {
  double context_norm = 1.0;  // L
  double weight_norm = 1.0;   // H
  double noise = 0.1;         // R
};

// Inputs shared by both confidence radii.
struct BetaInputs {
  std::size_t dim = 1;
  std::size_t t = 0;
  double lambda = 1.0;
  double delta = 0.1;
  Bounds bounds;
};

// R sqrt(1 + S/lambda) sqrt(2 ln(1/delta) + d ln(1 + S/lambda)
//   + 2l ln(1 + t L^2 / (2 l lambda))) + H (lambda + S) / sqrt(lambda),
// with S the sum of the per-block shrink totals.
double BetaFd(const BetaInputs& in, const std::vector<double>& shrink_sums,
              std::size_t l_active);

// h = S - sum(l_i s_i) / (2l);
// R sqrt(2 ln(1/delta) + d ln(1 + S/lambda)
//   + 2l ln(1 + t L^2 / (2 l lambda) + h / lambda)) + H sqrt(lambda + S).
double BetaRfd(const BetaInputs& in, const std::vector<double>& shrink_sums,
               const std::vector<std::size_t>& block_lengths,
               std::size_t l_active);

struct PolicyOptions {
  PolicyKind kind = PolicyKind::kOFUL;
  std::size_t dim = 1;
  double lambda = 1.0;
  std::size_t sketch_size = 10;  // SOFUL / CBSCFD
  std::size_t l0 = 16;           // DBSLinUCB
  double epsilon = 2000.0;       // DBSLinUCB
  UpdatePath path = UpdatePath::kFast;
  AlphaRule alpha_rule = AlphaRule::kFull;
  BetaConfig beta;
  Bounds bounds;
};

struct Selection {
  std::size_t index = 0;
  double score = 0.0;
};

struct ArmRound {
  Matrix arms;  // K x d, one arm per row
  std::size_t chosen_index = 0;
  double reward = 0.0;
  double instant_regret = 0.0;
};

class Policy {
 public:
  explicit Policy(const PolicyOptions& options);

  // `arms` holds one arm per row.
  Selection Select(const Matrix& arms) const;
  void Update(const Vector& arm, double reward);

  double Beta() const;
  // A^{-1} v and one x^T A^{-1} x per row of `arms`.
  Vector ApplyInverse(const Vector& v) const;
  Vector InverseQuadratics(const Matrix& arms) const;

  const PolicyOptions& options() const { return options_; }
  PolicyKind kind() const { return options_.kind; }
  const Vector& b() const { return b_; }
  const Vector& theta_hat() const { return theta_hat_; }
  std::size_t t() const { return t_; }

  // Null unless the policy has that covariance.
  const DenseCovariance* dense() const;
  const SketchState* sketch() const;
  const DyadicSketch* dyadic() const;

 private:
  PolicyOptions options_;
  std::variant<DenseCovariance, SketchState, DyadicSketch> cov_;
  Vector b_;
  Vector theta_hat_;
  std::size_t t_ = 0;
};

// Runs `rounds` select/observe/update steps against `env`, starting at the
// environment's round 0.
std::vector<ArmRound> RunPolicy(Policy& policy, const Environment& env,
                                std::size_t rounds);

}  // namespace dbsketch

#endif  // DBSKETCH_BANDIT_H_
