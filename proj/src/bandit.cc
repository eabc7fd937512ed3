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

#include "dbsketch/bandit.h"

#include <cmath>
#include <numeric>

#include "dbsketch/environment.h"

namespace dbsketch {
namespace {

void CheckBetaInputs(const BetaInputs& in, std::size_t l_active) {
  if (!(in.delta > 0.0 && in.delta < 1.0)) {
    throw InvalidArgument("beta: delta must lie in (0, 1), got " +
                          std::to_string(in.delta));
  }
  if (!(in.lambda > 0.0)) throw InvalidArgument("beta: lambda must be positive");
  if (l_active < 1) throw InvalidArgument("beta: sketch length must be >= 1");
}

double Sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

std::variant<DenseCovariance, SketchState, DyadicSketch> MakeCovariance(
    const PolicyOptions& o) {
  switch (o.kind) {
    case PolicyKind::kOFUL:
      return DenseCovariance(o.dim, o.lambda);
    case PolicyKind::kSOFUL:
    case PolicyKind::kCBSCFD:
      return SketchState(SketchOptions{
          o.kind == PolicyKind::kSOFUL ? SketchKind::kFD : SketchKind::kRFD,
          o.sketch_size, o.dim, o.lambda, o.alpha_rule});
    case PolicyKind::kDBSLinUCBFD:
    case PolicyKind::kDBSLinUCBRFD:
      return DyadicSketch(DyadicOptions{
          o.dim, o.l0, o.epsilon, o.lambda,
          o.kind == PolicyKind::kDBSLinUCBFD ? SketchKind::kFD : SketchKind::kRFD,
          o.alpha_rule, o.path});
  }
  throw InvalidArgument("unknown policy kind");
}

}  // namespace

std::string ToString(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kOFUL: return "OFUL";
    case PolicyKind::kSOFUL: return "SOFUL";
    case PolicyKind::kCBSCFD: return "CBSCFD";
    case PolicyKind::kDBSLinUCBFD: return "DBSLinUCB-FD";
    case PolicyKind::kDBSLinUCBRFD: return "DBSLinUCB-RFD";
  }
  return "unknown";
}

PolicyKind ParsePolicyKind(const std::string& name) {
  for (auto k : {PolicyKind::kOFUL, PolicyKind::kSOFUL, PolicyKind::kCBSCFD,
                 PolicyKind::kDBSLinUCBFD, PolicyKind::kDBSLinUCBRFD}) {
    if (ToString(k) == name) return k;
  }
  throw InvalidArgument("unknown policy '" + name +
                        "' (expected OFUL, SOFUL, CBSCFD, DBSLinUCB-FD or "
                        "DBSLinUCB-RFD)");
}

void BetaConfig::Validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("beta delta must lie in (0, 1), got " +
                          std::to_string(delta));
  }
  if (!(fixed_value > 0.0)) {
    throw InvalidArgument("fixed beta must be positive, got " +
                          std::to_string(fixed_value));
  }
}

double BetaFd(const BetaInputs& in, const std::vector<double>& shrink_sums,
              std::size_t l_active) {
  CheckBetaInputs(in, l_active);
  const double s = Sum(shrink_sums);
  const double lam = in.lambda;
  const double l = static_cast<double>(l_active);
  const double d = static_cast<double>(in.dim);
  const double t = static_cast<double>(in.t);
  const double big_l = in.bounds.context_norm;
  const double inner = 2.0 * std::log(1.0 / in.delta) + d * std::log1p(s / lam) +
                       2.0 * l * std::log1p(t * big_l * big_l / (2.0 * l * lam));
  return in.bounds.noise * std::sqrt(1.0 + s / lam) * std::sqrt(inner) +
         in.bounds.weight_norm * (lam + s) / std::sqrt(lam);
}

double BetaRfd(const BetaInputs& in, const std::vector<double>& shrink_sums,
               const std::vector<std::size_t>& block_lengths,
               std::size_t l_active) {
  CheckBetaInputs(in, l_active);
  if (shrink_sums.size() != block_lengths.size()) {
    throw InvalidArgument("BetaRfd: " + std::to_string(shrink_sums.size()) +
                          " shrink sums for " +
                          std::to_string(block_lengths.size()) + " blocks");
  }
  const double s = Sum(shrink_sums);
  const double lam = in.lambda;
  const double l = static_cast<double>(l_active);
  const double d = static_cast<double>(in.dim);
  const double t = static_cast<double>(in.t);
  const double big_l = in.bounds.context_norm;
  double weighted = 0.0;
  for (std::size_t i = 0; i < shrink_sums.size(); ++i) {
    weighted += static_cast<double>(block_lengths[i]) * shrink_sums[i];
  }
  const double h = s - weighted / (2.0 * l);
  const double inner =
      2.0 * std::log(1.0 / in.delta) + d * std::log1p(s / lam) +
      2.0 * l * std::log1p(t * big_l * big_l / (2.0 * l * lam) + h / lam);
  return in.bounds.noise * std::sqrt(inner) +
         in.bounds.weight_norm * std::sqrt(lam + s);
}

Policy::Policy(const PolicyOptions& options)
    : options_(options), cov_(MakeCovariance(options)) {
  options.beta.Validate();
  b_ = Vector::Zero(static_cast<Eigen::Index>(options.dim));
  theta_hat_ = b_;
}

const DenseCovariance* Policy::dense() const {
  return std::get_if<DenseCovariance>(&cov_);
}
const SketchState* Policy::sketch() const {
  return std::get_if<SketchState>(&cov_);
}
const DyadicSketch* Policy::dyadic() const {
  return std::get_if<DyadicSketch>(&cov_);
}

double Policy::Beta() const {
  if (options_.beta.mode == BetaMode::kFixed) return options_.beta.fixed_value;
  const BetaInputs in{options_.dim, t_, options_.lambda, options_.beta.delta,
                      options_.bounds};
  switch (options_.kind) {
    case PolicyKind::kOFUL:
      // Exact covariance: no shrinkage and l = d / 2, so 2l = d.
      return BetaFd(in, {}, std::max<std::size_t>(1, options_.dim / 2));
    case PolicyKind::kSOFUL:
      return BetaFd(in, {sketch()->shrink_total()}, sketch()->capacity());
    case PolicyKind::kCBSCFD:
      return BetaRfd(in, {sketch()->shrink_total()}, {sketch()->capacity()},
                     sketch()->capacity());
    case PolicyKind::kDBSLinUCBFD:
      return BetaFd(in, dyadic()->shrink_sums(), dyadic()->active_block().length);
    case PolicyKind::kDBSLinUCBRFD:
      return BetaRfd(in, dyadic()->shrink_sums(), dyadic()->block_lengths(),
                     dyadic()->active_block().length);
  }
  return 0.0;
}

Vector Policy::ApplyInverse(const Vector& v) const {
  return std::visit([&](const auto& c) { return c.ApplyInverse(v); }, cov_);
}

Vector Policy::InverseQuadratics(const Matrix& arms) const {
  if (const auto* d = dense()) {
    const Matrix xa = arms * d->inverse();
    return xa.cwiseProduct(arms).rowwise().sum().cwiseMax(0.0);
  }
  if (const auto* s = sketch()) {
    Vector out(arms.rows());
    for (Eigen::Index i = 0; i < arms.rows(); ++i) {
      out(i) = s->InverseQuadratic(arms.row(i).transpose());
    }
    return out;
  }
  return dyadic()->InverseQuadratics(arms);
}

Selection Policy::Select(const Matrix& arms) const {
  if (arms.rows() == 0) throw InvalidArgument("Select: empty arm set");
  if (static_cast<std::size_t>(arms.cols()) != options_.dim) {
    throw InvalidArgument("Select: arms have dimension " +
                          std::to_string(arms.cols()) + ", policy expects " +
                          std::to_string(options_.dim));
  }
  const double beta = Beta();
  const Vector widths = InverseQuadratics(arms).cwiseSqrt();
  const Vector means = arms * theta_hat_;
  Selection best{0, means(0) + beta * widths(0)};
  for (Eigen::Index i = 1; i < arms.rows(); ++i) {
    const double score = means(i) + beta * widths(i);
    if (score > best.score) best = {static_cast<std::size_t>(i), score};
  }
  return best;
}

void Policy::Update(const Vector& arm, double reward) {
  if (static_cast<std::size_t>(arm.size()) != options_.dim) {
    throw InvalidArgument("Policy::Update: arm has dimension " +
                          std::to_string(arm.size()) + ", policy expects " +
                          std::to_string(options_.dim));
  }
  if (!std::isfinite(reward)) throw InvalidArgument("Policy::Update: reward is not finite");
  if (auto* d = std::get_if<DenseCovariance>(&cov_)) {
    d->Update(arm);
  } else if (auto* s = std::get_if<SketchState>(&cov_)) {
    s->Update(arm);
  } else {
    std::get<DyadicSketch>(cov_).Update(arm);
  }
  b_.noalias() += reward * arm;
  theta_hat_ = ApplyInverse(b_);
  ++t_;
}

std::vector<ArmRound> RunPolicy(Policy& policy, const Environment& env,
                                std::size_t rounds) {
  if (env.dim() != policy.options().dim) {
    throw InvalidArgument("RunPolicy: environment dimension " +
                          std::to_string(env.dim()) + " differs from policy " +
                          std::to_string(policy.options().dim));
  }
  if (const auto h = env.horizon(); h && *h < rounds) {
    throw InvalidArgument("RunPolicy: environment has " + std::to_string(*h) +
                          " rounds, " + std::to_string(rounds) + " requested");
  }
  std::vector<ArmRound> trace;
  trace.reserve(rounds);
  for (std::size_t t = 0; t < rounds; ++t) {
    Round round = env.RoundAt(t);
    const Selection pick = policy.Select(round.arms);
    const auto i = static_cast<Eigen::Index>(pick.index);
    ArmRound rec;
    rec.chosen_index = pick.index;
    rec.reward = round.realized(i);
    rec.instant_regret = std::max(0.0, round.expected.maxCoeff() - round.expected(i));
    policy.Update(round.arms.row(i).transpose(), rec.reward);
    rec.arms = std::move(round.arms);
    trace.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace dbsketch
