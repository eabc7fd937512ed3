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

// Bandit environments.
//
// Round t is generated from its own seed, derived from the environment seed,
// so any policy asking for round t sees the same arms and the same reward
// noise no matter how many rounds it has already played.

#ifndef DBSKETCH_ENVIRONMENT_H_
#define DBSKETCH_ENVIRONMENT_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dbsketch/numerics.h"

namespace dbsketch {

// splitmix64 finalizer.
std::uint64_t SplitMix64(std::uint64_t x);
// Seed for stream `index` of a master seed.
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index);

struct Round {
  Matrix arms;       // K x d
  Vector expected;   // expected reward of each arm
  Vector realized;   // reward returned if the arm is played
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t arm_count() const = 0;
  // Number of rounds available; nullopt when unbounded.
  virtual std::optional<std::size_t> horizon() const { return std::nullopt; }
  virtual Round RoundAt(std::size_t t) const = 0;
};

struct GaussianOptions {
  std::size_t dim = 10;
  std::size_t arms = 10;
  double noise = 0.1;
  std::uint64_t seed = 0;
  // When set, arms longer than `context_norm` are scaled back onto the ball.
  bool normalize_arms = false;
  double context_norm = 1.0;
  // When positive, arms are z B^T with z ~ N(0, I_rank) and B a fixed random
  // orthonormal d x rank basis.
  std::size_t rank = 0;
};

// Arms i.i.d. N(0, I_d), theta* a normalized standard normal draw, rewards
// x^T theta* + N(0, noise^2).
class GaussianEnvironment : public Environment {
 public:
  explicit GaussianEnvironment(const GaussianOptions& options);

  std::size_t dim() const override { return options_.dim; }
  std::size_t arm_count() const override { return options_.arms; }
  Round RoundAt(std::size_t t) const override;

  const Vector& theta() const { return theta_; }
  const Matrix& basis() const { return basis_; }

 private:
  GaussianOptions options_;
  Vector theta_;
  Matrix basis_;  // d x rank, empty when rank == 0
};

struct OrthonormalOptions {
  std::size_t dim = 10;
  std::size_t arms = 10;
  std::size_t r = 10;
  std::vector<double> weights;  // empty means uniform
  double noise = 0.1;
  std::uint64_t seed = 0;
};

// Every arm is one of e_1..e_r, drawn independently with `weights`.
class OrthonormalEnvironment : public Environment {
 public:
  explicit OrthonormalEnvironment(const OrthonormalOptions& options);

  std::size_t dim() const override { return options_.dim; }
  std::size_t arm_count() const override { return options_.arms; }
  Round RoundAt(std::size_t t) const override;

  const Vector& theta() const { return theta_; }
  // Index in [0, r) of each arm of round t.
  std::vector<std::size_t> DirectionsAt(std::size_t t) const;

 private:
  OrthonormalOptions options_;
  Vector theta_;
};

struct LabeledData {
  std::vector<int> labels;
  Matrix features;  // n x d
};

// `label,f1,...,fd` rows; a non-numeric first line is treated as a header.
LabeledData LoadLabeledCsv(const std::string& path);
// IDX image and label files (the MNIST layout); pixels become doubles.
LabeledData LoadIdx(const std::string& images_path,
                    const std::string& labels_path);
// Scales every row by one common factor so the largest norm is 1.
void ScaleToUnitMaxNorm(LabeledData& data);

struct ClassificationOptions {
  int target_label = 0;
  std::uint64_t seed = 0;
};

// Each round offers one sample per label (ascending label order); the reward
// is 1 when the played sample carries the target label.
class ClassificationEnvironment : public Environment {
 public:
  ClassificationEnvironment(LabeledData data,
                            const ClassificationOptions& options);

  std::size_t dim() const override {
    return static_cast<std::size_t>(data_.features.cols());
  }
  std::size_t arm_count() const override { return label_set_.size(); }
  Round RoundAt(std::size_t t) const override;

  const std::vector<int>& label_set() const { return label_set_; }
  // Sample row index of each arm of round t.
  std::vector<std::size_t> SamplesAt(std::size_t t) const;

 private:
  LabeledData data_;
  ClassificationOptions options_;
  std::vector<int> label_set_;
  std::vector<std::vector<std::size_t>> by_label_;
};

}  // namespace dbsketch

#endif  // DBSKETCH_ENVIRONMENT_H_
