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

// Dyadic block sketching.
//
// The stream is cut into consecutive blocks. Block i owns a streaming sketch
// of length l0 * 2^i; only the last block is active and receives rows. A new
// block is opened when the active one would exceed the size cap
// (threshold * l0, where size is the sum of squared row norms) while its
// sketch is already lossy. Frozen blocks are stacked into a prefix whose
// gram is cached, so querying the combined sketch only borders the prefix
// with the active block. Once the number of blocks reaches
// floor(log2(d / l0 + 1)) - 1 the structure stops sketching and keeps an
// exact dense covariance seeded with the current approximation.
//
// With the standard path every row is sketched by the per-row algorithm and
// the combined M is rebuilt after each row. With the fast path each block
// keeps a doubled buffer, decomposes only when the buffer is full and, in
// between, borders M with one row per update:
//
//   M' = [[M + phi phi^T / xi, -phi / xi], [-phi^T / xi, 1 / xi]],
//   phi = M S x,  xi = |x|^2 - (S x)^T phi + lambda + alpha.

#ifndef DBSKETCH_DYADIC_H_
#define DBSKETCH_DYADIC_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dbsketch/numerics.h"
#include "dbsketch/sketch.h"

namespace dbsketch {

enum class UpdatePath { kStandard, kFast };

struct DyadicOptions {
  std::size_t dim = 1;
  std::size_t l0 = 1;
  double epsilon = 1.0;
  double lambda = 1.0;
  SketchKind kind = SketchKind::kFD;
  AlphaRule alpha_rule = AlphaRule::kFull;
  UpdatePath path = UpdatePath::kStandard;
};

struct Block {
  SketchState sketch;
  std::size_t length = 0;
  double size = 0.0;  // sum of squared norms of the rows it covers
  bool active = false;
  // Rank bound of the covered rows: length + 1 once the sketch has shrunk by
  // a nonzero amount, else the numerical rank of the sketch.
  std::size_t rank_seen = 0;
  // Set when a row pushed `size` past the cap while the sketch was exact.
  bool cap_crossed_exact = false;

  double shrink_sum() const { return sketch.shrink_total(); }
};

// Stacked sketch of the whole stream.
struct GlobalSketchView {
  RowMatrix s;      // L x d
  Matrix gram;      // S S^T
  Matrix m;         // (S S^T + reg I)^{-1}
  double reg = 1.0; // lambda + total alpha
  // Set once the dense fallback is engaged; then the exact regularized gram
  // and its inverse replace (s, m).
  bool dense = false;
  Matrix dense_gram;
  Matrix dense_inverse;

  std::size_t rows() const { return static_cast<std::size_t>(s.rows()); }
  Vector ApplyInverse(const Vector& v) const;
  double InverseQuadratic(const Vector& x) const;
  // Covariance approximation without the lambda ridge.
  Matrix ApproxGram(double lambda) const;
};

// Stacks `block` under `prefix` and rebuilds M from the bordered gram.
GlobalSketchView Combine(const GlobalSketchView& prefix,
                         const Eigen::Ref<const RowMatrix>& block, double reg);

struct InvariantCheck {
  std::string name;
  bool passed = true;
  double measured = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantCheck> checks;
  std::vector<std::string> warnings;

  bool all_passed() const;
  const InvariantCheck& Get(const std::string& name) const;
};

class DyadicSketch {
 public:
  explicit DyadicSketch(const DyadicOptions& options);

  // Runs the configured update path.
  void Update(const Vector& row);

  GlobalSketchView View() const;
  InvariantReport CheckInvariants() const;

  // (lambda I + approx)^{-1} v and x^T (lambda I + approx)^{-1} x.
  Vector ApplyInverse(const Vector& v) const;
  double InverseQuadratic(const Vector& x) const;
  // One quadratic form per row of `arms`.
  Vector InverseQuadratics(const Matrix& arms) const;
  // S^T S + alpha_total I, or the fallback gram minus lambda I. d x d.
  Matrix ApproxGram() const;

  const DyadicOptions& options() const { return options_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& active_block() const { return blocks_.back(); }
  bool fallback_engaged() const { return fallback_.has_value(); }
  double alpha_total() const;
  double regularizer() const { return options_.lambda + alpha_total(); }
  // epsilon * l0 on the standard path, epsilon / 2 * l0 on the fast path.
  double size_cap() const;
  // floor(log2(d / l0 + 1)) - 1; the active-block index at which the dense
  // fallback takes over.
  int fallback_threshold() const;
  std::size_t rows_seen() const { return rows_seen_; }
  double frobenius_seen() const { return frobenius_seen_; }
  std::size_t sketch_rows() const;
  // Doubles held by the sketch state (excludes the fallback).
  std::size_t stored_values() const;

  std::vector<double> shrink_sums() const;
  std::vector<std::size_t> block_lengths() const;

  // Versioned JSON snapshot; see docs/snapshot_format.md.
  std::string SnapshotJson() const;
  static DyadicSketch FromSnapshotJson(const std::string& text);

 private:
  void UpdateStandard(const Vector& row);
  void UpdateFast(const Vector& row);
  void OpenBlock();
  void EngageFallback();
  void RefreshRank(Block& block) const;
  // True if the block is lossy or `row` would make it lossy; in the latter
  // case rank_seen becomes length + 1.
  bool WouldBeLossy(Block& block, const Vector& row) const;
  void Recombine();
  Vector StackedProduct(const Vector& v) const;

  DyadicOptions options_;
  std::vector<Block> blocks_;
  RowMatrix prefix_s_;   // nonzero rows of the frozen blocks
  Matrix prefix_gram_;   // prefix_s_ prefix_s_^T
  double prefix_alpha_ = 0.0;
  Matrix m_;             // M for [prefix_s_; active rows]
  std::optional<DenseCovariance> fallback_;
  std::size_t rows_seen_ = 0;
  double frobenius_seen_ = 0.0;
};

}  // namespace dbsketch

#endif  // DBSKETCH_DYADIC_H_
