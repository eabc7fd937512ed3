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

// Single-block deterministic streaming sketches.
//
// A SketchState holds `capacity` rows S (l x d) such that S^T S (FD) or
// S^T S + alpha I (RFD) approximates X^T X for the rows X seen so far. The
// inverse of the regularized approximation is applied through the Woodbury
// identity with the small core M = (S S^T + reg I)^{-1}; after every shrink
// the rows of S are orthogonal and M is diagonal.

#ifndef DBSKETCH_SKETCH_H_
#define DBSKETCH_SKETCH_H_

#include <cstddef>
#include <string>

#include "dbsketch/numerics.h"

namespace dbsketch {

enum class SketchKind { kFD, kRFD };

// kFull adds the whole shrink value to alpha on every shrink; kHalved adds
// half of it, as in the original robust frequent directions analysis.
enum class AlphaRule { kFull, kHalved };

std::string ToString(SketchKind kind);
SketchKind ParseSketchKind(const std::string& name);

struct SketchOptions {
  SketchKind kind = SketchKind::kFD;
  std::size_t capacity = 1;  // l
  std::size_t dim = 1;       // d
  double lambda = 1.0;
  AlphaRule alpha_rule = AlphaRule::kFull;
};

class SketchState {
 public:
  // A buffered sketch starts with no rows and only accepts Append; otherwise
  // it starts with `capacity` zero rows.
  explicit SketchState(const SketchOptions& options, bool buffered = false);

  // One step of the per-row algorithm: the row goes into the (zero) last row,
  // the sketch is decomposed and every squared singular value is reduced by
  // the smallest one. Sketches that have seen fewer than `capacity` rows are
  // never shrunk.
  void Update(const Vector& row);

  // Doubled-buffer variant: rows are appended below the sketch and the
  // decomposition/shrink runs only once 2 * capacity rows are held, shrinking
  // by the capacity-th squared singular value. Returns true when that
  // boundary was reached on this call.
  bool Append(const Vector& row);

  SketchKind kind() const { return options_.kind; }
  std::size_t capacity() const { return options_.capacity; }
  std::size_t dim() const { return options_.dim; }
  double lambda() const { return options_.lambda; }
  const SketchOptions& options() const { return options_; }
  bool buffered() const { return buffered_; }

  double alpha() const { return alpha_; }
  double shrink_total() const { return shrink_total_; }
  // Shrink value applied by the most recent decomposition (0 if none).
  double last_shrink() const { return last_shrink_; }
  std::size_t rows_seen() const { return rows_seen_; }
  double frobenius_seen() const { return frobenius_seen_; }
  // Rows appended since the last decomposition (doubled-buffer mode).
  std::size_t pending_rows() const { return pending_rows_; }
  bool rows_orthogonal() const { return pending_rows_ == 0; }

  // Stored rows; capacity rows in per-row mode, a variable number (at most
  // 2 * capacity) in doubled-buffer mode.
  Eigen::Ref<const RowMatrix> rows() const { return s_.topRows(used_); }
  std::size_t used_rows() const { return used_; }

  // lambda + alpha; the ridge term of the approximation.
  double regularizer() const { return options_.lambda + alpha_; }

  // Diagonal of M = (S S^T + reg I)^{-1}; requires rows_orthogonal().
  Vector MDiag() const;
  // Dense M for any buffer state.
  Matrix MCore() const;

  Vector ApplyInverse(const Vector& v) const;
  double InverseQuadratic(const Vector& x) const;

  // S^T S (+ alpha I for RFD); d x d, intended for tests and oracles.
  Matrix ApproxGram() const;

  // Numerical rank of the stored rows.
  std::size_t NumericalRankOfRows() const;

  // Shrinks a buffered sketch holding more than capacity rows down to
  // capacity. Returns whether a shrink ran.
  bool Compact();

  // True when the last shrink exceeded the nonzero threshold relative to the
  // mean squared norm `mean_row_energy`.
  bool LastShrinkNonzero(double mean_row_energy) const;

  // Restores raw state, used when loading snapshots.
  void Restore(const RowMatrix& rows, double alpha, double shrink_total,
               double last_shrink, std::size_t rows_seen, double frobenius_seen,
               std::size_t pending_rows);

 private:
  void CheckRow(const Vector& row, const char* op) const;
  // Decomposes the first `used_` rows and shrinks by the `keep`-th squared
  // singular value (when `allow_shrink`), leaving `keep` rows stored.
  void DecomposeAndShrink(std::size_t keep, bool allow_shrink);

  SketchOptions options_;
  bool buffered_ = false;
  RowMatrix s_;
  std::size_t used_ = 0;
  double alpha_ = 0.0;
  double shrink_total_ = 0.0;
  double last_shrink_ = 0.0;
  std::size_t rows_seen_ = 0;
  double frobenius_seen_ = 0.0;
  std::size_t pending_rows_ = 0;
};

// Exact regularized covariance lambda I + sum x x^T with its inverse kept
// current by Sherman-Morrison updates.
class DenseCovariance {
 public:
  DenseCovariance(std::size_t dim, double lambda);
  // Starts from an existing regularized gram and its inverse.
  DenseCovariance(double lambda, Matrix gram, Matrix inverse);

  void Update(const Vector& row);

  std::size_t dim() const { return static_cast<std::size_t>(gram_.rows()); }
  double lambda() const { return lambda_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& inverse() const { return inv_; }

  Vector ApplyInverse(const Vector& v) const { return inv_ * v; }
  double InverseQuadratic(const Vector& x) const;

 private:
  double lambda_;
  Matrix gram_;
  Matrix inv_;
};

// (reg I + S^T S)^{-1} v = (v - S^T M S v) / reg, given M = (S S^T + reg I)^{-1}.
Vector WoodburyInverseApply(const Eigen::Ref<const RowMatrix>& s,
                            const Matrix& m, double reg, const Vector& v);
// x^T (reg I + S^T S)^{-1} x, clamped at zero.
double WoodburyQuadratic(const Eigen::Ref<const RowMatrix>& s, const Matrix& m,
                         double reg, const Vector& x);

}  // namespace dbsketch

#endif  // DBSKETCH_SKETCH_H_
