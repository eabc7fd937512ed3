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

#include "dbsketch/sketch.h"

#include <algorithm>
#include <cmath>

namespace dbsketch {

std::string ToString(SketchKind kind) {
  return kind == SketchKind::kFD ? "FD" : "RFD";
}

SketchKind ParseSketchKind(const std::string& name) {
  if (name == "FD" || name == "fd") return SketchKind::kFD;
  if (name == "RFD" || name == "rfd") return SketchKind::kRFD;
  throw InvalidArgument("unknown sketch kind '" + name + "'");
}

SketchState::SketchState(const SketchOptions& options, bool buffered)
    : options_(options), buffered_(buffered) {
  if (options.capacity < 1) throw InvalidArgument("sketch capacity must be >= 1");
  if (options.dim < 1) throw InvalidArgument("sketch dimension must be >= 1");
  if (!(options.lambda > 0.0) || !std::isfinite(options.lambda)) {
    throw InvalidArgument("sketch regularizer lambda must be positive");
  }
  const auto l = static_cast<Eigen::Index>(options.capacity);
  s_ = RowMatrix::Zero(2 * l, static_cast<Eigen::Index>(options.dim));
  used_ = buffered ? 0 : options.capacity;
}

void SketchState::CheckRow(const Vector& row, const char* op) const {
  if (static_cast<std::size_t>(row.size()) != options_.dim) {
    throw InvalidArgument(std::string(op) + ": row has dimension " +
                          std::to_string(row.size()) + ", sketch expects " +
                          std::to_string(options_.dim));
  }
  RequireFinite(row, op);
}

void SketchState::DecomposeAndShrink(std::size_t keep, bool allow_shrink) {
  RowMatrix w = s_.topRows(static_cast<Eigen::Index>(used_));
  OrthogonalizeRows(w);
  const auto k = static_cast<Eigen::Index>(keep);
  double sigma = 0.0;
  if (allow_shrink && w.rows() >= k) sigma = w.row(k - 1).squaredNorm();

  s_.setZero();
  const double sigma_root = std::sqrt(sigma);
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(k, w.rows()); ++i) {
    const double si = w.row(i).norm();
    if (si == 0.0) break;
    // (s_i - s_k)(s_i + s_k) keeps precision when s_i is close to s_k.
    const double reduced = std::max(0.0, (si - sigma_root) * (si + sigma_root));
    s_.row(i) = (std::sqrt(reduced) / si) * w.row(i);
  }
  used_ = keep;
  pending_rows_ = 0;
  last_shrink_ = sigma;
  shrink_total_ += sigma;
  if (options_.kind == SketchKind::kRFD) {
    alpha_ += options_.alpha_rule == AlphaRule::kFull ? sigma : 0.5 * sigma;
  }
}

void SketchState::Update(const Vector& row) {
  CheckRow(row, "SketchState::Update");
  if (buffered_) {
    throw InvalidArgument("SketchState::Update: sketch is in buffered mode");
  }
  const auto last = static_cast<Eigen::Index>(options_.capacity) - 1;
  s_.row(last) = row.transpose();
  ++rows_seen_;
  frobenius_seen_ += row.squaredNorm();
  DecomposeAndShrink(options_.capacity, rows_seen_ >= options_.capacity);
}

bool SketchState::Append(const Vector& row) {
  CheckRow(row, "SketchState::Append");
  s_.row(static_cast<Eigen::Index>(used_)) = row.transpose();
  ++used_;
  ++pending_rows_;
  ++rows_seen_;
  frobenius_seen_ += row.squaredNorm();
  if (used_ < 2 * options_.capacity) return false;
  DecomposeAndShrink(options_.capacity, true);
  return true;
}

Vector SketchState::MDiag() const {
  if (!rows_orthogonal()) {
    throw InvalidArgument("SketchState::MDiag: buffered rows are not orthogonal");
  }
  const double reg = regularizer();
  Vector m(static_cast<Eigen::Index>(used_));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m(i) = 1.0 / (reg + s_.row(i).squaredNorm());
  }
  return m;
}

Matrix SketchState::MCore() const {
  if (rows_orthogonal()) return MDiag().asDiagonal();
  const auto s = rows();
  Matrix g = s * s.transpose();
  g.diagonal().array() += regularizer();
  return g.llt().solve(Matrix::Identity(g.rows(), g.cols()));
}

Vector SketchState::ApplyInverse(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != options_.dim) {
    throw InvalidArgument("SketchState::ApplyInverse: dimension mismatch");
  }
  const double reg = regularizer();
  const auto s = rows();
  if (rows_orthogonal()) {
    const Vector sv = s * v;
    const Vector msv = MDiag().cwiseProduct(sv);
    return (v - s.transpose() * msv) / reg;
  }
  return WoodburyInverseApply(s, MCore(), reg, v);
}

double SketchState::InverseQuadratic(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != options_.dim) {
    throw InvalidArgument("SketchState::InverseQuadratic: dimension mismatch");
  }
  if (!rows_orthogonal()) {
    return WoodburyQuadratic(rows(), MCore(), regularizer(), x);
  }
  const double reg = regularizer();
  const Vector sx = rows() * x;
  const double q = (x.squaredNorm() - sx.dot(MDiag().cwiseProduct(sx))) / reg;
  return std::max(0.0, q);
}

Matrix SketchState::ApproxGram() const {
  const auto s = rows();
  Matrix g = s.transpose() * s;
  if (options_.kind == SketchKind::kRFD) g.diagonal().array() += alpha_;
  return g;
}

std::size_t SketchState::NumericalRankOfRows() const {
  if (used_ == 0) return 0;
  if (!rows_orthogonal()) {
    return NumericalRank(Svd(Matrix(rows())).singular_values,
                         Tolerances::kNumericalRank);
  }
  Vector norms(static_cast<Eigen::Index>(used_));
  for (Eigen::Index i = 0; i < norms.size(); ++i) norms(i) = s_.row(i).norm();
  std::sort(norms.data(), norms.data() + norms.size(), std::greater<double>());
  return NumericalRank(norms, Tolerances::kNumericalRank);
}

bool SketchState::Compact() {
  if (used_ <= options_.capacity) return false;
  DecomposeAndShrink(options_.capacity, true);
  return true;
}

bool SketchState::LastShrinkNonzero(double mean_row_energy) const {
  return last_shrink_ >
         Tolerances::kShrinkNonzero * std::max(1.0, mean_row_energy);
}

void SketchState::Restore(const RowMatrix& rows, double alpha,
                          double shrink_total, double last_shrink,
                          std::size_t rows_seen, double frobenius_seen,
                          std::size_t pending_rows) {
  if (rows.cols() != s_.cols() || rows.rows() > s_.rows()) {
    throw InvalidArgument("SketchState::Restore: rows do not fit the sketch");
  }
  s_.setZero();
  s_.topRows(rows.rows()) = rows;
  used_ = static_cast<std::size_t>(rows.rows());
  alpha_ = alpha;
  shrink_total_ = shrink_total;
  last_shrink_ = last_shrink;
  rows_seen_ = rows_seen;
  frobenius_seen_ = frobenius_seen;
  pending_rows_ = pending_rows;
}

DenseCovariance::DenseCovariance(std::size_t dim, double lambda)
    : lambda_(lambda) {
  if (dim < 1) throw InvalidArgument("DenseCovariance: dimension must be >= 1");
  if (!(lambda > 0.0)) {
    throw InvalidArgument("DenseCovariance: lambda must be positive");
  }
  const auto d = static_cast<Eigen::Index>(dim);
  gram_ = lambda * Matrix::Identity(d, d);
  inv_ = (1.0 / lambda) * Matrix::Identity(d, d);
}

DenseCovariance::DenseCovariance(double lambda, Matrix gram, Matrix inverse)
    : lambda_(lambda), gram_(std::move(gram)), inv_(std::move(inverse)) {
  if (gram_.rows() != gram_.cols() || inv_.rows() != gram_.rows() ||
      inv_.cols() != gram_.cols()) {
    throw InvalidArgument("DenseCovariance: gram and inverse shapes differ");
  }
}

void DenseCovariance::Update(const Vector& row) {
  if (row.size() != gram_.rows()) {
    throw InvalidArgument("DenseCovariance::Update: row has dimension " +
                          std::to_string(row.size()) + ", expected " +
                          std::to_string(gram_.rows()));
  }
  Rank1InverseUpdateInPlace(inv_, row);
  gram_.noalias() += row * row.transpose();
}

double DenseCovariance::InverseQuadratic(const Vector& x) const {
  return std::max(0.0, x.dot(inv_ * x));
}

Vector WoodburyInverseApply(const Eigen::Ref<const RowMatrix>& s,
                            const Matrix& m, double reg, const Vector& v) {
  if (s.cols() != v.size() || m.rows() != s.rows() || m.cols() != s.rows()) {
    throw InvalidArgument("WoodburyInverseApply: incompatible shapes");
  }
  if (!(reg > 0.0)) throw InvalidArgument("WoodburyInverseApply: reg must be > 0");
  if (s.rows() == 0) return v / reg;
  const Vector sv = s * v;
  return (v - s.transpose() * (m * sv)) / reg;
}

double WoodburyQuadratic(const Eigen::Ref<const RowMatrix>& s, const Matrix& m,
                         double reg, const Vector& x) {
  if (s.cols() != x.size() || m.rows() != s.rows() || m.cols() != s.rows()) {
    throw InvalidArgument("WoodburyQuadratic: incompatible shapes");
  }
  if (!(reg > 0.0)) throw InvalidArgument("WoodburyQuadratic: reg must be > 0");
  const double xx = x.squaredNorm();
  if (s.rows() == 0) return xx / reg;
  const Vector sx = s * x;
  const double q = (xx - sx.dot(m * sx)) / reg;
  if (q < -Tolerances::kQuadraticClamp * std::max(1.0, xx / reg)) {
    throw NumericError("WoodburyQuadratic: negative quadratic form " +
                       std::to_string(q) + "; M does not match S");
  }
  return std::max(0.0, q);
}

}  // namespace dbsketch
