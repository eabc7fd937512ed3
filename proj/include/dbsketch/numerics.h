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

#ifndef DBSKETCH_NUMERICS_H_
#define DBSKETCH_NUMERICS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dbsketch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Raised for malformed arguments: dimension mismatches, non-finite data,
// out-of-range parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a numeric routine cannot produce a trustworthy result
// (non-convergence, vanishing pivot).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All numeric tolerances used by the library live here.
struct Tolerances {
  // Relative off-diagonal threshold at which a Jacobi pair counts as
  // orthogonal.
  static constexpr double kJacobiOrthogonality = 1e-14;
  static constexpr int kJacobiMaxSweeps = 80;
  // Singular values at or below this fraction of the largest are treated as
  // zero when completing singular-vector bases.
  static constexpr double kSvdNegligible = 1e-15;
  // Components with magnitude above this decide the singular-vector sign.
  static constexpr double kSignPivot = 1e-12;
  static constexpr double kSymmetry = 1e-10;
  static constexpr double kPowerIterationResidual = 1e-10;
  static constexpr int kPowerIterationMaxIters = 10000;
  static constexpr double kRank1Denominator = 1e-12;
  // Shrink values above kShrinkNonzero * max(1, mean squared row norm) mark a
  // sketch as lossy.
  static constexpr double kShrinkNonzero = 1e-10;
  // Singular values above kNumericalRank * sigma_max count toward the rank.
  static constexpr double kNumericalRank = 1e-10;
  static constexpr double kBorderedPivot = 1e-12;
  static constexpr double kQuadraticClamp = 1e-10;
};

struct SvdResult {
  Matrix left_vectors;     // U, rows x r
  Vector singular_values;  // descending, length r = min(rows, cols)
  Matrix right_vectors;    // V, cols x r
};

// Throws InvalidArgument if any entry of `m` is NaN or infinite.
void RequireFinite(const Matrix& m, const std::string& what);
void RequireFinite(const Vector& v, const std::string& what);

// Thin SVD by one-sided Jacobi rotations. The sign of each singular pair is
// fixed so that the first non-negligible component of the right singular
// vector is positive.
SvdResult Svd(const Matrix& a);

// Largest |eigenvalue| of a symmetric matrix by power iteration on A^2 with a
// fixed-seed start vector.
double SpectralNorm(const Matrix& sym);

// Exact extreme eigenvalues of a symmetric matrix (dense eigensolver). Used by
// the experiment harness for per-round error curves.
struct EigenRange {
  double min = 0.0;
  double max = 0.0;
  double abs_max() const;
};
EigenRange SymmetricEigenRange(const Matrix& sym);

// Given inv = P^{-1}, returns (P + u u^T)^{-1} by Sherman-Morrison.
Matrix Rank1InverseUpdate(const Matrix& inv, const Vector& u);
// In-place variant; avoids a d x d temporary on the hot path.
void Rank1InverseUpdateInPlace(Matrix& inv, const Vector& u);

// ||A - A_[k]||_F^2, the energy outside the best rank-k approximation.
double BestRankKResidual(const Matrix& a, std::size_t k);

// Orthogonalizes the rows of `w` in place with one-sided Jacobi rotations and
// sorts them by decreasing norm. On return row i equals sigma_i * v_i^T.
// When `rotations` is non-null it accumulates the applied transform so that
// w_out = (*rotations) * w_in.
void OrthogonalizeRows(RowMatrix& w, RowMatrix* rotations = nullptr);

// Number of values in a descending sequence above rel_tol * first.
std::size_t NumericalRank(const Vector& descending, double rel_tol);

}  // namespace dbsketch

#endif  // DBSKETCH_NUMERICS_H_
