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

#include "dbsketch/numerics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace dbsketch {
namespace {

std::string Dims(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

// Extends the orthonormal columns v.leftCols(filled) to a full orthonormal
// set of `v.cols()` columns using coordinate vectors as candidates.
void CompleteOrthonormalColumns(Matrix& v, Eigen::Index filled) {
  const Eigen::Index n = v.rows();
  Eigen::Index next = filled;
  for (Eigen::Index e = 0; e < n && next < v.cols(); ++e) {
    Vector cand = Vector::Unit(n, e);
    // Two passes of Gram-Schmidt keep the result orthogonal to roundoff.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < next; ++j) {
        cand -= v.col(j).dot(cand) * v.col(j);
      }
    }
    const double norm = cand.norm();
    if (norm > 1e-6) v.col(next++) = cand / norm;
  }
  if (next < v.cols()) {
    throw NumericError("failed to complete orthonormal basis of size " +
                       std::to_string(v.cols()));
  }
}

}  // namespace

void RequireFinite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) {
    throw InvalidArgument(what + ": non-finite entry in " +
                          Dims(m.rows(), m.cols()) + " matrix");
  }
}

void RequireFinite(const Vector& v, const std::string& what) {
  if (!v.allFinite()) {
    throw InvalidArgument(what + ": non-finite entry in vector of length " +
                          std::to_string(v.size()));
  }
}

void OrthogonalizeRows(RowMatrix& w, RowMatrix* rotations) {
  const Eigen::Index m = w.rows();
  if (rotations != nullptr) rotations->setIdentity(m, m);
  if (m == 0) return;

  std::vector<double> sq(static_cast<std::size_t>(m));
  bool converged = (m == 1);
  for (int sweep = 0; sweep < Tolerances::kJacobiMaxSweeps && !converged;
       ++sweep) {
    double max_sq = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      sq[i] = w.row(i).squaredNorm();
      max_sq = std::max(max_sq, sq[i]);
    }
    // Rows at roundoff level carry no direction; rotating them never settles.
    const double negligible =
        Tolerances::kSvdNegligible * Tolerances::kSvdNegligible * max_sq;
    converged = true;
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double alpha = sq[i];
        const double beta = sq[j];
        if (alpha <= negligible || beta <= negligible) continue;
        const double gamma = w.row(i).dot(w.row(j));
        if (std::abs(gamma) <=
            Tolerances::kJacobiOrthogonality * std::sqrt(alpha * beta)) {
          continue;
        }
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index k = 0; k < w.cols(); ++k) {
          const double wi = w(i, k);
          const double wj = w(j, k);
          w(i, k) = c * wi - s * wj;
          w(j, k) = s * wi + c * wj;
        }
        if (rotations != nullptr) {
          for (Eigen::Index k = 0; k < m; ++k) {
            const double qi = (*rotations)(i, k);
            const double qj = (*rotations)(j, k);
            (*rotations)(i, k) = c * qi - s * qj;
            (*rotations)(j, k) = s * qi + c * qj;
          }
        }
        sq[i] = alpha - t * gamma;
        sq[j] = beta + t * gamma;
      }
    }
  }
  if (!converged) {
    throw NumericError("Jacobi SVD did not converge for " +
                       Dims(w.rows(), w.cols()) + " matrix");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = 0; i < m; ++i) sq[i] = w.row(i).squaredNorm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return sq[a] > sq[b]; });
  bool sorted = true;
  for (Eigen::Index i = 0; i < m; ++i) sorted &= (order[i] == i);
  if (sorted) return;
  RowMatrix tmp(m, w.cols());
  for (Eigen::Index i = 0; i < m; ++i) tmp.row(i) = w.row(order[i]);
  w.swap(tmp);
  if (rotations != nullptr) {
    RowMatrix q(m, m);
    for (Eigen::Index i = 0; i < m; ++i) q.row(i) = rotations->row(order[i]);
    rotations->swap(q);
  }
}

SvdResult Svd(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw InvalidArgument("Svd: empty " + Dims(a.rows(), a.cols()) + " matrix");
  }
  RequireFinite(a, "Svd");

  const bool transposed = a.rows() > a.cols();
  RowMatrix w = transposed ? RowMatrix(a.transpose()) : RowMatrix(a);
  const Eigen::Index r = w.rows();  // min(rows, cols)
  RowMatrix q;
  OrthogonalizeRows(w, &q);

  // w = q * w0, so w0 = q^T * diag(s) * V^T.
  Vector s(r);
  for (Eigen::Index i = 0; i < r; ++i) s(i) = w.row(i).norm();
  const double smax = s(0);
  Matrix v(w.cols(), r);
  Eigen::Index filled = 0;
  for (; filled < r; ++filled) {
    const double si = s(filled);
    if (si == 0.0 || si <= Tolerances::kSvdNegligible * smax) break;
    v.col(filled) = w.row(filled).transpose() / si;
  }
  if (filled < r) CompleteOrthonormalColumns(v, filled);
  Matrix u = q.transpose();

  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index k = 0; k < v.rows(); ++k) {
      if (std::abs(v(k, i)) > Tolerances::kSignPivot) {
        if (v(k, i) < 0.0) {
          v.col(i) = -v.col(i);
          u.col(i) = -u.col(i);
        }
        break;
      }
    }
  }

  SvdResult out;
  out.singular_values = std::move(s);
  if (transposed) {
    // a^T = u s v^T  =>  a = v s u^T; re-apply the sign rule to the new V.
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index k = 0; k < u.rows(); ++k) {
        if (std::abs(u(k, i)) > Tolerances::kSignPivot) {
          if (u(k, i) < 0.0) {
            u.col(i) = -u.col(i);
            v.col(i) = -v.col(i);
          }
          break;
        }
      }
    }
    out.left_vectors = std::move(v);
    out.right_vectors = std::move(u);
  } else {
    out.left_vectors = std::move(u);
    out.right_vectors = std::move(v);
  }
  return out;
}

double SpectralNorm(const Matrix& sym) {
  if (sym.rows() != sym.cols() || sym.rows() == 0) {
    throw InvalidArgument("SpectralNorm: expected a non-empty square matrix, got " +
                          Dims(sym.rows(), sym.cols()));
  }
  RequireFinite(sym, "SpectralNorm");
  const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
  if ((sym - sym.transpose()).cwiseAbs().maxCoeff() >
      Tolerances::kSymmetry * scale) {
    throw InvalidArgument("SpectralNorm: matrix is not symmetric");
  }

  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal;
  Vector v(sym.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  v.normalize();

  double estimate = 0.0;
  for (int it = 0; it < Tolerances::kPowerIterationMaxIters; ++it) {
    const Vector w = sym * v;
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    estimate = wn;
    const Vector u = sym * w;  // A^2 v
    const double rho = wn * wn;
    if ((u - rho * v).norm() <= Tolerances::kPowerIterationResidual * rho) break;
    v = u / u.norm();
  }
  return estimate;
}

double EigenRange::abs_max() const {
  return std::max(std::abs(min), std::abs(max));
}

EigenRange SymmetricEigenRange(const Matrix& sym) {
  if (sym.rows() != sym.cols() || sym.rows() == 0) {
    throw InvalidArgument("SymmetricEigenRange: expected a square matrix, got " +
                          Dims(sym.rows(), sym.cols()));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("SymmetricEigenRange: eigensolver failed for " +
                       Dims(sym.rows(), sym.cols()));
  }
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

void Rank1InverseUpdateInPlace(Matrix& inv, const Vector& u) {
  if (inv.rows() != inv.cols() || inv.rows() != u.size()) {
    throw InvalidArgument("Rank1InverseUpdate: inverse " +
                          Dims(inv.rows(), inv.cols()) +
                          " does not match vector of length " +
                          std::to_string(u.size()));
  }
  RequireFinite(u, "Rank1InverseUpdate");
  const Vector iu = inv * u;
  const double denom = 1.0 + u.dot(iu);
  if (denom <= Tolerances::kRank1Denominator) {
    throw NumericError("Rank1InverseUpdate: denominator " +
                       std::to_string(denom) + " is not positive");
  }
  inv.noalias() -= (iu / denom) * iu.transpose();
  // Keep the result exactly symmetric.
  inv = 0.5 * (inv + inv.transpose()).eval();
}

Matrix Rank1InverseUpdate(const Matrix& inv, const Vector& u) {
  Matrix out = inv;
  Rank1InverseUpdateInPlace(out, u);
  return out;
}

double BestRankKResidual(const Matrix& a, std::size_t k) {
  const auto limit = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  if (k > limit) {
    throw InvalidArgument("BestRankKResidual: k=" + std::to_string(k) +
                          " exceeds min dimension " + std::to_string(limit));
  }
  const Vector s = Svd(a).singular_values;
  double tail = 0.0;
  for (Eigen::Index i = static_cast<Eigen::Index>(k); i < s.size(); ++i) {
    tail += s(i) * s(i);
  }
  return tail;
}

std::size_t NumericalRank(const Vector& descending, double rel_tol) {
  if (descending.size() == 0 || descending(0) <= 0.0) return 0;
  const double cut = rel_tol * descending(0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < descending.size(); ++i) {
    if (descending(i) > cut) ++rank;
  }
  return rank;
}

}  // namespace dbsketch
